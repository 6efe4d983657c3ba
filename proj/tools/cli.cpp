#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "recur/error.hpp"
#include "recur/estimators.hpp"
#include "recur/io.hpp"
#include "recur/ldp.hpp"
#include "recur/recurrence.hpp"
#include "recur/rng.hpp"
#include "recur/sources.hpp"

namespace recur::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kSymbolCap = 268435456.0;  // 2^28 symbols per realization
constexpr double kSymbolCapLog2 = 28.0;

// -- configuration ------------------------------------------------------------

enum class FlagKind { Number, NumberList, String, StringList, Bool };

struct FlagDef {
    std::string name;
    FlagKind kind;
    std::string help;
};

std::string key_of(std::string name)
{
    std::replace(name.begin(), name.end(), '-', '_');
    return name;
}

Json number_from_text(std::string_view text, const std::string& field)
{
    std::uint64_t u = 0;
    const auto* end = text.data() + text.size();
    if (auto [p, ec] = std::from_chars(text.data(), end, u); ec == std::errc() && p == end) return Json(u);
    return Json(parse_number_list(text, field).at(0));
}

Json flag_to_json(const FlagDef& def, const std::string& text)
{
    const auto field = key_of(def.name);
    switch (def.kind) {
    case FlagKind::Number:
        if (text.find(',') != std::string::npos)
            throw Error(ErrorKind::Validation, field + ": expected a single number");
        return number_from_text(text, field);
    case FlagKind::NumberList: {
        Json arr = Json::array();
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto comma = std::min(text.find(',', pos), text.size());
            arr.push_back(number_from_text(std::string_view(text).substr(pos, comma - pos), field));
            pos = comma + 1;
        }
        return arr;
    }
    case FlagKind::StringList: {
        Json arr = Json::array();
        std::stringstream ss(text);
        for (std::string item; std::getline(ss, item, ',');) arr.push_back(item);
        return arr;
    }
    case FlagKind::String: return Json(text);
    case FlagKind::Bool: return Json(true);
    }
    return Json();
}

/// Typed access to the merged configuration. Every value read is written
/// back (defaults included), so the object ends up as the fully resolved
/// configuration that the manifest echoes.
class Params {
public:
    explicit Params(Json& cfg) : cfg_(cfg) {}

    double number(const std::string& key, std::optional<double> def = std::nullopt)
    {
        const auto& v = fetch(key, def ? Json(*def) : Json());
        if (!v.is_number()) throw Error(ErrorKind::Validation, key + ": expected a number");
        return v.get<double>();
    }

    std::uint64_t count(const std::string& key, std::optional<std::uint64_t> def = std::nullopt)
    {
        const auto& v = fetch(key, def ? Json(*def) : Json());
        return to_count(v, key);
    }

    std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> def = std::nullopt)
    {
        auto& v = fetch(key, def ? Json(*def) : Json());
        if (v.is_number()) v = Json::array({v});
        if (!v.is_array() || v.empty()) throw Error(ErrorKind::Validation, key + ": expected a nonempty list");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number())
                throw Error(ErrorKind::Validation, key + "[" + std::to_string(i) + "]: expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    std::vector<std::size_t> counts(const std::string& key,
                                    std::optional<std::vector<std::size_t>> def = std::nullopt)
    {
        auto& v = fetch(key, def ? Json(*def) : Json());
        if (v.is_number()) v = Json::array({v});
        if (!v.is_array() || v.empty()) throw Error(ErrorKind::Validation, key + ": expected a nonempty list");
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(static_cast<std::size_t>(to_count(v[i], key + "[" + std::to_string(i) + "]")));
        return out;
    }

    std::string text(const std::string& key, std::optional<std::string> def = std::nullopt)
    {
        const auto& v = fetch(key, def ? Json(*def) : Json());
        if (!v.is_string()) throw Error(ErrorKind::Validation, key + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<std::string> texts(const std::string& key)
    {
        auto& v = fetch(key, Json());
        if (v.is_string()) v = Json::array({v});
        if (!v.is_array() || v.empty()) throw Error(ErrorKind::Validation, key + ": expected a nonempty list");
        std::vector<std::string> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_string())
                throw Error(ErrorKind::Validation, key + "[" + std::to_string(i) + "]: expected a string");
            out.push_back(v[i].get<std::string>());
        }
        return out;
    }

    bool flag(const std::string& key, bool def)
    {
        const auto& v = fetch(key, Json(def));
        if (!v.is_boolean()) throw Error(ErrorKind::Validation, key + ": expected true or false");
        return v.get<bool>();
    }

    bool has(const std::string& key) const { return cfg_.contains(key); }

    SourceModel model()
    {
        const auto& v = fetch("model", Json());
        SourceModel m = v.is_string() ? resolve_model(v.get<std::string>()) : model_from_json(v);
        if (m.id().empty()) m.set_id("custom");
        cfg_["model"] = model_to_json(m);
        return m;
    }

private:
    Json& fetch(const std::string& key, const Json& def)
    {
        if (!cfg_.contains(key)) {
            if (def.is_null()) throw Error(ErrorKind::Validation, key + ": required");
            cfg_[key] = def;
        }
        return cfg_[key];
    }

    static std::uint64_t to_count(const Json& v, const std::string& key)
    {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
        }
        throw Error(ErrorKind::Validation, key + ": expected a nonnegative integer");
    }

    Json& cfg_;
};

struct Context {
    Params& params;
    fs::path out_dir;
    Parallelism par;
    std::ostream& out;
    std::ostream& err;
};

using Handler = std::function<std::vector<std::string>(Context&)>;

struct SubcommandDef {
    std::string name;
    std::string description;
    std::vector<FlagDef> flags;
    Handler run;
};

// -- output helpers -------------------------------------------------------------

class Csv {
public:
    explicit Csv(std::initializer_list<std::string_view> header) { row_of(header); }

    template <class... T>
    void row(const T&... cells)
    {
        bool first = true;
        ((put(cells, first)), ...);
        text_ << '\n';
    }

    void write(const fs::path& path) const { write_text_file(path, text_.str()); }

private:
    void row_of(std::initializer_list<std::string_view> cells)
    {
        bool first = true;
        for (auto c : cells) put(c, first);
        text_ << '\n';
    }

    template <class T>
    void put(const T& cell, bool& first)
    {
        if (!first) text_ << ',';
        first = false;
        if constexpr (std::is_same_v<T, double> || std::is_same_v<T, float>)
            text_ << format_double(cell);
        else
            text_ << cell;
    }

    std::ostringstream text_;
};

std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::vector<Symbol> parse_block(const std::string& text)
{
    if (text.empty()) throw Error(ErrorKind::Validation, "blocks: empty block");
    std::vector<Symbol> out;
    for (char c : text) {
        if (c < '0' || c > '9')
            throw Error(ErrorKind::Validation, "blocks: '" + text + "' must be a string of digit symbols");
        out.push_back(static_cast<Symbol>(c - '0'));
    }
    return out;
}

void guard_symbols(double symbols, const std::string& what)
{
    if (symbols > kSymbolCap) {
        throw Error(ErrorKind::ThresholdTooLarge,
                    what + " needs " + fixed(symbols, 0) + " symbols, above the 2^28-symbol cap per realization");
    }
}

// Threshold 2^{n (H +- eps)} must fit one realization. Prints the n <-> 2^{nH}
// sizing relation when it does not.
void guard_threshold_exponent(double exponent_per_symbol, std::size_t n)
{
    const double exponent = static_cast<double>(n) * exponent_per_symbol;
    if (exponent > kSymbolCapLog2) {
        const auto n_max = static_cast<long long>(std::floor(kSymbolCapLog2 / exponent_per_symbol));
        throw Error(ErrorKind::ThresholdTooLarge,
                    "n = " + std::to_string(n) + ": threshold 2^" + fixed(exponent, 2) +
                        " exceeds the 2^28-symbol cap; recurrence times scale as 2^{n(H+-eps)} = 2^{n*" +
                        fixed(exponent_per_symbol, 4) + "}, so use n <= " + std::to_string(n_max));
    }
}

// -- subcommands ----------------------------------------------------------------

std::vector<std::string> cmd_model_info(Context& ctx)
{
    const auto model = ctx.params.model();
    const auto h = entropy_rate(model);
    Json info;
    info["model_id"] = model.id();
    info["kind"] = std::string(to_string(model.kind()));
    info["alphabet_size"] = model.alphabet_size();
    info["entropy_bits"] = h.bits_per_symbol;
    info["entropy_nats"] = h.nats_per_symbol();
    info["stationary"] = std::vector<double>(model.marginal().begin(), model.marginal().end());

    ctx.out << "model: " << model.id() << " (" << to_string(model.kind()) << ", alphabet " << model.alphabet_size()
            << ")\n";
    ctx.out << "H = " << fixed(h.bits_per_symbol, 5) << " bits/symbol (" << fixed(h.nats_per_symbol(), 5)
            << " nats)\n";
    ctx.out << "stationary:";
    for (double p : model.marginal()) ctx.out << ' ' << fixed(p, 5);
    ctx.out << '\n';

    if (model.kind() == SourceKind::Markov) {
        TransitionMatrix p(static_cast<std::size_t>(model.alphabet_size()));
        for (int i = 0; i < model.alphabet_size(); ++i) {
            const auto row = model.transition_row(i);
            p[static_cast<std::size_t>(i)].assign(row.begin(), row.end());
        }
        const auto cls = classify_chain(p);
        info["irreducible"] = cls.irreducible;
        info["aperiodic"] = cls.aperiodic;
        info["period"] = cls.period;
        ctx.out << "chain: " << (cls.irreducible ? "irreducible" : "not irreducible") << ", period " << cls.period
                << ", " << (cls.aperiodic ? "aperiodic" : "not aperiodic") << '\n';
        std::vector<std::string> unmet;
        if (!cls.irreducible) unmet.emplace_back("not irreducible");
        if (!cls.aperiodic) unmet.emplace_back("not aperiodic");
        if (!unmet.empty()) {
            std::string msg = "Corollary 1 hypotheses not met: " + unmet[0];
            if (unmet.size() > 1) msg += ", " + unmet[1];
            info["warning"] = msg;
            ctx.out << "warning: " << msg << '\n';
        }
    }
    write_text_file(ctx.out_dir / "model_info.json", info.dump(2) + "\n");
    return {"model_info.json"};
}

std::vector<std::string> cmd_simulate(Context& ctx)
{
    const auto model = ctx.params.model();
    const auto seed = ctx.params.count("seed", 0);
    const auto length = ctx.params.count("length", 4096);
    const auto past = ctx.params.count("past", 1024);
    if (length == 0 || past == 0) throw Error(ErrorKind::Validation, "length and past: must be at least 1");
    guard_symbols(static_cast<double>(length) + static_cast<double>(past), "simulate");
    const auto real = generate_realization(model, past, length, seed);
    save_realization(ctx.out_dir / "realization", real);
    ctx.out << "wrote " << past << " past and " << length << " present symbols\n";
    return {"realization.bin", "realization.json"};
}

std::vector<std::string> cmd_recur(Context& ctx)
{
    auto& p = ctx.params;
    const auto model = p.model();
    const auto seed = p.count("seed", 0);
    const auto past = p.count("past", 65536);
    const auto present = p.count("present", 256);
    const auto n_list = p.counts("n", std::vector<std::size_t>{1, 2, 4, 8, 12, 16});
    const auto m_list = p.counts("m", std::vector<std::size_t>{16, 256, 4096});
    guard_symbols(static_cast<double>(past) + static_cast<double>(present), "recur");
    if (past == 0) throw Error(ErrorKind::Validation, "past: must be at least 1");
    const auto real = generate_realization(model, past, present, seed);

    Csv csv{"model_id", "quantity", "param", "value", "status", "seed"};
    for (auto n : n_list) {
        const auto r = recurrence_indexed(real, n, real.past_length());
        if (r.found())
            csv.row(model.id(), "R", n, r.r(), "found", seed);
        else
            csv.row(model.id(), "R", n, real.past_length(), "censored", seed);
    }
    for (auto m : m_list) {
        const auto l = match_length(real, m);
        csv.row(model.id(), "L", m, l.length(), l.exact() ? "exact" : "future_limited", seed);
    }
    csv.write(ctx.out_dir / "recur.csv");
    return {"recur.csv"};
}

std::vector<std::uint64_t> seed_list(Params& p)
{
    const auto seed = p.count("seed", 0);
    const auto seeds = p.count("seeds", 20);
    if (seeds == 0) throw Error(ErrorKind::Validation, "seeds: must be at least 1");
    std::vector<std::uint64_t> out(seeds);
    for (std::uint64_t i = 0; i < seeds; ++i) out[i] = seed + i;
    return out;
}

QSchedule schedule_of(Params& p)
{
    QSchedule s{p.number("c", 1.0), p.number("k", 2.0)};
    s.validate();
    return s;
}

std::vector<std::string> cmd_estimate(Context& ctx)
{
    auto& p = ctx.params;
    const auto model = p.model();
    const auto n_list = p.counts("n", std::vector<std::size_t>{8, 12, 16});
    const auto schedule = schedule_of(p);
    const auto seeds = seed_list(p);
    std::optional<std::uint64_t> w_max;
    if (p.has("w_max")) w_max = p.count("w_max");
    if (w_max) guard_symbols(static_cast<double>(*w_max), "w_max");

    const auto sweep = convergence_sweep(model, n_list, schedule, seeds, w_max, ctx.par);
    Csv rows{"model_id", "n", "Q", "estimate_bits", "censored", "flag", "seed"};
    for (const auto& r : sweep.rows)
        rows.row(model.id(), r.report.n, r.report.q, r.report.estimate_bits, r.report.censored_count,
                 to_string(r.report.flag), r.seed);
    rows.write(ctx.out_dir / "estimates.csv");

    Csv summary{"model_id", "n", "Q", "w_max", "mean_bits", "sd_bits", "mean_abs_error", "censored_total",
                "entropy_bits"};
    for (const auto& s : sweep.summary) {
        summary.row(model.id(), s.n, s.q, s.w_max, s.mean, s.sd, s.mean_abs_error, s.censored_total,
                    sweep.entropy_bits);
        ctx.out << "n = " << s.n << ": mean J_n = " << fixed(s.mean, 5) << " (sd " << fixed(s.sd, 5)
                << "), |J_n - H| = " << fixed(s.mean_abs_error, 5) << ", censored " << s.censored_total << '\n';
    }
    summary.write(ctx.out_dir / "estimate_summary.csv");
    return {"estimates.csv", "estimate_summary.csv"};
}

std::vector<std::string> cmd_tails(Context& ctx)
{
    auto& p = ctx.params;
    const auto model = p.model();
    const auto side = parse_tail_side(p.text("side", "upper"));
    const auto eps_list = p.numbers("eps");
    const auto trials = p.count("trials", 10000);
    const auto seed = p.count("seed", 0);
    const auto boundary_text = p.text("boundary", "strict");
    if (boundary_text != "strict" && boundary_text != "weak")
        throw Error(ErrorKind::Validation, "boundary: expected strict or weak");
    const auto boundary = boundary_text == "strict" ? Boundary::Strict : Boundary::Weak;
    const double h = entropy_rate(model).bits_per_symbol;
    const bool match_side = side == TailSide::MatchUpper || side == TailSide::MatchLower;

    std::vector<std::size_t> n_list;
    std::vector<std::size_t> m_list;
    if (match_side && p.has("m"))
        m_list = p.counts("m");
    else
        n_list = p.counts("n");

    Csv csv{"model_id", "n", "epsilon", "side", "trials", "hits", "p_hat", "ci_low", "ci_high", "threshold", "seed"};
    auto emit = [&](const TailEstimate& e) {
        csv.row(model.id(), e.n, e.epsilon, to_string(e.side), e.trials, e.hits, e.p_hat, e.ci_low, e.ci_high,
                e.threshold, e.master_seed);
    };
    for (double eps : eps_list) {
        if (match_side) {
            // Without an explicit m list, each n maps to m = floor(2^{n(H+eps)}).
            std::vector<std::size_t> ms = m_list;
            for (auto n : n_list) {
                guard_threshold_exponent(h + eps, n);
                ms.push_back(match_window_for(n, h, eps));
            }
            for (auto m : ms) {
                guard_symbols(static_cast<double>(m), "m");
                emit(mc_tail_match(model, m, eps, side, trials, seed, ctx.par));
            }
            continue;
        }
        for (auto n : n_list) {
            switch (side) {
            case TailSide::Upper:
                guard_threshold_exponent(h + eps, n);
                emit(mc_tail_upper(model, n, eps, trials, seed, boundary, ctx.par));
                break;
            case TailSide::Lower:
                if (eps < h) guard_threshold_exponent(h - eps, n);
                emit(mc_tail_lower(model, n, eps, trials, seed, boundary, ctx.par));
                break;
            default: emit(mc_tail_aep(model, n, eps, trials, seed, ctx.par)); break;
            }
        }
    }
    csv.write(ctx.out_dir / "tails.csv");
    return {"tails.csv"};
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const
    {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorKind::Validation, "input: no column named '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

CsvTable read_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, path.string() + ": cannot open");
    CsvTable t;
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        return cells;
    };
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Validation, path.string() + ": empty CSV");
    t.header = split(line);
    for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size())
            throw Error(ErrorKind::Validation, path.string() + ": line " + std::to_string(lineno) + " has " +
                                                   std::to_string(cells.size()) + " fields, expected " +
                                                   std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

double cell_number(const std::string& cell, const std::string& column)
{
    return parse_number_list(cell, column).at(0);
}

std::vector<std::string> cmd_rate_fit(Context& ctx)
{
    auto& p = ctx.params;
    const auto input = p.text("input");
    const auto table = read_csv(input);
    const auto c_model = table.column("model_id"), c_n = table.column("n"), c_eps = table.column("epsilon"),
               c_side = table.column("side"), c_p = table.column("p_hat"), c_hits = table.column("hits");

    // Groups keep first-appearance order.
    std::vector<std::tuple<std::string, std::string, std::string>> keys;
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<RatePoint>> groups;
    for (const auto& r : table.rows) {
        auto key = std::make_tuple(r[c_model], r[c_eps], r[c_side]);
        if (!groups.count(key)) keys.push_back(key);
        groups[key].push_back({cell_number(r[c_n], "n"), cell_number(r[c_p], "p_hat"),
                               static_cast<std::uint64_t>(cell_number(r[c_hits], "hits"))});
    }

    std::optional<SourceModel> model;
    if (p.has("model")) model = p.model();

    Csv fits{"model_id", "epsilon", "side", "slope_nats", "intercept", "r2", "points_used"};
    Csv anchors{"model_id", "epsilon", "side", "slope_nats", "cramer_k_half_eps_nats"};
    std::size_t fitted = 0;
    for (const auto& key : keys) {
        const auto& [model_id, eps_text, side_text] = key;
        const double eps = cell_number(eps_text, "epsilon");
        const auto side = parse_tail_side(side_text);
        RateFit fit;
        try {
            fit = fit_rate(groups[key], eps, side);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InsufficientPoints) throw;
            ctx.err << "skipping " << model_id << " eps=" << eps_text << " side=" << side_text << ": " << e.what()
                    << '\n';
            continue;
        }
        ++fitted;
        fits.row(model_id, eps_text, side_text, fit.slope_nats, fit.intercept, fit.r_squared, fit.points.size());
        ctx.out << model_id << " eps=" << eps_text << " " << side_text << ": slope " << fixed(fit.slope_nats, 5)
                << " nats/symbol, r2 " << fixed(fit.r_squared, 4) << '\n';
        if (model && model->kind() == SourceKind::Iid && model->id() == model_id) {
            // Cramer anchor k(eps/2) = min of the rate at H +- eps/2, in nats.
            const double h_nats = entropy_rate(*model).nats_per_symbol();
            const double half = 0.5 * eps * std::log(2.0);
            const auto up = cramer_rate_iid(model->marginal(), h_nats + half);
            const auto lo = cramer_rate_iid(model->marginal(), h_nats - half);
            anchors.row(model_id, eps_text, side_text, fit.slope_nats, std::min(up.rate_nats, lo.rate_nats));
        }
    }
    if (fitted == 0) throw Error(ErrorKind::InsufficientPoints, "no group in the input has 3 points with >= 5 hits");
    fits.write(ctx.out_dir / "fits.csv");
    std::vector<std::string> outputs{"fits.csv"};
    if (model && model->kind() == SourceKind::Iid) {
        anchors.write(ctx.out_dir / "anchors.csv");
        outputs.emplace_back("anchors.csv");
    }
    return outputs;
}

std::vector<std::string> cmd_aep(Context& ctx)
{
    auto& p = ctx.params;
    const auto model = p.model();
    const auto n_list = p.counts("n", std::vector<std::size_t>{10, 50, 100, 200, 400});
    const auto deltas = p.numbers("delta", std::vector<double>{0.2});
    const auto trials = p.count("trials", 0);
    const auto seed = p.count("seed", 0);

    Csv csv = trials > 0 ? Csv{"model_id", "n", "delta", "p_exact", "rate_nats", "trials", "hits", "p_hat", "ci_low",
                               "ci_high", "seed"}
                         : Csv{"model_id", "n", "delta", "p_exact", "rate_nats"};
    for (double delta : deltas) {
        for (auto n : n_list) {
            std::string exact_p, rate;
            try {
                const auto tail = aep_tail_exact(model, n, delta);
                exact_p = format_double(tail.probability);
                rate = format_double(-tail.ln_probability / static_cast<double>(n));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::TooLargeToEnumerate || trials == 0) throw;
                ctx.err << "n = " << n << ": exact tail skipped (" << e.what() << ")\n";
            }
            if (trials > 0) {
                const auto mc = mc_tail_aep(model, n, delta, trials, seed, ctx.par);
                csv.row(model.id(), n, delta, exact_p, rate, mc.trials, mc.hits, mc.p_hat, mc.ci_low, mc.ci_high,
                        mc.master_seed);
            } else {
                csv.row(model.id(), n, delta, exact_p, rate);
            }
        }
    }
    csv.write(ctx.out_dir / "aep.csv");
    return {"aep.csv"};
}

std::vector<std::string> cmd_cramer(Context& ctx)
{
    auto& p = ctx.params;
    const auto model = p.model();
    if (model.kind() != SourceKind::Iid)
        throw Error(ErrorKind::ModelUnsupported, "model: the Cramer rate is computed for iid models only");
    const double h_nats = entropy_rate(model).nats_per_symbol();
    Csv csv{"model_id", "side", "delta", "level_nats", "rate_nats", "argmax_lambda", "degenerate"};
    auto emit = [&](std::string_view side, const std::string& delta, const CramerRate& r) {
        csv.row(model.id(), side, delta, r.level_nats, r.rate_nats, r.argmax_lambda, r.degenerate ? 1 : 0);
    };
    if (p.has("level")) {
        for (double a : p.numbers("level")) emit("level", "", cramer_rate_iid(model.marginal(), a));
    }
    if (p.has("delta") || !p.has("level")) {
        for (double delta : p.numbers("delta", std::vector<double>{0.2})) {
            const auto up = cramer_rate_iid(model.marginal(), h_nats + delta * std::log(2.0));
            const auto lo = cramer_rate_iid(model.marginal(), h_nats - delta * std::log(2.0));
            emit("upper", format_double(delta), up);
            emit("lower", format_double(delta), lo);
            ctx.out << "delta = " << format_double(delta) << ": I(H+delta) = " << fixed(up.rate_nats, 6)
                    << ", I(H-delta) = " << fixed(lo.rate_nats, 6)
                    << ", k = " << fixed(std::min(up.rate_nats, lo.rate_nats), 6) << " nats/symbol\n";
        }
    }
    csv.write(ctx.out_dir / "cramer.csv");
    return {"cramer.csv"};
}

std::vector<std::string> cmd_kim(Context& ctx)
{
    auto& p = ctx.params;
    const auto model = p.model();
    const auto blocks = p.texts("blocks");
    const auto samples = p.count("samples", 10000);
    const auto seed = p.count("seed", 0);
    const auto u_max = p.number("u_max", 10.0);
    Csv csv{"model_id", "block", "samples", "ks", "mean_U", "censored"};
    for (const auto& b : blocks) {
        const auto block = parse_block(b);
        const auto r = kim_check(model, block, samples, seed, u_max, ctx.par);
        csv.row(model.id(), b, r.samples, r.ks_distance, r.mean_u, r.censored);
        ctx.out << "block " << b << ": KS = " << fixed(r.ks_distance, 4) << ", mean U = " << fixed(r.mean_u, 4)
                << ", censored " << r.censored << '\n';
    }
    csv.write(ctx.out_dir / "kim.csv");
    return {"kim.csv"};
}

std::vector<std::string> cmd_kac(Context& ctx)
{
    auto& p = ctx.params;
    const auto model = p.model();
    const auto blocks = p.texts("blocks");
    const auto samples = p.count("samples", 100000);
    const auto seed = p.count("seed", 0);
    const auto u_max = p.number("u_max", 1000.0);
    Csv csv{"model_id", "block", "samples", "mean_Rn", "target", "rel_err", "censored"};
    for (const auto& b : blocks) {
        const auto block = parse_block(b);
        const auto r = kac_check(model, block, samples, seed, u_max, ctx.par);
        csv.row(model.id(), b, r.samples, r.mean_rn, r.target, r.rel_err, r.censored);
        ctx.out << "block " << b << ": mean R_n = " << fixed(r.mean_rn, 4) << ", 1/P = " << fixed(r.target, 4)
                << ", rel_err " << fixed(r.rel_err, 5) << '\n';
    }
    csv.write(ctx.out_dir / "kac.csv");
    return {"kac.csv"};
}

std::vector<std::string> cmd_compare(Context& ctx)
{
    auto& p = ctx.params;
    const auto model = p.model();
    const auto n_list = p.counts("n", std::vector<std::size_t>{8, 12, 16});
    const auto schedule = schedule_of(p);
    const auto seeds = seed_list(p);
    const double h = entropy_rate(model).bits_per_symbol;

    struct Row {
        std::size_t n, m, q;
        std::uint64_t seed;
        EstimateReport jn, dual;
    };
    std::vector<Row> rows(n_list.size() * seeds.size());
    for (auto n : n_list) {
        // The dual uses the window whose typical match length is n.
        const double m = std::max(2.0, std::round(std::exp2(static_cast<double>(n) * h)));
        guard_symbols(std::max(m, static_cast<double>(default_w_max(n, h))), "compare-estimators");
    }
    parallel_for(rows.size(), ctx.par, [&](std::size_t idx) {
        Row& row = rows[idx];
        row.n = n_list[idx / seeds.size()];
        row.seed = seeds[idx % seeds.size()];
        row.m = static_cast<std::size_t>(std::max(2.0, std::round(std::exp2(static_cast<double>(row.n) * h))));
        row.q = schedule.windows(row.n);
        const auto w_max = default_w_max(row.n, h);
        const auto past = std::max<std::size_t>(w_max, row.m);
        const auto real =
            generate_realization(model, past, row.q + 4 * row.n + 64, derive_seed(row.seed, row.n));
        row.jn = estimate_Jn(real, row.n, schedule, w_max);
        row.dual = estimate_match_dual(real, row.m, row.q);
    });

    Csv csv{"model_id", "n", "m", "Q", "seed", "jn_bits", "jn_censored", "jn_flag", "dual_bits", "dual_censored",
            "dual_flag"};
    for (const auto& r : rows)
        csv.row(model.id(), r.n, r.m, r.q, r.seed, r.jn.estimate_bits, r.jn.censored_count, to_string(r.jn.flag),
                r.dual.estimate_bits, r.dual.censored_count, to_string(r.dual.flag));
    csv.write(ctx.out_dir / "compare.csv");
    for (std::size_t a = 0; a < n_list.size(); ++a) {
        double jn = 0.0, dual = 0.0;
        for (std::size_t b = 0; b < seeds.size(); ++b) {
            jn += rows[a * seeds.size() + b].jn.estimate_bits;
            dual += rows[a * seeds.size() + b].dual.estimate_bits;
        }
        const auto k = static_cast<double>(seeds.size());
        ctx.out << "n = " << n_list[a] << ": J_n " << fixed(jn / k, 5) << ", match dual " << fixed(dual / k, 5)
                << ", H " << fixed(h, 5) << '\n';
    }
    return {"compare.csv"};
}

// -- plot -------------------------------------------------------------------------

std::string svg_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::vector<std::string> cmd_plot(Context& ctx)
{
    auto& p = ctx.params;
    const auto input = p.text("input");
    const auto x_col = p.text("x", "n");
    const auto y_col = p.text("y", "p_hat");
    const auto group_cols = p.has("group") ? p.texts("group") : std::vector<std::string>{};
    const bool log_y = p.flag("log_y", false);
    const auto title = p.text("title", y_col + " vs " + x_col);
    const auto output = p.text("output", "plot.svg");

    const auto table = read_csv(input);
    const auto xi = table.column(x_col), yi = table.column(y_col);
    std::vector<std::size_t> gi;
    for (const auto& g : group_cols) gi.push_back(table.column(g));

    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    for (const auto& r : table.rows) {
        std::string key;
        for (std::size_t k = 0; k < gi.size(); ++k) key += (k ? " " : "") + group_cols[k] + "=" + r[gi[k]];
        if (r[xi].empty() || r[yi].empty()) continue;
        const double x = cell_number(r[xi], x_col);
        double y = cell_number(r[yi], y_col);
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        if (log_y) {
            if (y <= 0.0) continue;
            y = std::log10(y);
        }
        if (!series.count(key)) order.push_back(key);
        series[key].emplace_back(x, y);
    }
    if (series.empty()) throw Error(ErrorKind::InsufficientData, "input: no plottable points");

    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& [key, pts] : series)
        for (const auto& [x, y] : pts) {
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    if (log_y) y0 = std::floor(y0), y1 = std::ceil(y1);
    if (x1 == x0) x0 -= 1, x1 += 1;
    if (y1 == y0) y0 -= 1, y1 += 1;

    constexpr double W = 720, H = 440, L = 80, R = 180, T = 40, B = 60;
    auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << svg_escape(title)
        << "</text>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double x = x0 + (x1 - x0) * i / 5.0;
        svg << "<text x=\"" << fixed(sx(x), 1) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
            << format_double(std::round(x * 1000) / 1000) << "</text>\n";
    }
    const int y_ticks = log_y ? static_cast<int>(std::min(10.0, y1 - y0)) : 5;
    for (int i = 0; i <= y_ticks; ++i) {
        const double y = y0 + (y1 - y0) * i / y_ticks;
        const std::string label = log_y ? "1e" + format_double(y) : format_double(std::round(y * 1000) / 1000);
        svg << "<text x=\"" << L - 6 << "\" y=\"" << fixed(sy(y) + 4, 1) << "\" text-anchor=\"end\">" << label
            << "</text>\n";
        svg << "<line x1=\"" << L << "\" y1=\"" << fixed(sy(y), 1) << "\" x2=\"" << W - R << "\" y2=\""
            << fixed(sy(y), 1) << "\" stroke=\"#ddd\"/>\n";
    }
    svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 20 << "\" text-anchor=\"middle\">"
        << svg_escape(x_col) << "</text>\n";
    svg << "<text x=\"20\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
        << (T + H - B) / 2 << ")\">" << svg_escape(log_y ? y_col + " (log scale)" : y_col) << "</text>\n";

    for (std::size_t s = 0; s < order.size(); ++s) {
        auto pts = series[order[s]];
        std::stable_sort(pts.begin(), pts.end(), [](auto a, auto b) { return a.first < b.first; });
        const char* color = palette[s % std::size(palette)];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : pts) svg << fixed(sx(x), 1) << ',' << fixed(sy(y), 1) << ' ';
        svg << "\"/>\n";
        for (const auto& [x, y] : pts)
            svg << "<circle cx=\"" << fixed(sx(x), 1) << "\" cy=\"" << fixed(sy(y), 1) << "\" r=\"3\" fill=\""
                << color << "\"/>\n";
        if (!order[s].empty())
            svg << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (s + 1) << "\" fill=\"" << color << "\">"
                << svg_escape(order[s]) << "</text>\n";
    }
    svg << "</svg>\n";
    write_text_file(ctx.out_dir / output, svg.str());
    return {output};
}

// -- driver -----------------------------------------------------------------------

std::vector<SubcommandDef> subcommands()
{
    using K = FlagKind;
    return {
        {"model-info", "entropy rate, stationary law and chain classification", {}, cmd_model_info},
        {"simulate",
         "draw one realization and dump it as raw bytes plus a JSON header",
         {{"length", K::Number, "present symbols"}, {"past", K::Number, "past symbols"}},
         cmd_simulate},
        {"recur",
         "recurrence times and match lengths on one realization",
         {{"n", K::NumberList, "block lengths"},
          {"m", K::NumberList, "match windows"},
          {"past", K::Number, "past symbols"},
          {"present", K::Number, "present symbols"}},
         cmd_recur},
        {"estimate",
         "J_n convergence sweep over block lengths and seeds",
         {{"n", K::NumberList, "block lengths"},
          {"seeds", K::Number, "number of seeds (seed, seed+1, ...)"},
          {"c", K::Number, "schedule Q(n) = ceil(c n^k): c"},
          {"k", K::Number, "schedule exponent k"},
          {"w-max", K::Number, "search window override"}},
         cmd_estimate},
        {"tails",
         "Monte Carlo deviation probabilities",
         {{"side", K::String, "upper, lower, aep, match_upper or match_lower"},
          {"n", K::NumberList, "block lengths"},
          {"m", K::NumberList, "match windows (match sides)"},
          {"eps", K::NumberList, "deviations (delta for the aep side)"},
          {"trials", K::Number, "trials per point"},
          {"boundary", K::String, "strict or weak threshold comparison"}},
         cmd_tails},
        {"rate-fit",
         "exponential decay fits from a tails CSV",
         {{"input", K::String, "tails CSV"}},
         cmd_rate_fit},
        {"aep",
         "exact (and optionally Monte Carlo) AEP tail",
         {{"n", K::NumberList, "block lengths"},
          {"delta", K::NumberList, "deviations in bits"},
          {"trials", K::Number, "Monte Carlo trials (0 = exact only)"}},
         cmd_aep},
        {"cramer",
         "Cramer rate of -ln p(X) for iid models",
         {{"level", K::NumberList, "levels in nats"}, {"delta", K::NumberList, "deviations in bits around H"}},
         cmd_cramer},
        {"kim-check",
         "conditional exponential law of R_n P(block)",
         {{"blocks", K::StringList, "blocks, e.g. 0000001,0000000"},
          {"samples", K::Number, "conditional samples"},
          {"u-max", K::Number, "largest U resolved"}},
         cmd_kim},
        {"kac-check",
         "conditional mean return time against 1/P(block)",
         {{"blocks", K::StringList, "blocks, e.g. 000"},
          {"samples", K::Number, "conditional samples"},
          {"u-max", K::Number, "largest U resolved"}},
         cmd_kac},
        {"compare-estimators",
         "J_n against the match-length dual",
         {{"n", K::NumberList, "block lengths"},
          {"seeds", K::Number, "number of seeds"},
          {"c", K::Number, "schedule c"},
          {"k", K::Number, "schedule k"}},
         cmd_compare},
        {"plot",
         "SVG line plot of two CSV columns",
         {{"input", K::String, "CSV file"},
          {"x", K::String, "x column"},
          {"y", K::String, "y column"},
          {"group", K::StringList, "columns that split series"},
          {"log-y", K::Bool, "log-scale y axis"},
          {"title", K::String, "plot title"},
          {"output", K::String, "SVG file name inside --out"}},
         cmd_plot},
    };
}

Json load_config(const std::string& path, const std::string& subcommand)
{
    const auto file = read_json_file(path);
    if (!file.is_object()) throw Error(ErrorKind::Validation, "config: expected a JSON object");
    if (!file.contains("schema_version")) throw Error(ErrorKind::Validation, "schema_version: missing");
    if (file.at("schema_version") != kSchemaVersion)
        throw Error(ErrorKind::Validation, "schema_version: unsupported value " + file.at("schema_version").dump() +
                                               " (expected " + std::to_string(kSchemaVersion) + ")");
    if (file.contains("subcommand") && file.at("subcommand") != subcommand)
        throw Error(ErrorKind::Validation, "subcommand: config is for " + file.at("subcommand").dump());
    // A manifest nests the resolved parameters under "config".
    Json cfg = file.contains("config") ? file.at("config") : file;
    if (!cfg.is_object()) throw Error(ErrorKind::Validation, "config: expected an object");
    for (const char* key : {"schema_version", "subcommand", "artifact", "outputs", "threads"}) cfg.erase(key);
    return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Recurrence times, entropy estimation and large-deviation checks", "recur-ldp"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(RECUR_VERSION));

    const auto defs = subcommands();
    struct Bound {
        std::string config, seed, out_dir = "out", model;
        int threads = 0;
        std::map<std::string, std::string> values;
    };
    std::vector<Bound> bound(defs.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < defs.size(); ++i) {
        auto* sub = app.add_subcommand(defs[i].name, defs[i].description);
        auto& b = bound[i];
        sub->add_option("--config", b.config, "JSON config or manifest");
        sub->add_option("--model", b.model, "model JSON file or preset");
        sub->add_option("--seed", b.seed, "master seed (u64)");
        sub->add_option("--out", b.out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", b.threads, "worker threads, 0 = auto")->check(CLI::NonNegativeNumber);
        for (const auto& f : defs[i].flags) {
            if (f.kind == FlagKind::Bool)
                sub->add_flag("--" + f.name, f.help);
            else
                sub->add_option("--" + f.name, b.values[f.name], f.help);
        }
        subs.push_back(sub);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    std::size_t which = 0;
    while (!subs[which]->parsed()) ++which;
    const auto& def = defs[which];
    auto* sub = subs[which];
    auto& b = bound[which];

    try {
        Json cfg = b.config.empty() ? Json::object() : load_config(b.config, def.name);
        if (sub->count("--model")) cfg["model"] = b.model;
        if (sub->count("--seed")) cfg["seed"] = flag_to_json({"seed", FlagKind::Number, ""}, b.seed);
        for (const auto& f : def.flags) {
            if (sub->count("--" + f.name) == 0) continue;
            cfg[key_of(f.name)] = flag_to_json(f, f.kind == FlagKind::Bool ? "" : b.values[f.name]);
        }
        if (cfg.contains("seed") && !cfg.at("seed").is_number_unsigned() &&
            !(cfg.at("seed").is_number_integer() && cfg.at("seed").get<long long>() >= 0))
            throw Error(ErrorKind::Validation, "seed: expected an unsigned 64-bit integer");

        const fs::path out_dir = b.out_dir;
        fs::create_directories(out_dir);
        Params params(cfg);
        Context ctx{params, out_dir, Parallelism{b.threads}, out, err};
        const auto outputs = def.run(ctx);

        Json manifest;
        manifest["schema_version"] = kSchemaVersion;
        manifest["artifact"] = {{"name", "recur-ldp"}, {"version", RECUR_VERSION}};
        manifest["subcommand"] = def.name;
        manifest["config"] = cfg;
        manifest["outputs"] = outputs;
        manifest["threads"] = resolve_threads(b.threads);
        write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
        err << "resolved config: " << cfg.dump() << '\n';
        return 0;
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return is_runtime_guard(e.kind()) ? 3 : 2;
    } catch (const fs::filesystem_error& e) {
        err << "error (io): " << e.what() << '\n';
        return 2;
    } catch (const Json::exception& e) {
        err << "error (validation): " << e.what() << '\n';
        return 2;
    }
}

}  // namespace recur::cli
