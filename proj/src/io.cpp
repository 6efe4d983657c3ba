#include "recur/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "recur/error.hpp"

namespace recur {

namespace {

namespace fs = std::filesystem;

std::vector<double> number_array(const Json& value, const std::string& field)
{
    if (!value.is_array()) throw Error(ErrorKind::Validation, field + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_number())
            throw Error(ErrorKind::Validation, field + "[" + std::to_string(i) + "]: expected a number");
        out.push_back(value[i].get<double>());
    }
    return out;
}

std::vector<Symbol> symbol_array(const Json& value, const std::string& field)
{
    if (!value.is_array() || value.empty())
        throw Error(ErrorKind::Validation, field + ": expected a nonempty array of symbols");
    std::vector<Symbol> out;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_number_integer() || value[i].get<long long>() < 0 || value[i].get<long long>() >= kMaxAlphabet)
            throw Error(ErrorKind::Validation, field + "[" + std::to_string(i) + "]: expected an integer in [0, 255]");
        out.push_back(static_cast<Symbol>(value[i].get<int>()));
    }
    return out;
}

const Json& require(const Json& spec, const char* key)
{
    if (!spec.contains(key)) throw Error(ErrorKind::Validation, std::string(key) + ": missing");
    return spec.at(key);
}

double parse_probability(std::string_view text, std::string_view name)
{
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !(v > 0.0 && v < 1.0))
        throw Error(ErrorKind::Validation, "model: preset " + std::string(name) + " needs a parameter in (0, 1)");
    return v;
}

}  // namespace

SourceModel model_from_json(const Json& spec)
{
    if (!spec.is_object()) throw Error(ErrorKind::Validation, "model: expected a JSON object");
    const auto& kind_value = require(spec, "kind");
    if (!kind_value.is_string()) throw Error(ErrorKind::Validation, "kind: expected a string");
    const auto kind = kind_value.get<std::string>();

    SourceModel model = [&] {
        if (kind == "iid") return SourceModel::iid(number_array(require(spec, "pmf"), "pmf"));
        if (kind == "markov") {
            const auto& rows = require(spec, "transition");
            if (!rows.is_array() || rows.empty())
                throw Error(ErrorKind::Validation, "transition: expected a nonempty array of rows");
            TransitionMatrix p;
            for (std::size_t i = 0; i < rows.size(); ++i)
                p.push_back(number_array(rows[i], "transition[" + std::to_string(i) + "]"));
            return SourceModel::markov(p);
        }
        if (kind == "constant") {
            const auto& sym = require(spec, "symbol");
            if (!sym.is_number_integer() || sym.get<long long>() < 0 || sym.get<long long>() >= kMaxAlphabet)
                throw Error(ErrorKind::Validation, "symbol: expected an integer in [0, 255]");
            const int size = spec.contains("alphabet_size") ? spec.at("alphabet_size").get<int>()
                                                            : sym.get<int>() + 1;
            return SourceModel::constant(static_cast<Symbol>(sym.get<int>()), size);
        }
        if (kind == "periodic") return SourceModel::periodic(symbol_array(require(spec, "pattern"), "pattern"));
        throw Error(ErrorKind::Validation, "kind: unknown model kind '" + kind + "'");
    }();
    if (spec.contains("id")) {
        if (!spec.at("id").is_string()) throw Error(ErrorKind::Validation, "id: expected a string");
        model.set_id(spec.at("id").get<std::string>());
    }
    return model;
}

Json model_to_json(const SourceModel& model)
{
    Json out;
    out["kind"] = std::string(to_string(model.kind()));
    switch (model.kind()) {
    case SourceKind::Iid:
        out["pmf"] = std::vector<double>(model.marginal().begin(), model.marginal().end());
        break;
    case SourceKind::Markov: {
        Json rows = Json::array();
        for (int i = 0; i < model.alphabet_size(); ++i) {
            const auto row = model.transition_row(i);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        out["transition"] = rows;
        break;
    }
    case SourceKind::Constant:
        out["symbol"] = model.constant_symbol();
        out["alphabet_size"] = model.alphabet_size();
        break;
    case SourceKind::Periodic:
        out["pattern"] = std::vector<int>(model.pattern().begin(), model.pattern().end());
        break;
    }
    if (!model.id().empty()) out["id"] = model.id();
    return out;
}

SourceModel preset_model(std::string_view name)
{
    const auto colon = name.find(':');
    const auto head = name.substr(0, colon);
    const auto arg = colon == std::string_view::npos ? std::string_view{} : name.substr(colon + 1);
    SourceModel model = [&] {
        if (head == "uniform-binary" && arg.empty()) return SourceModel::iid({0.5, 0.5});
        if (head == "bernoulli") {
            const double p = parse_probability(arg, name);
            return SourceModel::iid({1.0 - p, p});
        }
        if (head == "flip") {
            const double q = parse_probability(arg, name);
            return SourceModel::markov({{1.0 - q, q}, {q, 1.0 - q}});
        }
        if (head == "markov-skew" && arg.empty()) return SourceModel::markov({{0.9, 0.1}, {0.5, 0.5}});
        if (head == "two-cycle" && arg.empty()) return SourceModel::markov({{0.0, 1.0}, {1.0, 0.0}});
        if (head == "constant" && arg.empty()) return SourceModel::constant(0, 2);
        if (head == "periodic" && !arg.empty()) {
            std::vector<Symbol> pattern;
            for (char c : arg) {
                if (c < '0' || c > '9')
                    throw Error(ErrorKind::Validation, "model: periodic pattern takes digits, e.g. periodic:01");
                pattern.push_back(static_cast<Symbol>(c - '0'));
            }
            return SourceModel::periodic(pattern);
        }
        throw Error(ErrorKind::Validation, "model: '" + std::string(name) +
                                               "' is neither a readable file nor a preset (uniform-binary, "
                                               "bernoulli:P, flip:Q, markov-skew, two-cycle, constant, periodic:01)");
    }();
    model.set_id(std::string(name));
    return model;
}

std::vector<std::string> preset_names()
{
    return {"uniform-binary", "bernoulli:0.3", "flip:0.1", "markov-skew", "two-cycle", "constant", "periodic:01"};
}

SourceModel resolve_model(const std::string& spec)
{
    std::error_code ec;
    if (fs::is_regular_file(spec, ec)) {
        auto model = model_from_json(read_json_file(spec));
        if (model.id().empty()) model.set_id(fs::path(spec).stem().string());
        return model;
    }
    return preset_model(spec);
}

Json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, path.string() + ": cannot open");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::Validation, path.string() + ": invalid JSON: " + e.what());
    }
}

void write_text_file(const fs::path& path, std::string_view text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, path.string() + ": cannot write");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorKind::Io, path.string() + ": write failed");
}

void save_realization(const fs::path& base, const Realization& real)
{
    const auto data = real.to_array();
    write_text_file(fs::path(base).concat(".bin"),
                    std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
    const Json header{{"origin", real.origin()}, {"alphabet_size", real.alphabet_size()}, {"length", data.size()}};
    write_text_file(fs::path(base).concat(".json"), header.dump(2) + "\n");
}

Realization load_realization(const fs::path& base)
{
    const auto header = read_json_file(fs::path(base).concat(".json"));
    for (const char* key : {"origin", "alphabet_size"})
        if (!header.contains(key) || !header.at(key).is_number_unsigned())
            throw Error(ErrorKind::Validation, std::string(key) + ": missing or not a nonnegative integer");
    const auto bin = fs::path(base).concat(".bin");
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, bin.string() + ": cannot open");
    std::vector<Symbol> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (header.contains("length") && header.at("length").get<std::size_t>() != data.size())
        throw Error(ErrorKind::Validation, "length: header says " + header.at("length").dump() + ", file has " +
                                               std::to_string(data.size()) + " bytes");
    return Realization(data, header.at("origin").get<std::size_t>(), header.at("alphabet_size").get<int>());
}

std::string format_double(double value)
{
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::vector<double> parse_number_list(std::string_view text, std::string_view field)
{
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = std::min(text.find(',', pos), text.size());
        auto item = text.substr(pos, comma - pos);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
            throw Error(ErrorKind::Validation,
                        std::string(field) + ": '" + std::string(item) + "' is not a number");
        out.push_back(v);
        pos = comma + 1;
    }
    return out;
}

}  // namespace recur
