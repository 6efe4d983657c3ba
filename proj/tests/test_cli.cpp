#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    Run r;
    r.code = recur::cli::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("recur_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

bool contains(const std::string& text, const std::string& part)
{
    return text.find(part) != std::string::npos;
}

}  // namespace

TEST_CASE("model-info prints the entropy rate")
{
    const auto dir = scratch("info");
    const auto r = run({"model-info", "--model", "bernoulli:0.3", "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(contains(r.out, "H = 0.88129 bits/symbol"));
    CHECK(fs::exists(dir / "model_info.json"));
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("model-info warns on periodic chains")
{
    const auto r = run({"model-info", "--model", "two-cycle", "--out", scratch("cycle").string()});
    CHECK(r.code == 0);
    CHECK(contains(r.out, "hypotheses not met: not aperiodic"));
    const auto ok = run({"model-info", "--model", "markov-skew", "--out", scratch("skew").string()});
    CHECK_FALSE(contains(ok.out, "warning"));
}

TEST_CASE("exit codes")
{
    const auto dir = scratch("codes").string();
    CHECK(run({"--help"}).code == 0);
    CHECK(run({}).code == 2);
    CHECK(run({"tails", "--bogus"}).code == 2);
    CHECK(run({"tails", "--model", "nope", "--out", dir}).code == 2);
    CHECK(run({"tails", "--model", "uniform-binary", "--eps", "x", "--out", dir}).code == 2);
    CHECK(run({"tails", "--model", "uniform-binary", "--side", "diagonal", "--out", dir}).code == 2);
    const auto big = run({"tails", "--model", "uniform-binary", "--n", "40", "--eps", "0", "--trials", "5", "--out", dir});
    CHECK(big.code == 3);
    CHECK(contains(big.err, "n <= 28"));
    CHECK(run({"tails", "--model", "constant", "--side", "lower", "--n", "4", "--eps", "0.1", "--trials", "5",
               "--out", dir})
              .code == 3);
}

TEST_CASE("tails output is byte-identical across runs and thread counts")
{
    const std::vector<std::string> base{"tails", "--model", "flip:0.1", "--side", "upper", "--n", "6,8,10",
                                        "--eps", "0.1,0.2", "--trials", "3000", "--seed", "11"};
    std::vector<std::string> csvs;
    for (const char* threads : {"1", "1", "2", "4"}) {
        const auto dir = scratch(std::string("threads") + threads + std::to_string(csvs.size()));
        auto args = base;
        args.insert(args.end(), {"--threads", threads, "--out", dir.string()});
        REQUIRE(run(args).code == 0);
        csvs.push_back(slurp(dir / "tails.csv"));
    }
    CHECK(csvs[0].size() > 100);
    for (const auto& c : csvs) CHECK(c == csvs[0]);
}

TEST_CASE("re-running from the manifest reproduces every output")
{
    struct Case {
        std::vector<std::string> args;
        std::string file;
    };
    const std::vector<Case> cases{
        {{"tails", "--model", "bernoulli:0.3", "--side", "match_upper", "--n", "8", "--eps", "0.15", "--trials", "500"},
         "tails.csv"},
        {{"estimate", "--model", "flip:0.1", "--n", "6,8", "--seeds", "3"}, "estimates.csv"},
        {{"aep", "--model", "bernoulli:0.3", "--n", "10,20", "--delta", "0.2", "--trials", "2000"}, "aep.csv"},
        {{"kac-check", "--model", "uniform-binary", "--blocks", "000,01", "--samples", "500"}, "kac.csv"},
        {{"kim-check", "--model", "uniform-binary", "--blocks", "0001", "--samples", "500"}, "kim.csv"},
        {{"cramer", "--model", "bernoulli:0.3", "--delta", "0.1,0.2"}, "cramer.csv"},
    };
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto first = scratch("first" + std::to_string(i));
        const auto second = scratch("second" + std::to_string(i));
        auto args = cases[i].args;
        args.insert(args.end(), {"--seed", "3", "--out", first.string()});
        REQUIRE(run(args).code == 0);
        const auto manifest = first / "manifest.json";
        REQUIRE(run({cases[i].args[0], "--config", manifest.string(), "--out", second.string()}).code == 0);
        CHECK(slurp(first / cases[i].file) == slurp(second / cases[i].file));
        CHECK(slurp(first / "manifest.json") == slurp(second / "manifest.json"));
    }
}

TEST_CASE("config files are checked")
{
    const auto dir = scratch("config");
    fs::create_directories(dir);
    const auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    };
    const auto out = (dir / "out").string();
    CHECK(run({"tails", "--config", write("noversion.json", R"({"model": "constant"})"), "--out", out}).code == 2);
    CHECK(run({"tails", "--config", write("v2.json", R"({"schema_version": 2})"), "--out", out}).code == 2);
    CHECK(run({"tails", "--config", write("other.json", R"({"schema_version": 1, "subcommand": "aep"})"), "--out",
               out})
              .code == 2);
    const auto flat = write("flat.json", R"({"schema_version": 1, "model": "uniform-binary", "n": [4],
                                             "eps": [0.25], "trials": 100, "seed": 1})");
    REQUIRE(run({"tails", "--config", flat, "--out", out}).code == 0);
    CHECK(contains(slurp(fs::path(out) / "tails.csv"), "uniform-binary,4,0.25,upper,100,"));
    // Flags override config keys.
    REQUIRE(run({"tails", "--config", flat, "--trials", "50", "--out", out}).code == 0);
    CHECK(contains(slurp(fs::path(out) / "tails.csv"), "uniform-binary,4,0.25,upper,50,"));
}

TEST_CASE("rate-fit and plot consume tails output")
{
    const auto dir = scratch("fit");
    REQUIRE(run({"tails", "--model", "uniform-binary", "--side", "upper", "--n", "4,6,8,10", "--eps", "0.25",
                 "--trials", "4000", "--seed", "2", "--out", dir.string()})
                .code == 0);
    const auto tails = (dir / "tails.csv").string();
    REQUIRE(run({"rate-fit", "--input", tails, "--model", "uniform-binary", "--out", dir.string()}).code == 0);
    const auto fits = slurp(dir / "fits.csv");
    CHECK(contains(fits, "slope_nats"));
    CHECK(contains(fits, "upper"));
    REQUIRE(run({"plot", "--input", tails, "--x", "n", "--y", "p_hat", "--group", "epsilon", "--log-y", "--out",
                 dir.string()})
                .code == 0);
    const auto svg = slurp(dir / "plot.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(contains(svg, "</svg>"));
    CHECK(run({"plot", "--input", tails, "--x", "n", "--y", "nope", "--out", dir.string()}).code == 2);
}

TEST_CASE("simulate writes a realization dump")
{
    const auto dir = scratch("sim");
    REQUIRE(run({"simulate", "--model", "markov-skew", "--length", "64", "--past", "32", "--seed", "4", "--out",
                 dir.string()})
                .code == 0);
    CHECK(fs::file_size(dir / "realization.bin") == 96);
    CHECK(contains(slurp(dir / "realization.json"), "\"origin\""));
}
