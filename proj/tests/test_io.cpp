#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "recur/error.hpp"
#include "recur/io.hpp"

using namespace recur;
namespace fs = std::filesystem;

namespace {

std::string message_of(const Json& spec)
{
    try {
        model_from_json(spec);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
        return e.what();
    }
    FAIL("expected an Error");
    return {};
}

bool mentions(const std::string& text, const std::string& part)
{
    return text.find(part) != std::string::npos;
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("recur_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("model JSON round trip")
{
    for (const auto& name : preset_names()) {
        const auto model = preset_model(name);
        CHECK(model.id() == name);
        const auto back = model_from_json(model_to_json(model));
        CHECK(back.kind() == model.kind());
        CHECK(back.alphabet_size() == model.alphabet_size());
        CHECK(back.id() == model.id());
        for (int i = 0; i < model.alphabet_size(); ++i) {
            CHECK(back.marginal()[i] == model.marginal()[i]);
            if (model.kind() == SourceKind::Markov || model.kind() == SourceKind::Iid)
                for (int j = 0; j < model.alphabet_size(); ++j) CHECK(back.transition(i, j) == model.transition(i, j));
        }
    }
}

TEST_CASE("presets")
{
    CHECK(preset_model("bernoulli:0.3").marginal()[1] == doctest::Approx(0.3));
    CHECK(preset_model("flip:0.1").transition(0, 1) == doctest::Approx(0.1));
    const auto skew = preset_model("markov-skew");
    CHECK(skew.marginal()[0] == doctest::Approx(5.0 / 6));
    CHECK(preset_model("periodic:011").pattern().size() == 3);
    CHECK(preset_model("constant").kind() == SourceKind::Constant);
    CHECK_THROWS_AS(preset_model("bernoulli:1.5"), Error);
    CHECK_THROWS_AS(preset_model("no-such-model"), Error);
    CHECK_THROWS_AS(resolve_model("no-such-model"), Error);
}

TEST_CASE("validation errors name the offending entry")
{
    CHECK(mentions(message_of(Json{{"kind", "iid"}, {"pmf", {0.5, 0.6}}}), "pmf"));
    CHECK(mentions(message_of(Json{{"kind", "iid"}, {"pmf", {0.5, -0.5, 1.0}}}), "pmf[1]"));
    CHECK(mentions(message_of(Json{{"kind", "markov"}, {"transition", {{0.5, 0.5}, {0.3, 0.3}}}}), "transition[1]"));
    CHECK(mentions(message_of(Json{{"kind", "markov"}, {"transition", {{0.5, 0.5}, {0.5}}}}), "transition[1]"));
    CHECK(mentions(message_of(Json{{"kind", "bogus"}}), "kind"));
    CHECK(mentions(message_of(Json{{"pmf", {1.0}}}), "kind"));
    CHECK(mentions(message_of(Json{{"kind", "periodic"}, {"pattern", Json::array()}}), "pattern"));
}

TEST_CASE("model files resolve with the file stem as id")
{
    const auto dir = scratch("model");
    const auto path = dir / "coin.json";
    write_text_file(path, R"({"kind": "iid", "pmf": [0.25, 0.75]})");
    const auto model = resolve_model(path.string());
    CHECK(model.id() == "coin");
    CHECK(model.marginal()[1] == 0.75);
    write_text_file(dir / "broken.json", "{ not json");
    CHECK_THROWS_AS(read_json_file(dir / "broken.json"), Error);
    CHECK_THROWS_AS(read_json_file(dir / "missing.json"), Error);
}

TEST_CASE("realization save and load")
{
    const auto dir = scratch("real");
    const std::vector<Symbol> data{1, 0, 2, 2, 0, 1, 1};
    const Realization real(data, 3, 3);
    save_realization(dir / "r", real);
    CHECK(fs::file_size(dir / "r.bin") == data.size());
    const auto back = load_realization(dir / "r");
    CHECK(back.origin() == real.origin());
    CHECK(back.alphabet_size() == 3);
    CHECK(back.to_array() == real.to_array());
}

TEST_CASE("number formatting")
{
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(std::nan("")) == "nan");
    for (double v : {0.8812908992306927, 1e-300, 12345.678, -3.5}) CHECK(std::stod(format_double(v)) == v);
    CHECK(parse_number_list("8,10, 12", "n") == std::vector<double>{8, 10, 12});
    CHECK_THROWS_AS(parse_number_list("8,x", "n"), Error);
}
