#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "recur/realization.hpp"
#include "recur/sources.hpp"

namespace recur {

using Json = nlohmann::json;

/// Parses { "kind": "iid"|"markov"|"constant"|"periodic", "pmf", "transition",
/// "pattern", "symbol", "alphabet_size", "id" }. Errors name the offending
/// field, row or entry.
SourceModel model_from_json(const Json& spec);
Json model_to_json(const SourceModel& model);

/// Built-in models by name:
///   uniform-binary, bernoulli:P, flip:Q, markov-skew, two-cycle,
///   constant, periodic:0101...
SourceModel preset_model(std::string_view name);
std::vector<std::string> preset_names();

/// A path to a JSON model file, or a preset name.
SourceModel resolve_model(const std::string& spec);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Debug dump: `<base>.bin` holds the time-ordered symbols as raw bytes and
/// `<base>.json` the header { origin, alphabet_size, length }.
void save_realization(const std::filesystem::path& base, const Realization& real);
Realization load_realization(const std::filesystem::path& base);

/// Shortest round-trip decimal form, so CSV output is stable.
std::string format_double(double value);

/// Comma-separated list of numbers, e.g. "8,10,12".
std::vector<double> parse_number_list(std::string_view text, std::string_view field);

}  // namespace recur
