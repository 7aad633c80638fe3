#pragma once

#include "bwf/domain.hpp"
#include "bwf/engine.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace bwf::io {

using Json = nlohmann::json;

// 1-based line of the value a JSON pointer designates in the source text,
// nullopt when the pointer does not resolve.
std::optional<int> locate(std::string_view text, const std::string& pointer);

// Strict readers: unknown fields, wrong types and missing required fields
// raise ValidationError naming the JSON pointer. The text overloads add
// "<origin>:<line>:" to every message and run the full instance checks.
domain::Instance instance_from_json(const Json& doc);
engine::Masterplan plan_from_json(const Json& doc);
domain::Instance parse_instance(std::string_view text, const std::string& origin);
engine::Masterplan parse_plan(std::string_view text, const std::string& origin);
domain::Instance load_instance(const std::string& path);  // InputError when unreadable
engine::Masterplan load_plan(const std::string& path);

// Canonical documents: keys sorted, every field written.
Json instance_to_json(const domain::Instance& instance);
Json plan_to_json(const engine::Masterplan& plan);
Json violations_to_json(const std::vector<engine::Violation>& violations);
std::string canonical(const Json& doc);  // two-space indent, trailing newline

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace bwf::io
