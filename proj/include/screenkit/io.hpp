#pragma once

#include "screenkit/design.hpp"
#include "screenkit/space_filling.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace screenkit::io {

using nlohmann::json;

/// Design CSV: header x1,...,xd then one run per row. The coding is inferred
/// unless given: {-1,1} -> two-level, {-1,0,1} -> three-level, [0,1] -> unit,
/// otherwise symmetric.
void write_design_csv(const Design& design, std::ostream& out);
void write_design_csv(const Design& design, const std::filesystem::path& path);
Design read_design_csv(std::istream& in, std::optional<Coding> coding = std::nullopt);
Design read_design_csv(const std::filesystem::path& path, std::optional<Coding> coding = std::nullopt);

/// Response CSV: optional header, first column numeric.
Eigen::VectorXd read_vector_csv(const std::filesystem::path& path);
void write_vector_csv(const Eigen::VectorXd& y, const std::string& header, const std::filesystem::path& path);

/// Generic numeric table with a header row.
void write_table_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
                     const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

json to_json(const Metrics& m);
json to_json(const ScreeningOutcome& outcome);
/// Report with fields {method, selected, statistics, metrics} plus `extra`.
json report(const ScreeningOutcome& outcome, const json& extra = json::object());

/// Sidecar metadata for a Morris plan: r, delta, f, d, trajectory starts.
json to_json(const MorrisPlan& plan);
/// Rebuilds a plan from its design CSV (read as unit coding) and sidecar.
MorrisPlan morris_plan_from(const Design& design, const json& meta);

void write_json(const json& j, const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);

} // namespace screenkit::io
