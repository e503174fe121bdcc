#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bwr/belief.hpp"
#include "bwr/model.hpp"

namespace bwr {

/// Bad scenario documents or option combinations.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, unreadable or malformed artifact files.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kArtifactSchemaVersion = 1;
std::string_view toolkit_version();

enum class Dynamics { Actions, BeliefsFull, BeliefsCircle, BeliefsRandomNeighbor };
std::string_view to_string(Dynamics d);
Dynamics dynamics_from_string(std::string_view name);

enum class TableFormat { Csv, Json };
std::string_view to_string(TableFormat f);
TableFormat table_format_from_string(std::string_view name);

// Scenario document grammar (JSON):
//
//   {
//     "name": "example1",                   // optional
//     "model": { ...model document... } | "relative/or/absolute/path.json",
//     "dynamics": "actions" | "beliefs-full" | "beliefs-circle" | "beliefs-random-neighbor",
//     "horizon": 2000,
//     "trials": 20,
//     "seed": 1,                            // mandatory
//     "outputs": ["trajectories", "global-stats", "rates", "chain-analysis"],  // optional
//     "format": "csv" | "json",             // trajectory table format, default csv
//     "neighbor_choice": [[...], ...]       // optional, random-neighbor only
//   }
//
// A run manifest is also accepted: its "scenario" member is used.
struct Scenario {
  std::string name = "scenario";
  ModelSpec model;
  Dynamics dynamics = Dynamics::BeliefsFull;
  std::size_t horizon = 100;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;  // empty = every output the dynamics supports
  TableFormat format = TableFormat::Csv;
  std::optional<NeighborChoice> neighbor_choice;
};

Scenario scenario_from_json(const nlohmann::json& doc,
                            const std::filesystem::path& base_dir = std::filesystem::path("."));
/// Always inlines the model, so the echo is self-contained.
nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);

/// Throws ScenarioError when the dynamics and model do not fit together.
void check_scenario(const Scenario& scenario);

std::vector<std::string> builtin_scenario_names();
Scenario builtin_scenario(std::string_view name);

/// Root circle 0 -> 1 -> 2 -> 0 with agents 0 and 1 informative, agent 2 and
/// five peripherals uninformative. Peripheral edges: 0->3, 3->4, 1->5, 2->6,
/// 4->7 (agent 7 sits three hops from agent 0).
ModelSpec example1_model();
/// Complete digraph on three agents (rho = 2) with the likelihoods of the
/// example1 root circle.
ModelSpec growth_demo_model();
/// Complete digraph on four binary agents whose constants satisfy the
/// consensus-equilibrium condition.
ModelSpec ising_consensus_demo_model();

// Report documents shared by run and the CLI.
nlohmann::json graph_report(const ModelSpec& model);
nlohmann::json rates_report(const ModelSpec& model,
                            const std::optional<NeighborChoice>& neighbor_choice = std::nullopt);
nlohmann::json constants_report(const ModelSpec& model);
/// Throws ModelError for non-binary models or more than kMaxKernelAgents agents.
nlohmann::json chain_report(const ModelSpec& model);

/// Numeric table with a flat row-major body.
struct Table {
  std::vector<std::string> columns;
  std::vector<double> values;
  std::size_t row_count() const { return columns.empty() ? 0 : values.size() / columns.size(); }
  double at(std::size_t row, std::size_t col) const { return values[row * columns.size() + col]; }
};

/// Doubles are written with 17 significant digits; non-finite values as
/// inf, -inf, nan.
void write_table(const Table& table, const std::filesystem::path& path, TableFormat format);
Table read_table(const std::filesystem::path& path);
std::string format_double(double x);

/// Kernel as CSV, rows = source profile mask.
void write_kernel_csv(const ModelSpec& model, const std::filesystem::path& path);

struct RunResult {
  std::filesystem::path directory;
  std::vector<std::string> files;  // manifest.json last
};

/// Executes the scenario and writes its artifacts into out_dir (created if
/// needed). Identical scenarios give byte-identical tables.
RunResult run(const Scenario& scenario, const std::filesystem::path& out_dir);

/// Learning verdicts, rate estimates and consensus frequencies from a run
/// directory. Depends only on the artifact bytes.
nlohmann::json summarize(const std::filesystem::path& run_dir);

}  // namespace bwr
