// Command-line front end for the bwr toolkit.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bwr/chain.hpp"
#include "bwr/graph.hpp"
#include "bwr/harness.hpp"
#include "bwr/ising.hpp"
#include "bwr/model_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kModel = 3, kScenario = 4, kArtifact = 5 };

struct RunFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> horizon;
  std::string out;
  std::string format = "csv";
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--seed", f.seed, "64-bit seed");
  cmd->add_option("--trials", f.trials, "Number of trials");
  cmd->add_option("--horizon", f.horizon, "Steps after time zero");
  cmd->add_option("--out", f.out, "Artifact directory");
  cmd->add_option("--format", f.format, "Trajectory table format")->check(CLI::IsMember({"csv", "json"}));
}

void apply(bwr::Scenario& s, const RunFlags& f) {
  if (f.seed) s.seed = *f.seed;
  if (f.trials) s.trials = *f.trials;
  if (f.horizon) s.horizon = *f.horizon;
  s.format = bwr::table_format_from_string(f.format);
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(out);
  if (!file) throw bwr::ArtifactError("cannot write " + out);
  file << text;
}

std::string as_text(const json& doc) { return doc.dump(2) + "\n"; }

void report_run(const bwr::RunResult& r) {
  for (const auto& f : r.files) std::cout << (r.directory / f).string() << '\n';
}

// A model file, or builtin:<scenario> for the model of a built-in scenario.
bwr::ModelSpec load_model_arg(const std::string& arg) {
  if (arg.rfind("builtin:", 0) == 0) return bwr::builtin_scenario(arg.substr(8)).model;
  return bwr::load_model(arg);
}

std::string out_dir_or(const std::string& out, const std::string& fallback) {
  return out.empty() ? fallback : out;
}

int fail(const char* category, const std::string& message, int code) {
  std::cerr << "error[" << category << "]: " << message << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and analysis of Bayesian-without-recall social learning"};
  app.require_subcommand(1);

  // run
  std::string scenario_arg;
  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario file (or builtin:<name>)");
  run_cmd->add_option("scenario", scenario_arg, "Scenario file, run manifest, or builtin:<name>")->required();
  add_run_flags(run_cmd, run_flags);

  // example1
  RunFlags ex_flags;
  auto* ex_cmd = app.add_subcommand("example1", "Run the built-in example1 scenario and summarize it");
  add_run_flags(ex_cmd, ex_flags);

  // analyze-graph
  std::string model_path;
  std::string report_out;
  std::string report_format = "json";
  auto* graph_cmd = app.add_subcommand("analyze-graph", "Spectral radius, centralities and topology");
  graph_cmd->add_option("model", model_path, "Model file or builtin:<name>")->required();
  graph_cmd->add_option("--out", report_out, "Output file (default stdout)");
  graph_cmd->add_option("--format", report_format)->check(CLI::IsMember({"csv", "json"}));

  // analyze-chain
  auto* chain_cmd = app.add_subcommand("analyze-chain", "Exact Markov-chain analysis of the action dynamics");
  chain_cmd->add_option("model", model_path, "Binary-state model file or builtin:<name>")->required();
  chain_cmd->add_option("--out", report_out, "Output directory (default stdout)");
  chain_cmd->add_option("--format", report_format, "json report or csv kernel")->check(CLI::IsMember({"csv", "json"}));

  // simulate-actions
  RunFlags act_flags;
  auto* act_cmd = app.add_subcommand("simulate-actions", "Simulate the binary action dynamics");
  act_cmd->add_option("model", model_path, "Binary-state model file or builtin:<name>")->required();
  add_run_flags(act_cmd, act_flags);

  // simulate-beliefs
  RunFlags bel_flags;
  std::string mode = "full";
  std::string choice_path;
  auto* bel_cmd = app.add_subcommand("simulate-beliefs", "Simulate belief dynamics");
  bel_cmd->add_option("model", model_path, "Model file or builtin:<name>")->required();
  bel_cmd->add_option("--mode", mode)->check(CLI::IsMember({"full", "circle", "random-neighbor"}));
  bel_cmd->add_option("--neighbor-choice", choice_path, "JSON array of per-agent neighbor-choice laws");
  add_run_flags(bel_cmd, bel_flags);

  // rates
  auto* rates_cmd = app.add_subcommand("rates", "Asymptotic learning rates from KL divergences");
  rates_cmd->add_option("model", model_path, "Model file or builtin:<name>")->required();
  rates_cmd->add_option("--neighbor-choice", choice_path, "JSON array of per-agent neighbor-choice laws");
  rates_cmd->add_option("--out", report_out, "Output file (default stdout)");
  rates_cmd->add_option("--format", report_format)->check(CLI::IsMember({"csv", "json"}));

  // summarize
  std::string run_dir;
  auto* sum_cmd = app.add_subcommand("summarize", "Learning verdicts and rates from a run directory");
  sum_cmd->add_option("dir", run_dir, "Artifact directory")->required();
  sum_cmd->add_option("--out", report_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const auto load_choice = [&]() -> std::optional<bwr::NeighborChoice> {
    if (choice_path.empty()) return std::nullopt;
    std::ifstream in(choice_path);
    if (!in) throw bwr::ScenarioError("cannot open " + choice_path);
    try {
      bwr::NeighborChoice choice;
      for (const auto& row : json::parse(in)) {
        const auto v = row.get<std::vector<double>>();
        choice.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
      }
      return choice;
    } catch (const json::exception& e) {
      throw bwr::ScenarioError(choice_path + ": " + e.what());
    }
  };

  try {
    if (*run_cmd) {
      bwr::Scenario s = scenario_arg.rfind("builtin:", 0) == 0 ? bwr::builtin_scenario(scenario_arg.substr(8))
                                                                : bwr::load_scenario(scenario_arg);
      apply(s, run_flags);
      report_run(bwr::run(s, out_dir_or(run_flags.out, "out/" + s.name)));
    } else if (*ex_cmd) {
      auto s = bwr::builtin_scenario("example1");
      apply(s, ex_flags);
      const auto r = bwr::run(s, out_dir_or(ex_flags.out, "out/example1"));
      const auto summary = bwr::summarize(r.directory);
      std::ofstream(r.directory / "summary.json") << summary.dump(2) << '\n';
      report_run(r);
      std::cout << (r.directory / "summary.json").string() << '\n';
    } else if (*graph_cmd) {
      const auto report = bwr::graph_report(load_model_arg(model_path));
      if (report_format == "json") {
        emit(as_text(report), report_out);
      } else {
        std::string text = "agent,alpha\n";
        if (report.contains("alpha")) {
          for (std::size_t i = 0; i < report["alpha"].size(); ++i) {
            text += std::to_string(i) + "," + bwr::format_double(report["alpha"][i].get<double>()) + "\n";
          }
        }
        emit(text, report_out);
      }
    } else if (*chain_cmd) {
      const auto model = load_model_arg(model_path);
      if (report_format == "csv") {
        const fs::path dir = report_out.empty() ? fs::path(".") : fs::path(report_out);
        fs::create_directories(dir);
        bwr::write_kernel_csv(model, dir / "kernel.csv");
        std::cout << (dir / "kernel.csv").string() << '\n';
      } else if (report_out.empty()) {
        std::cout << as_text(bwr::chain_report(model));
      } else {
        fs::create_directories(report_out);
        emit(as_text(bwr::chain_report(model)), (fs::path(report_out) / "chain_analysis.json").string());
        if (model.agent_count() <= 8) bwr::write_kernel_csv(model, fs::path(report_out) / "kernel.csv");
      }
    } else if (*act_cmd) {
      if (!act_flags.seed) throw bwr::ScenarioError("--seed is required");
      bwr::Scenario s;
      s.name = "simulate-actions";
      s.model = load_model_arg(model_path);
      s.dynamics = bwr::Dynamics::Actions;
      apply(s, act_flags);
      report_run(bwr::run(s, out_dir_or(act_flags.out, "out/simulate-actions")));
    } else if (*bel_cmd) {
      if (!bel_flags.seed) throw bwr::ScenarioError("--seed is required");
      bwr::Scenario s;
      s.name = "simulate-beliefs";
      s.model = load_model_arg(model_path);
      s.dynamics = bwr::dynamics_from_string("beliefs-" + mode);
      s.neighbor_choice = load_choice();
      apply(s, bel_flags);
      report_run(bwr::run(s, out_dir_or(bel_flags.out, "out/simulate-beliefs")));
    } else if (*rates_cmd) {
      const auto report = bwr::rates_report(load_model_arg(model_path), load_choice());
      if (report_format == "json") {
        emit(as_text(report), report_out);
      } else {
        std::string text = "agent,individual_rate,binding\n";
        for (const auto& a : report["individual"]) {
          text += std::to_string(a["agent"].get<std::size_t>()) + "," +
                  (a["rate"].is_number() ? bwr::format_double(a["rate"].get<double>()) : a["rate"].get<std::string>()) +
                  "," + a["binding"].get<std::string>() + "\n";
        }
        emit(text, report_out);
      }
    } else if (*sum_cmd) {
      emit(as_text(bwr::summarize(run_dir)), report_out);
    }
  } catch (const bwr::ModelError& e) {
    return fail("model", e.what(), kModel);
  } catch (const bwr::ScenarioError& e) {
    return fail("scenario", e.what(), kScenario);
  } catch (const bwr::ArtifactError& e) {
    return fail("artifact", e.what(), kArtifact);
  } catch (const fs::filesystem_error& e) {
    return fail("artifact", e.what(), kArtifact);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kInternal);
  }
  return kOk;
}
