#include "bwr/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "bwr/chain.hpp"
#include "bwr/graph.hpp"
#include "bwr/ising.hpp"
#include "bwr/model_io.hpp"

#ifndef BWR_VERSION
#define BWR_VERSION "0.0.0"
#endif

namespace bwr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<std::string> kOutputNames = {"trajectories", "global-stats", "rates", "chain-analysis",
                                               "constants"};

json number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(number(v(k)));
  return out;
}

json profile_json(std::uint64_t mask, std::size_t n) {
  json out = json::array();
  for (auto a : from_mask(mask, n)) out.push_back(static_cast<int>(a));
  return out;
}

json profile_set_json(const ProfileSet& set, std::size_t n) {
  json out = json::array();
  for (auto mask : set) out.push_back(profile_json(mask, n));
  return out;
}

BeliefMode belief_mode_of(Dynamics d) {
  switch (d) {
    case Dynamics::BeliefsCircle: return BeliefMode::Circle;
    case Dynamics::BeliefsRandomNeighbor: return BeliefMode::RandomNeighbor;
    default: return BeliefMode::FullNetwork;
  }
}

std::vector<std::string> effective_outputs(const Scenario& s) {
  if (!s.outputs.empty()) return s.outputs;
  if (s.dynamics == Dynamics::Actions) {
    std::vector<std::string> out = {"trajectories", "constants"};
    if (s.model.agent_count() <= kMaxKernelAgents) out.push_back("chain-analysis");
    return out;
  }
  std::vector<std::string> out = {"trajectories", "rates"};
  if (strongly_connected(s.model.network)) out.push_back("global-stats");
  return out;
}

bool wants(const std::vector<std::string>& outputs, std::string_view name) {
  return std::find(outputs.begin(), outputs.end(), name) != outputs.end();
}

std::string table_file(std::string_view stem, TableFormat f) {
  return std::string(stem) + (f == TableFormat::Csv ? ".csv" : ".json");
}

void write_json(const json& doc, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double parse_cell(std::string_view text, const fs::path& path, std::size_t line) {
  std::string cell(text);
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw ArtifactError(path.string() + ":" + std::to_string(line) + ": '" + cell + "' is not a number");
  }
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void require_columns(const Table& t, const std::vector<std::string>& expected, const fs::path& path) {
  if (t.columns != expected) throw ArtifactError(path.string() + ": unexpected columns");
}

std::size_t as_index(double v, std::size_t limit, const char* what, const fs::path& path) {
  if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(limit)) {
    throw ArtifactError(path.string() + ": " + what + " value " + format_double(v) + " out of range");
  }
  return static_cast<std::size_t>(v);
}

ModelSpec binary_two_signal_model(std::size_t n, double p_plus_theta1, double p_plus_theta2,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  ModelSpec m;
  m.states.labels = {"theta1", "theta2"};
  m.truth = 0;
  Eigen::MatrixXd l(2, 2);
  l << p_plus_theta1, p_plus_theta2, 1.0 - p_plus_theta1, 1.0 - p_plus_theta2;
  for (std::size_t i = 0; i < n; ++i) {
    m.signals.push_back({l});
    m.priors.push_back(Eigen::Vector2d(0.5, 0.5));
  }
  m.network = Network::from_edges(n, edges);
  return m;
}

std::vector<std::pair<std::size_t, std::size_t>> complete_edges(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) e.emplace_back(j, i);
    }
  }
  return e;
}

SignalStructure two_signal(double p0_s1, double p0_s2, double p0_s3) {
  Eigen::MatrixXd l(2, 3);
  l << p0_s1, p0_s2, p0_s3, 1.0 - p0_s1, 1.0 - p0_s2, 1.0 - p0_s3;
  return {l};
}

ModelSpec example1_states_model(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  ModelSpec m;
  m.states.labels = {"1", "2", "3"};
  m.truth = 0;
  m.signals.push_back(two_signal(1.0 / 3.0, 1.0 / 3.0, 1.0 / 5.0));
  m.signals.push_back(two_signal(1.0 / 2.0, 2.0 / 3.0, 1.0 / 2.0));
  for (std::size_t i = 2; i < n; ++i) m.signals.push_back(two_signal(0.25, 0.25, 0.25));
  m.priors.assign(n, Eigen::Vector3d::Constant(1.0 / 3.0));
  m.network = Network::from_edges(n, edges);
  return m;
}

}  // namespace

std::string_view toolkit_version() { return BWR_VERSION; }

std::string_view to_string(Dynamics d) {
  switch (d) {
    case Dynamics::Actions: return "actions";
    case Dynamics::BeliefsFull: return "beliefs-full";
    case Dynamics::BeliefsCircle: return "beliefs-circle";
    case Dynamics::BeliefsRandomNeighbor: return "beliefs-random-neighbor";
  }
  return "actions";
}

Dynamics dynamics_from_string(std::string_view name) {
  if (name == "actions") return Dynamics::Actions;
  if (name == "beliefs-full") return Dynamics::BeliefsFull;
  if (name == "beliefs-circle") return Dynamics::BeliefsCircle;
  if (name == "beliefs-random-neighbor") return Dynamics::BeliefsRandomNeighbor;
  throw ScenarioError("unknown dynamics '" + std::string(name) +
                      "' (expected actions, beliefs-full, beliefs-circle or beliefs-random-neighbor)");
}

std::string_view to_string(TableFormat f) { return f == TableFormat::Csv ? "csv" : "json"; }

TableFormat table_format_from_string(std::string_view name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "json") return TableFormat::Json;
  throw ScenarioError("unknown format '" + std::string(name) + "' (expected csv or json)");
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---- scenarios ----

Scenario scenario_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ScenarioError("scenario document must be a JSON object");
  if (doc.contains("scenario") && doc.contains("schema_version")) {
    return scenario_from_json(doc.at("scenario"), base_dir);
  }
  Scenario s;
  try {
    if (doc.contains("name")) s.name = doc.at("name").get<std::string>();
    if (!doc.contains("model")) throw ScenarioError("scenario has no 'model'");
    const auto& m = doc.at("model");
    if (m.is_string()) {
      fs::path p = m.get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      s.model = load_model(p);
    } else {
      s.model = model_from_json(m);
    }
    if (!doc.contains("dynamics")) throw ScenarioError("scenario has no 'dynamics'");
    s.dynamics = dynamics_from_string(doc.at("dynamics").get<std::string>());
    if (!doc.contains("seed")) throw ScenarioError("scenario has no 'seed'; a seed is mandatory");
    s.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("horizon")) s.horizon = doc.at("horizon").get<std::size_t>();
    if (doc.contains("trials")) s.trials = doc.at("trials").get<std::size_t>();
    if (doc.contains("outputs")) s.outputs = doc.at("outputs").get<std::vector<std::string>>();
    if (doc.contains("format")) s.format = table_format_from_string(doc.at("format").get<std::string>());
    if (doc.contains("neighbor_choice")) {
      NeighborChoice choice;
      for (const auto& row : doc.at("neighbor_choice")) {
        const auto v = row.get<std::vector<double>>();
        choice.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
      }
      s.neighbor_choice = std::move(choice);
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }
  check_scenario(s);
  return s;
}

json scenario_to_json(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["model"] = model_to_json(s.model);
  doc["dynamics"] = std::string(to_string(s.dynamics));
  doc["horizon"] = s.horizon;
  doc["trials"] = s.trials;
  doc["seed"] = s.seed;
  doc["outputs"] = effective_outputs(s);
  doc["format"] = std::string(to_string(s.format));
  if (s.neighbor_choice) {
    json rows = json::array();
    for (const auto& v : *s.neighbor_choice) rows.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    doc["neighbor_choice"] = rows;
  }
  return doc;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
  try {
    return scenario_from_json(doc, path.parent_path());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  } catch (const ModelError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

void check_scenario(const Scenario& s) {
  require_valid(s.model);
  const auto& net = s.model.network;
  for (const auto& o : s.outputs) {
    if (std::find(kOutputNames.begin(), kOutputNames.end(), o) == kOutputNames.end()) {
      throw ScenarioError("unknown output '" + o + "'");
    }
  }
  if (s.neighbor_choice && s.dynamics != Dynamics::BeliefsRandomNeighbor) {
    throw ScenarioError("neighbor_choice applies only to beliefs-random-neighbor dynamics");
  }
  switch (s.dynamics) {
    case Dynamics::Actions:
      require_binary(s.model);
      for (const auto& o : s.outputs) {
        if (o == "global-stats" || o == "rates") {
          throw ScenarioError("output '" + o + "' needs belief dynamics");
        }
      }
      if (wants(s.outputs, "chain-analysis") && s.model.agent_count() > kMaxKernelAgents) {
        throw ScenarioError("chain-analysis supports at most " + std::to_string(kMaxKernelAgents) + " agents");
      }
      return;
    case Dynamics::BeliefsCircle:
      for (std::size_t i = 0; i < net.size(); ++i) {
        if (net.degree(i) != 1) {
          throw ScenarioError("beliefs-circle needs in-degree 1 everywhere; agent " + std::to_string(i) +
                              " has " + std::to_string(net.degree(i)));
        }
      }
      if (!has_common_prior(s.model)) throw ScenarioError("beliefs-circle needs a common prior");
      break;
    case Dynamics::BeliefsRandomNeighbor:
      if (!strongly_connected(net)) throw ScenarioError("beliefs-random-neighbor needs a strongly connected network");
      if (!has_common_prior(s.model)) throw ScenarioError("beliefs-random-neighbor needs a common prior");
      if (s.neighbor_choice) neighbor_choice_matrix(net, *s.neighbor_choice);
      break;
    case Dynamics::BeliefsFull:
      break;
  }
  for (const auto& o : s.outputs) {
    if (o == "chain-analysis" || o == "constants") throw ScenarioError("output '" + o + "' needs action dynamics");
  }
  if (wants(s.outputs, "global-stats") && !strongly_connected(net)) {
    throw ScenarioError("global-stats need a strongly connected network");
  }
}

ModelSpec example1_model() {
  return example1_states_model(8, {{0, 1}, {1, 2}, {2, 0}, {0, 3}, {3, 4}, {1, 5}, {2, 6}, {4, 7}});
}

ModelSpec growth_demo_model() { return example1_states_model(3, complete_edges(3)); }

ModelSpec ising_consensus_demo_model() { return binary_two_signal_model(4, 0.6, 0.4, complete_edges(4)); }

std::vector<std::string> builtin_scenario_names() {
  return {"example1", "growth-demo", "ising-consensus-demo"};
}

Scenario builtin_scenario(std::string_view name) {
  Scenario s;
  s.name = std::string(name);
  s.seed = 1;
  if (name == "example1") {
    s.model = example1_model();
    s.dynamics = Dynamics::BeliefsCircle;
    s.horizon = 2000;
    s.trials = 20;
  } else if (name == "growth-demo") {
    s.model = growth_demo_model();
    s.dynamics = Dynamics::BeliefsFull;
    s.horizon = 60;
    s.trials = 50;
  } else if (name == "ising-consensus-demo") {
    s.model = ising_consensus_demo_model();
    s.dynamics = Dynamics::Actions;
    s.horizon = 200;
    s.trials = 100;
  } else {
    throw ScenarioError("unknown built-in scenario '" + std::string(name) + "'");
  }
  return s;
}

// ---- reports ----

json graph_report(const ModelSpec& model) {
  const auto& net = model.network;
  json r;
  r["n"] = net.size();
  json edges = json::array();
  for (const auto& [from, to] : net.edges()) edges.push_back({from, to});
  r["edges"] = edges;
  const auto topo = classify_topology(net);
  r["topology"] = std::string(to_string(topo));
  r["strongly_connected"] = strongly_connected(net);
  r["weakly_connected"] = weakly_connected(net);
  if (strongly_connected(net)) {
    const auto sp = perron(net);
    r["period"] = period(net);
    r["rho"] = sp.rho;
    r["alpha"] = vector_json(sp.alpha);
    r["iterations"] = sp.iterations;
    r["perron_residual"] = perron_residual(net, sp);
  }
  if (topo == Topology::DirectedCircle || topo == Topology::RootCircleTree) {
    r["root_circle"] = root_circle(net);
    r["distance_from_root_circle"] = distance_from_root_circle(net);
  }
  return r;
}

json rates_report(const ModelSpec& model, const std::optional<NeighborChoice>& neighbor_choice) {
  const auto rates = learning_rates(model, neighbor_choice);
  const auto& labels = model.states.labels;
  json r;
  r["truth"] = labels[model.truth];
  r["centralized"] = number(rates.centralized);
  r["centralized_binding"] = labels[rates.centralized_binding];
  r["circle"] = number(rates.circle);
  json ind = json::array();
  for (std::size_t i = 0; i < rates.individual.size(); ++i) {
    ind.push_back({{"agent", i},
                   {"rate", number(rates.individual[i])},
                   {"binding", labels[rates.individual_binding[i]]}});
  }
  r["individual"] = ind;
  r["average_individual"] = number(rates.average_individual);
  if (rates.random_walk) {
    r["random_walk"] = number(*rates.random_walk);
    r["random_walk_binding"] = labels[*rates.random_walk_binding];
    r["stationary"] = vector_json(rates.stationary);
  } else {
    r["random_walk"] = nullptr;
  }
  json kl = json::array();
  for (std::size_t i = 0; i < model.agent_count(); ++i) {
    json row = json::object();
    for (std::size_t f = 0; f < model.state_count(); ++f) {
      if (f != model.truth) row[labels[f]] = number(kl_divergence(model, i, model.truth, f));
    }
    kl.push_back(row);
  }
  r["kl_divergence"] = kl;
  // Tree agents inherit the root circle's rate.
  if (classify_topology(model.network) == Topology::RootCircleTree) {
    const auto circle = root_circle(model.network);
    double best = kInf;
    std::size_t binding = 0;
    for (std::size_t f = 0; f < model.state_count(); ++f) {
      if (f == model.truth) continue;
      double sum = 0.0;
      for (auto j : circle) sum += kl_divergence(model, j, model.truth, f);
      if (sum < best || best == kInf) {
        best = sum;
        binding = f;
      }
    }
    r["root_circle"] = {{"agents", circle},
                        {"rate", number(best / static_cast<double>(circle.size()))},
                        {"binding", labels[binding]}};
  }
  return r;
}

json constants_report(const ModelSpec& model) {
  const auto c = ising_constants(model);
  json agents = json::array();
  for (std::size_t i = 0; i < model.agent_count(); ++i) {
    agents.push_back({{"agent", i},
                      {"S_plus", c.dichotomy[i].plus},
                      {"S_minus", c.dichotomy[i].minus},
                      {"V", number(c.V[i])},
                      {"W", number(c.W[i])},
                      {"w", number(c.w[i])},
                      {"eta", number(c.eta[i])},
                      {"degenerate", static_cast<bool>(c.degenerate[i])}});
  }
  json r;
  r["agents"] = agents;
  r["consensus_equilibrium_condition"] = consensus_equilibrium_check(model, c);
  return r;
}

json chain_report(const ModelSpec& model) {
  const auto c = ising_constants(model);
  const auto analysis = analyze_chain(model, c);
  const std::size_t n = analysis.n;
  const auto eq = equilibrium_report(model, c, analysis.kernel);
  json r;
  r["n"] = n;
  r["profile_encoding"] = "bit i set iff agent i plays +1";
  r["equilibria"] = profile_set_json(eq.absorbing, n);
  r["equilibria_by_inequality"] = profile_set_json(eq.by_inequality, n);
  r["tie_sensitive"] = profile_set_json(eq.tie_sensitive, n);
  r["consensus_equilibrium_condition"] = consensus_equilibrium_check(model, c);

  json transient = json::array();
  for (const auto& cls : analysis.classes.transient) transient.push_back(profile_set_json(cls, n));
  r["transient_classes"] = transient;
  json recurrent = json::array();
  for (const auto& cls : analysis.classes.recurrent) {
    recurrent.push_back({{"profiles", profile_set_json(cls, n)},
                         {"masks", cls},
                         {"stationary", vector_json(stationary_distribution(analysis.kernel, cls))}});
  }
  r["recurrent_classes"] = recurrent;

  const Eigen::MatrixXd b = absorption_matrix(analysis.kernel, analysis.classes);
  json rows = json::array();
  for (Eigen::Index a = 0; a < b.rows(); ++a) rows.push_back(vector_json(b.row(a).transpose()));
  r["absorption_matrix"] = rows;
  r["initial_distribution_absorption"] =
      vector_json(b.transpose() * initial_profile_distribution(model, c));
  return r;
}

// ---- tables ----

void write_table(const Table& table, const fs::path& path, TableFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  const std::size_t width = table.columns.size();
  std::string buf;
  buf.reserve(1 << 16);
  const auto flush = [&] {
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    buf.clear();
  };
  if (format == TableFormat::Csv) {
    for (std::size_t c = 0; c < width; ++c) buf += (c ? "," : "") + table.columns[c];
    buf += '\n';
    for (std::size_t r = 0; r < table.row_count(); ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        if (c) buf += ',';
        buf += format_double(table.at(r, c));
      }
      buf += '\n';
      if (buf.size() > (1 << 15)) flush();
    }
  } else {
    buf += "{\"columns\":" + json(table.columns).dump() + ",\"rows\":[";
    for (std::size_t r = 0; r < table.row_count(); ++r) {
      buf += r ? ",\n[" : "\n[";
      for (std::size_t c = 0; c < width; ++c) {
        if (c) buf += ',';
        const double v = table.at(r, c);
        buf += std::isfinite(v) ? format_double(v) : "\"" + format_double(v) + "\"";
      }
      buf += ']';
      if (buf.size() > (1 << 15)) flush();
    }
    buf += "]}\n";
  }
  flush();
  if (!out) throw ArtifactError("error writing " + path.string());
}

Table read_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open " + path.string());
  Table t;
  if (path.extension() == ".json") {
    json doc;
    try {
      doc = json::parse(in);
      t.columns = doc.at("columns").get<std::vector<std::string>>();
      for (const auto& row : doc.at("rows")) {
        if (!row.is_array() || row.size() != t.columns.size()) {
          throw ArtifactError(path.string() + ": row width differs from the header");
        }
        for (const auto& v : row) {
          if (v.is_number()) {
            t.values.push_back(v.get<double>());
          } else if (v.is_string()) {
            t.values.push_back(parse_cell(v.get<std::string>(), path, 0));
          } else {
            throw ArtifactError(path.string() + ": non-numeric cell");
          }
        }
      }
    } catch (const json::exception& e) {
      throw ArtifactError(path.string() + ": " + e.what());
    }
    return t;
  }
  std::string line;
  if (!std::getline(in, line)) throw ArtifactError(path.string() + ": missing header");
  for (auto name : split_commas(line)) t.columns.emplace_back(name);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != t.columns.size()) {
      throw ArtifactError(path.string() + ":" + std::to_string(line_no) + ": row width differs from the header");
    }
    for (auto cell : cells) t.values.push_back(parse_cell(cell, path, line_no));
  }
  return t;
}

void write_kernel_csv(const ModelSpec& model, const fs::path& path) {
  const auto kernel = transition_kernel(model, ising_constants(model));
  Table t;
  t.columns.push_back("source");
  for (Eigen::Index b = 0; b < kernel.cols(); ++b) t.columns.push_back("to_" + std::to_string(b));
  for (Eigen::Index a = 0; a < kernel.rows(); ++a) {
    t.values.push_back(static_cast<double>(a));
    for (Eigen::Index b = 0; b < kernel.cols(); ++b) t.values.push_back(kernel(a, b));
  }
  write_table(t, path, TableFormat::Csv);
}

// ---- run ----

RunResult run(const Scenario& scenario, const fs::path& out_dir) {
  check_scenario(scenario);
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ArtifactError("cannot create " + out_dir.string() + ": " + ec.message());

  const auto& model = scenario.model;
  const std::size_t n = model.agent_count();
  const auto outputs = effective_outputs(scenario);
  RunResult result{out_dir, {}};
  json tables = json::object();
  const auto emit_table = [&](const std::string& key, const Table& t) {
    const auto file = table_file(key == "trajectories" ? "trajectories" : "global_stats", scenario.format);
    write_table(t, out_dir / file, scenario.format);
    tables[key] = {{"file", file}, {"columns", t.columns}};
    result.files.push_back(file);
  };
  const auto emit_json = [&](const std::string& file, const json& doc) {
    write_json(doc, out_dir / file);
    result.files.push_back(file);
  };

  if (scenario.dynamics == Dynamics::Actions) {
    const auto c = ising_constants(model);
    const auto traj = simulate_actions(model, c, scenario.horizon, scenario.trials, scenario.seed);
    if (wants(outputs, "trajectories")) {
      Table t;
      t.columns = {"trial", "time"};
      for (std::size_t i = 0; i < n; ++i) t.columns.push_back("agent_" + std::to_string(i));
      t.values.reserve(scenario.trials * (scenario.horizon + 1) * (n + 2));
      for (std::size_t k = 0; k < traj.trials.size(); ++k) {
        for (std::size_t step = 0; step < traj.trials[k].size(); ++step) {
          t.values.push_back(static_cast<double>(k));
          t.values.push_back(static_cast<double>(step));
          for (auto a : traj.trials[k][step]) t.values.push_back(static_cast<double>(a));
        }
      }
      emit_table("trajectories", t);
    }
    if (wants(outputs, "constants")) {
      json doc = constants_report(model);
      json ties = json::array();
      for (const auto& nt : traj.near_ties) {
        ties.push_back({{"trial", nt.trial}, {"time", nt.time}, {"agent", nt.agent}, {"argument", nt.argument}});
      }
      doc["near_ties"] = ties;
      emit_json("constants.json", doc);
    }
    if (wants(outputs, "chain-analysis")) {
      emit_json("chain_analysis.json", chain_report(model));
      if (n <= 8) {
        write_kernel_csv(model, out_dir / "kernel.csv");
        result.files.push_back("kernel.csv");
      }
    }
  } else {
    BeliefSimOptions opts;
    opts.neighbor_choice = scenario.neighbor_choice;
    opts.record_stats = wants(outputs, "global-stats");
    const auto sim = simulate_beliefs(model, belief_mode_of(scenario.dynamics), scenario.horizon,
                                      scenario.trials, scenario.seed, opts);
    const std::size_t m = model.state_count();
    if (wants(outputs, "trajectories")) {
      Table t;
      t.columns = {"trial", "t", "agent", "state", "belief", "log_belief"};
      t.values.reserve(scenario.trials * (scenario.horizon + 1) * n * m * 6);
      for (std::size_t k = 0; k < sim.trials.size(); ++k) {
        const auto& beliefs = sim.trials[k].beliefs;
        for (std::size_t step = 0; step < beliefs.size(); ++step) {
          for (std::size_t i = 0; i < n; ++i) {
            const auto p = to_probabilities(beliefs[step][i]);
            for (std::size_t th = 0; th < m; ++th) {
              const auto e = static_cast<Eigen::Index>(th);
              t.values.insert(t.values.end(), {static_cast<double>(k), static_cast<double>(step),
                                               static_cast<double>(i), static_cast<double>(th), p(e),
                                               beliefs[step][i](e)});
            }
          }
        }
      }
      emit_table("trajectories", t);
    }
    if (wants(outputs, "global-stats")) {
      Table t;
      t.columns = {"trial", "t", "false_state", "Phi", "Lambda", "Beta"};
      for (std::size_t k = 0; k < sim.trials.size(); ++k) {
        const auto& stats = sim.trials[k].stats;
        for (std::size_t step = 0; step < stats.size(); ++step) {
          for (std::size_t f = 0; f < m; ++f) {
            if (f == model.truth) continue;
            const auto e = static_cast<Eigen::Index>(f);
            t.values.insert(t.values.end(), {static_cast<double>(k), static_cast<double>(step),
                                             static_cast<double>(f), stats[step].phi(e),
                                             stats[step].lambda(e), stats[step].beta(e)});
          }
        }
      }
      emit_table("global-stats", t);
    }
    if (wants(outputs, "rates")) emit_json("rates.json", rates_report(model, scenario.neighbor_choice));
  }

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest;
  manifest["schema_version"] = kArtifactSchemaVersion;
  manifest["toolkit"] = "bwr";
  manifest["toolkit_version"] = std::string(toolkit_version());
  manifest["scenario"] = scenario_to_json(scenario);
  json edges = json::array();
  for (const auto& [from, to] : model.network.edges()) edges.push_back({from, to});
  manifest["edges"] = edges;
  manifest["tables"] = tables;
  manifest["files"] = result.files;
  manifest["started_utc"] = utc_timestamp(started);
  manifest["wall_clock_seconds"] = elapsed;
  write_json(manifest, out_dir / "manifest.json");
  result.files.push_back("manifest.json");
  return result;
}

// ---- summarize ----

namespace {

json summarize_beliefs(const Scenario& s, const Table& t, const fs::path& path) {
  require_columns(t, {"trial", "t", "agent", "state", "belief", "log_belief"}, path);
  const std::size_t n = s.model.agent_count();
  const std::size_t m = s.model.state_count();
  const std::size_t len = s.horizon + 1;
  std::vector<std::vector<BeliefProfile>> trials(
      s.trials, std::vector<BeliefProfile>(len, BeliefProfile(n, Eigen::VectorXd::Constant(m, kInf))));
  if (t.row_count() != s.trials * len * n * m) {
    throw ArtifactError(path.string() + ": expected " + std::to_string(s.trials * len * n * m) + " rows, found " +
                        std::to_string(t.row_count()));
  }
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    const auto k = as_index(t.at(r, 0), s.trials, "trial", path);
    const auto step = as_index(t.at(r, 1), len, "t", path);
    const auto i = as_index(t.at(r, 2), n, "agent", path);
    const auto th = as_index(t.at(r, 3), m, "state", path);
    auto& cell = trials[k][step][i](static_cast<Eigen::Index>(th));
    if (cell != kInf) throw ArtifactError(path.string() + ": duplicate row for trial/t/agent/state");
    cell = t.at(r, 5);
    if (cell == kInf || std::isnan(cell)) throw ArtifactError(path.string() + ": invalid log_belief");
  }

  json per_trial = json::array();
  std::vector<std::size_t> learned(n, 0);
  std::vector<double> rate_sum(n, 0.0);
  std::vector<std::size_t> rate_count(n, 0), saturated(n, 0);
  std::size_t all_learned = 0;
  for (std::size_t k = 0; k < trials.size(); ++k) {
    const auto verdicts = detect_learning(trials[k], s.model.truth);
    json learning = json::array(), rates = json::array();
    bool all = true;
    for (std::size_t i = 0; i < n; ++i) {
      learning.push_back(verdicts[i].learning);
      rates.push_back(number(verdicts[i].rate));
      if (verdicts[i].learning) ++learned[i];
      all = all && verdicts[i].learning;
      if (verdicts[i].saturated) {
        ++saturated[i];
      } else {
        rate_sum[i] += verdicts[i].rate;
        ++rate_count[i];
      }
    }
    if (all) ++all_learned;
    per_trial.push_back({{"trial", k}, {"learning", learning}, {"rate", rates}});
  }

  const double trial_count = static_cast<double>(std::max<std::size_t>(s.trials, 1));
  json agents = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    json a = {{"agent", i},
              {"learning_fraction", s.trials ? static_cast<double>(learned[i]) / trial_count : 0.0},
              {"learning", s.trials > 0 && learned[i] == s.trials},
              {"saturated_trials", saturated[i]}};
    a["mean_window_rate"] = rate_count[i] ? number(rate_sum[i] / static_cast<double>(rate_count[i])) : json(nullptr);
    if (s.trials > 0 && s.horizon > 0) a["pooled_rate"] = number(pooled_rate(trials, {i}, s.model.truth, 0, s.horizon).rate);
    agents.push_back(a);
  }

  json out;
  out["dynamics"] = std::string(to_string(s.dynamics));
  out["trials"] = s.trials;
  out["horizon"] = s.horizon;
  out["learning_threshold"] = 0.99;
  out["learning_window"] = "final 20% of each trajectory";
  out["agents"] = agents;
  out["all_agents_learning_fraction"] = s.trials ? static_cast<double>(all_learned) / trial_count : 0.0;
  out["per_trial"] = per_trial;

  const auto topo = classify_topology(s.model.network);
  if ((topo == Topology::DirectedCircle || topo == Topology::RootCircleTree) && s.trials > 0 && s.horizon > 0) {
    const auto circle = root_circle(s.model.network);
    const auto pr = pooled_rate(trials, circle, s.model.truth, 0, s.horizon);
    out["root_circle"] = {{"agents", circle},
                          {"pooled_rate", number(pr.rate)},
                          {"binding", s.model.states.labels[pr.binding]}};
  }
  out["reference_rates"] = rates_report(s.model, s.neighbor_choice);
  return out;
}

json summarize_actions(const Scenario& s, const Table& t, const fs::path& path) {
  const std::size_t n = s.model.agent_count();
  std::vector<std::string> expected = {"trial", "time"};
  for (std::size_t i = 0; i < n; ++i) expected.push_back("agent_" + std::to_string(i));
  require_columns(t, expected, path);
  const std::size_t len = s.horizon + 1;
  if (t.row_count() != s.trials * len) throw ArtifactError(path.string() + ": unexpected row count");

  std::vector<std::uint64_t> final_mask(s.trials, 0);
  std::vector<bool> seen(s.trials, false);
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    const auto k = as_index(t.at(r, 0), s.trials, "trial", path);
    const auto step = as_index(t.at(r, 1), len, "time", path);
    ActionProfile a(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = t.at(r, i + 2);
      if (v != 1.0 && v != -1.0) throw ArtifactError(path.string() + ": actions must be +1 or -1");
      a[i] = v > 0 ? 1 : -1;
    }
    if (step == s.horizon) {
      final_mask[k] = to_mask(a);
      seen[k] = true;
    }
  }
  std::set<std::uint64_t> equilibria;
  const bool have_equilibria = n <= kMaxKernelAgents;
  if (have_equilibria) {
    const auto eq = equilibria_by_inequality(s.model, ising_constants(s.model));
    equilibria.insert(eq.begin(), eq.end());
  }
  const std::uint64_t all_plus = n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  const std::uint64_t truth_mask = s.model.truth == 0 ? all_plus : 0;

  json per_trial = json::array();
  std::size_t consensus = 0, on_truth = 0, absorbed = 0;
  for (std::size_t k = 0; k < s.trials; ++k) {
    if (!seen[k]) throw ArtifactError(path.string() + ": trial " + std::to_string(k) + " has no final row");
    const auto mask = final_mask[k];
    const bool cons = mask == 0 || mask == all_plus;
    json entry = {{"trial", k},
                  {"final_profile", profile_json(mask, n)},
                  {"consensus", cons},
                  {"consensus_on_truth", mask == truth_mask}};
    if (have_equilibria) {
      const bool eq = equilibria.count(mask) > 0;
      entry["equilibrium"] = eq;
      if (eq) ++absorbed;
    }
    consensus += cons;
    on_truth += mask == truth_mask;
    per_trial.push_back(entry);
  }
  const double trial_count = static_cast<double>(std::max<std::size_t>(s.trials, 1));
  json out;
  out["dynamics"] = "actions";
  out["trials"] = s.trials;
  out["horizon"] = s.horizon;
  out["consensus_fraction"] = s.trials ? static_cast<double>(consensus) / trial_count : 0.0;
  out["consensus_on_truth_fraction"] = s.trials ? static_cast<double>(on_truth) / trial_count : 0.0;
  if (have_equilibria) out["equilibrium_fraction"] = s.trials ? static_cast<double>(absorbed) / trial_count : 0.0;
  out["per_trial"] = per_trial;
  return out;
}

}  // namespace

json summarize(const fs::path& run_dir) {
  const auto manifest = read_json(run_dir / "manifest.json");
  Scenario s;
  std::string file;
  try {
    if (manifest.at("schema_version").get<int>() != kArtifactSchemaVersion) {
      throw ArtifactError("unsupported artifact schema version");
    }
    s = scenario_from_json(manifest.at("scenario"));
    file = manifest.at("tables").at("trajectories").at("file").get<std::string>();
  } catch (const json::exception& e) {
    throw ArtifactError((run_dir / "manifest.json").string() + ": " + e.what());
  } catch (const ScenarioError& e) {
    throw ArtifactError((run_dir / "manifest.json").string() + ": " + e.what());
  }
  const auto path = run_dir / file;
  const Table t = read_table(path);
  json out = s.dynamics == Dynamics::Actions ? summarize_actions(s, t, path) : summarize_beliefs(s, t, path);
  out["scenario"] = s.name;
  return out;
}

}  // namespace bwr
