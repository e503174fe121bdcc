// Acceptance checks. Usage: acceptance [criterion ...]; no arguments runs all.
// Prints one PASS/FAIL line per criterion and exits nonzero if any failed.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bwr/belief.hpp"
#include "bwr/chain.hpp"
#include "bwr/graph.hpp"
#include "bwr/harness.hpp"
#include "bwr/ising.hpp"
#include "support.hpp"

using namespace bwr;
using bwr::testing::RandomModelOptions;
using bwr::testing::random_model;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checks {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failures_.push_back(what);
    }
  }
  void note(const std::string& s) { notes_.push_back(s); }
  Outcome outcome() const {
    std::string d;
    for (const auto& n : notes_) d += (d.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) d += (d.empty() ? "" : "; ") + std::string("FAILED ") + f;
    return {pass_, d};
  }

 private:
  bool pass_ = true;
  std::vector<std::string> notes_, failures_;
};

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::vector<BeliefProfile>> trajectories_of(const BeliefRun& run) {
  std::vector<std::vector<BeliefProfile>> out;
  for (const auto& t : run.trials) out.push_back(t.beliefs);
  return out;
}

// ---- 1 ----
Outcome example1_reproduction() {
  Checks c;
  const auto t0 = Clock::now();
  const auto scenario = builtin_scenario("example1");
  const auto& model = scenario.model;
  const auto run = simulate_beliefs(model, BeliefMode::Circle, 2000, 20, scenario.seed);
  const double elapsed = seconds_since(t0);

  std::size_t not_learning = 0;
  double worst_gap = 0.0;
  for (const auto& trial : run.trials) {
    for (const auto& v : detect_learning(trial.beliefs, model.truth, 0.99)) not_learning += !v.learning;
    const auto& last = trial.beliefs.back();
    worst_gap = std::max(worst_gap, (to_probabilities(last[0]) - to_probabilities(last[7])).cwiseAbs().maxCoeff());
  }
  c.require(not_learning == 0, std::to_string(not_learning) + " agent-trials below 0.99 in the final window");
  c.note("agent-trials not learning " + std::to_string(not_learning) + "/160");
  c.require(worst_gap < 1e-3, "agent 1 vs agent 8 gap");
  c.note("max |mu_1 - mu_8| at horizon " + fmt(worst_gap));

  double best = INFINITY;
  for (std::size_t f = 1; f < 3; ++f) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 3; ++j) sum += kl_divergence(model, j, model.truth, f);
    best = std::min(best, sum);
  }
  const double target = best / 3.0;
  const auto pr = pooled_rate(trajectories_of(run), {0, 1, 2}, model.truth, 0, 2000);
  const double rel = std::abs(pr.rate - target) / target;
  c.require(rel < 0.10, "root-circle rate");
  c.note("rate " + fmt(pr.rate) + " vs target " + fmt(target) + " (rel err " + fmt(rel, 2) + ")");
  c.require(elapsed < 10.0, "runtime");
  c.note("runtime " + fmt(elapsed, 3) + " s");
  return c.outcome();
}

// ---- 2 ----
Outcome spectral_growth() {
  Checks c;
  const auto t0 = Clock::now();
  const auto scenario = builtin_scenario("growth-demo");
  const auto& model = scenario.model;
  const auto spectral = perron(model.network);
  c.require(std::abs(spectral.rho - 2.0) < 1e-12, "rho = 2");
  c.note("rho " + fmt(spectral.rho, 15));
  const auto rates = learning_rates(model);
  c.require(rates.centralized > 0.0, "global identifiability");

  const auto run = simulate_beliefs(model, BeliefMode::FullNetwork, 60, 50, scenario.seed);
  const double rho = spectral.rho;
  double worst_residual = 0.0;
  std::size_t learners = 0, trials_with_learner = 0;
  std::size_t slope_cases = 0, slope_misses = 0;
  double worst_slope_err = 0.0;
  for (const auto& trial : run.trials) {
    const auto& st = trial.stats;
    for (std::size_t t = 1; t < st.size(); ++t) {
      for (Eigen::Index f = 0; f < 3; ++f) {
        if (static_cast<std::size_t>(f) == model.truth) continue;
        const double predicted = st[t].lambda(f) + rho * st[t - 1].phi(f) + (1.0 - rho) * st[t].beta(f);
        const double scale = std::max({1.0, std::abs(st[t].phi(f)), rho * std::abs(st[t - 1].phi(f))});
        worst_residual = std::max(worst_residual, std::abs(st[t].phi(f) - predicted) / scale);
      }
    }
    std::size_t here = 0;
    for (const auto& v : detect_learning(trial.beliefs, model.truth, 0.99)) here += v.learning;
    learners += here;
    trials_with_learner += here > 0;

    for (Eigen::Index f = 0; f < 3; ++f) {
      if (static_cast<std::size_t>(f) == model.truth || st[0].lambda(f) == 0.0) continue;
      std::vector<double> ys;
      for (std::size_t t = 30; t <= 60; ++t) ys.push_back(std::log(std::abs(st[t].phi(f))));
      const double err = std::abs(least_squares_slope(ys) - std::log(rho)) / std::log(rho);
      ++slope_cases;
      slope_misses += err >= 0.15;
      worst_slope_err = std::max(worst_slope_err, err);
    }
  }
  const double elapsed = seconds_since(t0);
  c.require(worst_residual < 1e-8, "recursion residual");
  c.note("max scaled recursion residual " + fmt(worst_residual, 3));
  c.require(learners == 0, "no agent learns");
  c.note(std::to_string(trials_with_learner) + "/50 trials with an agent at >= 0.99 in the final window");
  c.require(slope_misses == 0, "log|Phi| slope");
  c.note("log|Phi| slope within 15% of log rho in " + std::to_string(slope_cases - slope_misses) + "/" +
         std::to_string(slope_cases) + " cases (worst rel err " + fmt(worst_slope_err, 3) + ")");
  c.require(elapsed < 5.0, "runtime");
  c.note("runtime " + fmt(elapsed, 3) + " s");
  return c.outcome();
}

// Every sign argument of the dynamics stays at least `gap` away from zero.
bool arguments_clear_of_zero(const ModelSpec& model, const IsingConstants& ic, double gap) {
  const std::size_t n = model.agent_count();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nu = model.priors[i];
    for (std::size_t s = 0; s < model.signals[i].signal_count(); ++s) {
      if (std::abs(std::log(nu(0) / nu(1)) + lambda1(model, i, s)) < gap) return false;
    }
  }
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    const auto a = from_mask(mask, n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = field(model, ic, a, i);
      for (std::size_t s = 0; s < model.signals[i].signal_count(); ++s) {
        if (std::abs(x + lambda1(model, i, s)) < gap) return false;
      }
    }
  }
  return true;
}

// ---- 3 ----
Outcome equilibria_vs_absorbing() {
  Checks c;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(derive_seed(3, 0));
  std::size_t instances = 0, mismatches = 0, rejected = 0, with_equilibria = 0;
  while (instances < 200) {
    RandomModelOptions o;
    o.agents = 2 + instances % 5;
    o.edge_probability = 0.6;
    const auto model = random_model(rng, o);
    const auto ic = ising_constants(model);
    if (!arguments_clear_of_zero(model, ic, 1e-9)) {
      ++rejected;
      continue;
    }
    ++instances;
    const auto kernel = transition_kernel(model, ic);
    const auto by_inequality = equilibria_by_inequality(model, ic);
    mismatches += by_inequality != absorbing_profiles(kernel);
    with_equilibria += !by_inequality.empty();
  }
  const double elapsed = seconds_since(t0);
  c.require(mismatches == 0, "equilibrium sets differ");
  c.note(std::to_string(mismatches) + " mismatches in 200 instances (" + std::to_string(with_equilibria) +
         " with equilibria, " + std::to_string(rejected) + " near-tie draws redrawn)");
  c.require(elapsed < 30.0, "runtime");
  c.note("runtime " + fmt(elapsed, 3) + " s");
  return c.outcome();
}

// ---- 4 ----
Outcome stationary_law() {
  Checks c;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(derive_seed(4, 0));
  constexpr std::size_t kTrials = 10000, kHorizon = 200, kBurn = 100, kMinTrials = 1000;
  double worst_absorb = 0.0, worst_tv = 0.0;
  std::size_t stationary_checks = 0, multi_profile_classes = 0, multi_class_models = 0, redrawn = 0;
  for (std::size_t model_index = 0, draw = 0; model_index < 20; ++draw) {
    RandomModelOptions o;
    o.agents = 3;
    o.edge_probability = 0.7;
    auto model = random_model(rng, o);
    if (draw % 2 == 1) {
      // Complete graph with two-signal agents: neighbors' weights are large
      // against own evidence, so several recurrent classes are common.
      model.network = Network::from_edges(3, bwr::testing::complete_edges(3));
      for (auto& sig : model.signals) {
        const double a = bwr::testing::uniform(rng, 0.55, 0.9), b = bwr::testing::uniform(rng, 0.1, 0.45);
        sig.likelihood.resize(2, 2);
        sig.likelihood << a, b, 1.0 - a, 1.0 - b;
      }
    }
    const auto ic = ising_constants(model);
    const auto kernel = transition_kernel(model, ic);
    const auto classes = classify_states(kernel);
    const auto mu0 = initial_profile_distribution(model, ic);
    // A horizon-200 sample only estimates the limit law if absorption is
    // essentially complete by then.
    Eigen::RowVectorXd at_horizon = mu0.transpose();
    for (std::size_t t = 0; t < kHorizon; ++t) at_horizon = at_horizon * kernel;
    double still_transient = 0.0;
    for (const auto& cls : classes.transient) {
      for (auto a : cls) still_transient += at_horizon(static_cast<Eigen::Index>(a));
    }
    if (still_transient > 1e-3) {
      ++redrawn;
      continue;
    }
    const auto absorb = absorption_analysis(kernel, classes, mu0);
    multi_class_models += classes.recurrent.size() > 1;

    std::vector<long> class_of(8, -1);
    for (std::size_t k = 0; k < classes.recurrent.size(); ++k) {
      for (auto a : classes.recurrent[k]) class_of[a] = static_cast<long>(k);
    }
    const auto sim = simulate_actions(model, ic, kHorizon, kTrials, 1000 + model_index++);
    std::vector<double> reached(classes.recurrent.size(), 0.0);
    std::vector<std::vector<double>> occupancy(classes.recurrent.size(), std::vector<double>(8, 0.0));
    std::vector<std::size_t> class_trials(classes.recurrent.size(), 0);
    for (const auto& traj : sim.trials) {
      const long k = class_of[to_mask(traj.back())];
      if (k < 0) continue;  // still transient at the horizon
      reached[static_cast<std::size_t>(k)] += 1.0;
      ++class_trials[static_cast<std::size_t>(k)];
      for (std::size_t t = kBurn; t <= kHorizon; ++t) occupancy[static_cast<std::size_t>(k)][to_mask(traj[t])] += 1.0;
    }
    for (std::size_t k = 0; k < classes.recurrent.size(); ++k) {
      worst_absorb = std::max(worst_absorb, std::abs(reached[k] / kTrials - absorb(static_cast<Eigen::Index>(k))));
      const auto& cls = classes.recurrent[k];
      if (class_trials[k] < kMinTrials) continue;
      multi_profile_classes += cls.size() > 1;
      const auto pi = stationary_distribution(kernel, cls);
      double total = 0.0;
      for (auto a : cls) total += occupancy[k][a];
      double tv = 0.0;
      for (std::size_t j = 0; j < cls.size(); ++j) {
        tv += std::abs(occupancy[k][cls[j]] / total - pi(static_cast<Eigen::Index>(j)));
      }
      worst_tv = std::max(worst_tv, 0.5 * tv);
      ++stationary_checks;
    }
  }
  const double elapsed = seconds_since(t0);
  c.require(worst_tv <= 0.02, "stationary TV");
  c.note("worst stationary TV " + fmt(worst_tv, 3) + " over " + std::to_string(stationary_checks) + " classes (" +
         std::to_string(multi_profile_classes) + " non-singleton)");
  c.require(worst_absorb <= 0.02, "absorption frequencies");
  c.note("worst absorption error " + fmt(worst_absorb, 3) + " (" + std::to_string(multi_class_models) +
         " models with several recurrent classes, " + std::to_string(redrawn) +
         " slow-absorbing draws redrawn)");
  c.require(elapsed < 60.0, "runtime");
  c.note("runtime " + fmt(elapsed, 3) + " s");
  return c.outcome();
}

// ---- 5 ----
Outcome nonnegative_weights() {
  Checks c;
  std::mt19937_64 rng(derive_seed(5, 0));
  std::size_t violations = 0, agents = 0, degenerate = 0;
  for (std::size_t k = 0; k < 1000; ++k) {
    RandomModelOptions o;
    o.agents = 1 + k % 6;
    o.max_signals = 5;
    const auto model = random_model(rng, o);
    const auto ic = ising_constants(model);
    for (std::size_t i = 0; i < model.agent_count(); ++i) {
      ++agents;
      violations += !(ic.w[i] >= 0.0);
      degenerate += ic.degenerate[i];
    }
  }
  c.require(violations == 0, "w_i >= 0");
  c.note(std::to_string(violations) + " violations over " + std::to_string(agents) + " agents (" +
         std::to_string(degenerate) + " with a one-sided dichotomy)");
  return c.outcome();
}

// ---- 6 ----
Outcome time_one_oracle_check() {
  Checks c;
  std::mt19937_64 rng(derive_seed(6, 0));
  double worst = 0.0;
  std::size_t failures = 0, neighbors_total = 0;
  for (std::size_t k = 0; k < 200; ++k) {
    RandomModelOptions o;
    o.agents = 1 + k % 4;
    o.states = 2 + (k / 4) % 3;
    o.max_signals = 4;
    o.edge_probability = 0.7;
    o.zero_probability = 0.2;
    o.collision_probability = 0.3;
    const auto model = random_model(rng, o);
    std::vector<std::size_t> signals = sample_signals(model, rng);
    BeliefProfile time0(model.agent_count());
    for (std::size_t j = 0; j < model.agent_count(); ++j) time0[j] = bayes_initial_belief(model, j, signals[j]);
    const auto next = sample_signals(model, rng);
    for (std::size_t i = 0; i < model.agent_count(); ++i) {
      std::vector<LogBelief> logs;
      std::vector<Eigen::VectorXd> probs;
      for (auto j : model.network.in_neighbors(i)) {
        logs.push_back(time0[j]);
        probs.push_back(to_probabilities(time0[j]));
      }
      neighbors_total += logs.size();
      const auto bwr = to_probabilities(bwr_belief_step(model, i, logs, next[i]));
      const auto oracle = time_one_oracle(model, i, probs, next[i]);
      const double err = (bwr - oracle).cwiseAbs().maxCoeff();
      worst = std::max(worst, err);
      failures += !(err <= 1e-10);
    }
  }
  c.require(failures == 0, "oracle agreement");
  c.note("worst inf-norm " + fmt(worst, 3) + " over 200 models (" + std::to_string(neighbors_total) +
         " neighbor reports)");
  return c.outcome();
}

// ---- 7 ----
Outcome single_agent_rate() {
  Checks c;
  Eigen::MatrixXd l(2, 2);
  l << 0.8, 0.2, 0.2, 0.8;
  auto model = bwr::testing::homogeneous_model(l, 1, {});
  model.priors[0] = Eigen::Vector2d(0.3, 0.7);
  const double target = kl_divergence(model, 0, 0, 1);
  constexpr std::size_t kHorizon = 10000;
  double worst_identity = 0.0, worst_rel = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(derive_seed(seed, 0));
    std::vector<BeliefProfile> traj;
    auto s = sample_signal(model, 0, rng);
    LogBelief b = bayes_initial_belief(model, 0, s);
    double running = std::log(model.priors[0](1) / model.priors[0](0)) + log_likelihood_ratio(model, 0, s, 1);
    traj.push_back({b});
    for (std::size_t t = 1; t <= kHorizon; ++t) {
      s = sample_signal(model, 0, rng);
      b = single_agent_bayes_step(model, 0, b, s);
      running += log_likelihood_ratio(model, 0, s, 1);
      traj.push_back({b});
      worst_identity = std::max(worst_identity, std::abs(log_belief_ratio(b, 0, 1) - running));
    }
    const auto v = detect_learning(traj, 0, 0.99, traj.size());
    worst_rel = std::max(worst_rel, std::abs(v[0].rate - target) / target);
  }
  c.require(worst_rel < 0.05, "single-agent rate");
  c.note("worst per-seed rel err " + fmt(worst_rel, 3) + " vs KL " + fmt(target));
  c.require(worst_identity < 1e-9, "pre-limit identity");
  c.note("max identity error " + fmt(worst_identity, 3));
  return c.outcome();
}

// ---- 8 ----
Outcome random_neighbor_rate() {
  Checks c;
  ModelSpec model;
  model.states.labels = {"a", "b", "c"};
  model.truth = 0;
  Eigen::MatrixXd l0(2, 3), l1(2, 3), l2(2, 3);
  l0 << 0.5, 0.8, 0.5, 0.5, 0.2, 0.5;  // separates b
  l1 << 0.5, 0.5, 0.8, 0.5, 0.5, 0.2;  // separates c
  l2 << 0.5, 0.6, 0.6, 0.5, 0.4, 0.4;  // weak on both
  model.signals = {{l0}, {l1}, {l2}};
  model.priors.assign(3, Eigen::Vector3d::Constant(1.0 / 3.0));
  model.network = Network::from_edges(3, {{1, 0}, {2, 0}, {0, 1}, {2, 1}, {0, 2}});

  const auto rates = learning_rates(model);
  c.require(rates.random_walk.has_value(), "random-walk rate available");
  const double target = rates.random_walk.value_or(0.0);
  const auto run = simulate_beliefs(model, BeliefMode::RandomNeighbor, 10000, 20, 8);
  const auto pr = pooled_rate(trajectories_of(run), {0, 1, 2}, model.truth, 0, 10000);
  const double rel = std::abs(pr.rate - target) / target;
  c.require(rel < 0.10, "random-neighbor rate");
  c.note("rate " + fmt(pr.rate) + " vs target " + fmt(target) + " (rel err " + fmt(rel, 2) + "), pi = (" +
         fmt(rates.stationary(0)) + ", " + fmt(rates.stationary(1)) + ", " + fmt(rates.stationary(2)) + ")");
  return c.outcome();
}

// ---- 9 ----
Outcome rate_ordering() {
  Checks c;
  std::mt19937_64 rng(derive_seed(9, 0));
  std::size_t violations = 0;
  for (std::size_t k = 0; k < 100; ++k) {
    RandomModelOptions o;
    o.agents = 1 + k % 6;
    o.states = 2 + k % 3;
    const auto model = random_model(rng, o);
    const auto r = learning_rates(model);
    violations += !(r.average_individual <= r.circle && r.circle <= r.centralized);
  }
  c.require(violations == 0, "ordering on random models");
  c.note(std::to_string(violations) + " violations in 100 models");

  ModelSpec model;
  model.states.labels = {"a", "b", "c"};
  model.truth = 0;
  Eigen::MatrixXd l0(2, 3), l1(2, 3);
  l0 << 0.5, 0.8, 0.5, 0.5, 0.2, 0.5;
  l1 << 0.5, 0.5, 0.8, 0.5, 0.5, 0.2;
  model.signals = {{l0}, {l1}};
  model.priors.assign(2, Eigen::Vector3d::Constant(1.0 / 3.0));
  model.network = Network::from_edges(2, bwr::testing::circle_edges(2));
  const auto r = learning_rates(model);
  c.require(r.average_individual < r.circle && r.circle < r.centralized, "strict ordering on specialized agents");
  c.note("specialized pair: " + fmt(r.average_individual) + " < " + fmt(r.circle) + " < " + fmt(r.centralized));
  return c.outcome();
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria = {
      {1, {"example1-reproduction", example1_reproduction}},
      {2, {"spectral-growth", spectral_growth}},
      {3, {"equilibria-vs-absorbing", equilibria_vs_absorbing}},
      {4, {"stationary-law", stationary_law}},
      {5, {"nonnegative-weights", nonnegative_weights}},
      {6, {"time-one-oracle", time_one_oracle_check}},
      {7, {"single-agent-rate", single_agent_rate}},
      {8, {"random-neighbor-rate", random_neighbor_rate}},
      {9, {"rate-ordering", rate_ordering}},
  };
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));
  if (selected.empty()) {
    for (const auto& [id, _] : criteria) selected.insert(id);
  }
  int failed = 0;
  for (int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::printf("FAIL criterion %d: unknown criterion\n", id);
      ++failed;
      continue;
    }
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, it->second.first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
