#include "bwr/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bwr/chain.hpp"

namespace bwr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRatioClamp = 700.0;

Eigen::VectorXd log_likelihood_row(const ModelSpec& model, std::size_t agent, std::size_t signal) {
  const auto& l = model.signals.at(agent);
  if (signal >= l.signal_count()) {
    throw ModelError("agent " + std::to_string(agent) + " has no signal " + std::to_string(signal));
  }
  return l.likelihood.row(static_cast<Eigen::Index>(signal)).transpose().array().log();
}

LogBelief normalize_or_throw(const Eigen::VectorXd& x, std::size_t agent, std::size_t signal) {
  if (x.maxCoeff() == -kInf) {
    throw ModelError("agent " + std::to_string(agent) + ", signal " + std::to_string(signal) +
                     ": posterior is zero under every state");
  }
  return normalize_log(x);
}

void require_choice_shape(const Network& network, const NeighborChoice& choice) {
  if (choice.size() != network.size()) throw ModelError("neighbor choice needs one law per agent");
  for (std::size_t i = 0; i < network.size(); ++i) {
    const auto& c = choice[i];
    if (static_cast<std::size_t>(c.size()) != network.degree(i)) {
      throw ModelError("agent " + std::to_string(i) + ": neighbor choice length differs from degree");
    }
    if (c.size() > 0 && (c.minCoeff() < 0.0 || std::abs(c.sum() - 1.0) > 1e-12)) {
      throw ModelError("agent " + std::to_string(i) + ": neighbor choice is not a probability vector");
    }
  }
}

}  // namespace

LogBelief normalize_log(const Eigen::VectorXd& x) {
  const double top = x.maxCoeff();
  if (top == -kInf) throw ModelError("cannot normalize a belief that is zero everywhere");
  const Eigen::VectorXd shifted = x.array() - top;
  const double lse = std::log(shifted.array().exp().sum());
  return shifted.array() - lse;
}

Eigen::VectorXd to_probabilities(const LogBelief& belief) {
  const Eigen::VectorXd p = belief.array().max(-kRatioClamp).exp();
  return p / p.sum();
}

LogBelief from_probabilities(const Eigen::VectorXd& probabilities) {
  return normalize_log(probabilities.array().log());
}

double log_belief_ratio(const LogBelief& belief, std::size_t truth, std::size_t false_state) {
  return belief(static_cast<Eigen::Index>(false_state)) - belief(static_cast<Eigen::Index>(truth));
}

bool has_common_prior(const ModelSpec& model, double tol) {
  for (std::size_t i = 1; i < model.priors.size(); ++i) {
    if ((model.priors[i] - model.priors[0]).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

LogBelief bayes_initial_belief(const ModelSpec& model, std::size_t agent, std::size_t signal) {
  const Eigen::VectorXd x = model.priors.at(agent).array().log().matrix() +
                            log_likelihood_row(model, agent, signal);
  return normalize_or_throw(x, agent, signal);
}

LogBelief single_agent_bayes_step(const ModelSpec& model, std::size_t agent, const LogBelief& belief,
                                  std::size_t signal) {
  return normalize_or_throw(belief + log_likelihood_row(model, agent, signal), agent, signal);
}

LogBelief bwr_belief_step(const ModelSpec& model, std::size_t agent,
                          const std::vector<LogBelief>& neighbor_beliefs, std::size_t signal) {
  const auto& nbrs = model.network.in_neighbors(agent);
  if (neighbor_beliefs.size() != nbrs.size()) {
    throw ModelError("agent " + std::to_string(agent) + ": expected " + std::to_string(nbrs.size()) +
                     " neighbor beliefs, got " + std::to_string(neighbor_beliefs.size()));
  }
  Eigen::VectorXd x = model.priors.at(agent).array().log().matrix() +
                      log_likelihood_row(model, agent, signal);
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    x += neighbor_beliefs[k] - model.priors.at(nbrs[k]).array().log().matrix();
  }
  return normalize_or_throw(x, agent, signal);
}

Eigen::VectorXd time_one_oracle(const ModelSpec& model, std::size_t agent,
                                const std::vector<Eigen::VectorXd>& neighbor_beliefs,
                                std::size_t signal, const OracleOptions& options) {
  const auto& nbrs = model.network.in_neighbors(agent);
  if (neighbor_beliefs.size() != nbrs.size()) {
    throw ModelError("time_one_oracle: one belief per in-neighbor is required");
  }
  const auto m = static_cast<Eigen::Index>(model.state_count());

  // Invert each reported belief to the signals consistent with it.
  std::vector<std::vector<std::size_t>> consistent(nbrs.size());
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const auto j = nbrs[k];
    const auto& l = model.signals.at(j);
    const auto& nu = model.priors.at(j);
    for (std::size_t s = 0; s < l.signal_count(); ++s) {
      Eigen::VectorXd q(m);
      for (Eigen::Index th = 0; th < m; ++th) q(th) = nu(th) * l(s, static_cast<std::size_t>(th));
      const double z = q.sum();
      if (z <= 0.0) continue;
      q /= z;
      if (0.5 * (q - neighbor_beliefs[k]).cwiseAbs().sum() <= options.match_tolerance) {
        consistent[k].push_back(s);
      }
    }
    if (consistent[k].empty()) {
      throw ModelError("time_one_oracle: belief reported by agent " + std::to_string(j) +
                       " is not produced by any of its signals");
    }
  }

  const auto& own = model.signals.at(agent);
  const auto& nu_i = model.priors.at(agent);
  Eigen::VectorXd joint = Eigen::VectorXd::Zero(m);
  std::vector<std::size_t> odometer(nbrs.size(), 0);
  while (true) {
    for (Eigen::Index th = 0; th < m; ++th) {
      double term = nu_i(th) * own(signal, static_cast<std::size_t>(th));
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        term *= model.signals[nbrs[k]](consistent[k][odometer[k]], static_cast<std::size_t>(th));
      }
      joint(th) += term;
    }
    std::size_t k = 0;
    while (k < odometer.size() && ++odometer[k] == consistent[k].size()) odometer[k++] = 0;
    if (k == odometer.size()) break;
  }
  const double z = joint.sum();
  if (z <= 0.0) throw ModelError("time_one_oracle: observations have zero probability");
  return joint / z;
}

LogBelief circle_step(const ModelSpec& model, std::size_t agent, const LogBelief& predecessor_belief,
                      std::size_t signal) {
  if (model.network.degree(agent) != 1) {
    throw ModelError("circle_step: agent " + std::to_string(agent) + " has in-degree " +
                     std::to_string(model.network.degree(agent)) + ", expected 1");
  }
  if (!has_common_prior(model)) throw ModelError("circle_step: agents do not share a common prior");
  return normalize_or_throw(predecessor_belief + log_likelihood_row(model, agent, signal), agent, signal);
}

NeighborChoice uniform_neighbor_choice(const Network& network) {
  NeighborChoice out(network.size());
  for (std::size_t i = 0; i < network.size(); ++i) {
    const auto d = static_cast<Eigen::Index>(network.degree(i));
    out[i] = d > 0 ? Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d)) : Eigen::VectorXd();
  }
  return out;
}

Eigen::MatrixXd neighbor_choice_matrix(const Network& network, const NeighborChoice& choice) {
  require_choice_shape(network, choice);
  const auto n = static_cast<Eigen::Index>(network.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < network.size(); ++i) {
    const auto& nb = network.in_neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nb[k])) = choice[i](static_cast<Eigen::Index>(k));
    }
  }
  return p;
}

RandomNeighborResult random_neighbor_step(const ModelSpec& model, std::size_t agent,
                                          std::mt19937_64& rng, const BeliefProfile& current,
                                          std::size_t signal, const NeighborChoice& choice) {
  const auto& nb = model.network.in_neighbors(agent);
  if (nb.empty()) {
    throw ModelError("random_neighbor_step: agent " + std::to_string(agent) + " has no in-neighbors");
  }
  const auto& law = choice.at(agent);
  if (static_cast<std::size_t>(law.size()) != nb.size()) {
    throw ModelError("random_neighbor_step: neighbor choice length differs from degree");
  }
  const std::size_t chosen = nb[sample_categorical(law, rng)];
  return {normalize_or_throw(current.at(chosen) + log_likelihood_row(model, agent, signal), agent, signal),
          chosen};
}

GlobalStats global_stats(const ModelSpec& model, const SpectralData& spectral,
                         const BeliefProfile& beliefs, const std::vector<std::size_t>& signals) {
  const auto m = static_cast<Eigen::Index>(model.state_count());
  const std::size_t n = model.agent_count();
  const auto truth = static_cast<Eigen::Index>(model.truth);
  GlobalStats g{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)};
  for (Eigen::Index f = 0; f < m; ++f) {
    if (f == truth) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = spectral.alpha(static_cast<Eigen::Index>(i));
      const auto& nu = model.priors[i];
      g.phi(f) += a * log_belief_ratio(beliefs[i], model.truth, static_cast<std::size_t>(f));
      g.lambda(f) += a * log_likelihood_ratio(model, i, signals[i], static_cast<std::size_t>(f));
      g.beta(f) += a * std::log(nu(f) / nu(truth));
    }
  }
  return g;
}

RateReport learning_rates(const ModelSpec& model, const std::optional<NeighborChoice>& neighbor_choice) {
  const std::size_t n = model.agent_count();
  const std::size_t m = model.state_count();
  // kl[i][f]
  std::vector<std::vector<double>> kl(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < m; ++f) {
      if (f != model.truth) kl[i][f] = kl_divergence(model, i, model.truth, f);
    }
  }

  const auto minimize = [&](auto&& value_of) {
    double best = kInf;
    std::size_t arg = 0;
    for (std::size_t f = 0; f < m; ++f) {
      if (f == model.truth) continue;
      const double v = value_of(f);
      if (v < best || (best == kInf && arg == 0 && f != model.truth && v == kInf)) {
        best = v;
        arg = f;
      }
    }
    return std::pair{best, arg};
  };

  RateReport r;
  std::tie(r.centralized, r.centralized_binding) = minimize([&](std::size_t f) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += kl[i][f];
    return sum;
  });
  r.circle = r.centralized / static_cast<double>(n);

  r.individual.resize(n);
  r.individual_binding.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::tie(r.individual[i], r.individual_binding[i]) = minimize([&](std::size_t f) { return kl[i][f]; });
    total += r.individual[i];
  }
  r.average_individual = total / static_cast<double>(n);

  if (strongly_connected(model.network)) {
    const auto choice = neighbor_choice.value_or(uniform_neighbor_choice(model.network));
    r.stationary = stationary_of(neighbor_choice_matrix(model.network, choice));
    const auto [rate, binding] = minimize([&](std::size_t f) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double pi = r.stationary(static_cast<Eigen::Index>(j));
        if (pi > 0.0) sum += pi * kl[j][f];
      }
      return sum;
    });
    r.random_walk = rate;
    r.random_walk_binding = binding;
  }
  return r;
}

double least_squares_slope(const std::vector<double>& ys) {
  const std::size_t k = ys.size();
  if (k < 2) return 0.0;
  const double mean_x = static_cast<double>(k - 1) / 2.0;
  double mean_y = 0.0;
  for (double y : ys) mean_y += y;
  mean_y /= static_cast<double>(k);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    const double dx = static_cast<double>(t) - mean_x;
    sxy += dx * (ys[t] - mean_y);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::vector<LearningVerdict> detect_learning(const std::vector<BeliefProfile>& trajectory,
                                             std::size_t truth, double threshold, std::size_t window) {
  if (trajectory.empty()) return {};
  const std::size_t len = trajectory.size();
  if (window == 0) window = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(len))));
  if (window > len) throw ModelError("detect_learning: trajectory shorter than the window");
  const std::size_t n = trajectory.front().size();
  const auto m = static_cast<std::size_t>(trajectory.front().front().size());
  const double log_threshold = std::log(threshold);

  std::vector<LearningVerdict> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool learning = true;
    bool saturated = false;
    std::vector<double> ys;
    ys.reserve(window);
    for (std::size_t t = len - window; t < len; ++t) {
      const auto& b = trajectory[t][i];
      if (b(static_cast<Eigen::Index>(truth)) < log_threshold) learning = false;
      double worst = -kInf;
      for (std::size_t f = 0; f < m; ++f) {
        if (f != truth) worst = std::max(worst, log_belief_ratio(b, truth, f));
      }
      if (worst == -kInf) saturated = true;
      ys.push_back(worst);
    }
    out[i].learning = learning;
    out[i].saturated = saturated;
    out[i].rate = saturated ? kInf : -least_squares_slope(ys);
  }
  return out;
}

PooledRate pooled_rate(const std::vector<std::vector<BeliefProfile>>& trials,
                       const std::vector<std::size_t>& agents, std::size_t truth, std::size_t first,
                       std::size_t last) {
  if (trials.empty() || agents.empty()) throw ModelError("pooled_rate: nothing to pool");
  const auto m = trials.front().front().front().size();
  PooledRate out;
  out.per_state = Eigen::VectorXd::Zero(m);
  std::size_t count = 0;
  for (const auto& traj : trials) {
    if (last >= traj.size() || first >= last) throw ModelError("pooled_rate: window outside trajectory");
    for (auto i : agents) {
      ++count;
      for (Eigen::Index f = 0; f < m; ++f) {
        if (static_cast<std::size_t>(f) == truth) continue;
        std::vector<double> ys;
        ys.reserve(last - first + 1);
        for (std::size_t t = first; t <= last; ++t) {
          ys.push_back(log_belief_ratio(traj[t][i], truth, static_cast<std::size_t>(f)));
        }
        out.per_state(f) -= least_squares_slope(ys);
      }
    }
  }
  out.per_state /= static_cast<double>(count);
  out.rate = kInf;
  for (Eigen::Index f = 0; f < m; ++f) {
    if (static_cast<std::size_t>(f) == truth) continue;
    if (out.per_state(f) < out.rate || out.rate == kInf) {
      out.rate = out.per_state(f);
      out.binding = static_cast<std::size_t>(f);
    }
  }
  return out;
}

std::string_view to_string(BeliefMode mode) {
  switch (mode) {
    case BeliefMode::FullNetwork: return "beliefs-full";
    case BeliefMode::Circle: return "beliefs-circle";
    case BeliefMode::RandomNeighbor: return "beliefs-random-neighbor";
  }
  return "beliefs-full";
}

BeliefMode belief_mode_from_string(std::string_view name) {
  if (name == "beliefs-full" || name == "full") return BeliefMode::FullNetwork;
  if (name == "beliefs-circle" || name == "circle") return BeliefMode::Circle;
  if (name == "beliefs-random-neighbor" || name == "random-neighbor") return BeliefMode::RandomNeighbor;
  throw ModelError("unknown belief mode '" + std::string(name) + "'");
}

BeliefRun simulate_beliefs(const ModelSpec& model, BeliefMode mode, std::size_t horizon,
                           std::size_t trials, std::uint64_t seed, const BeliefSimOptions& options) {
  const std::size_t n = model.agent_count();
  NeighborChoice choice;
  switch (mode) {
    case BeliefMode::FullNetwork:
      break;
    case BeliefMode::Circle:
      for (std::size_t i = 0; i < n; ++i) {
        if (model.network.degree(i) != 1) {
          throw ModelError("circle dynamics: agent " + std::to_string(i) + " has in-degree " +
                           std::to_string(model.network.degree(i)));
        }
      }
      if (!has_common_prior(model)) throw ModelError("circle dynamics need a common prior");
      break;
    case BeliefMode::RandomNeighbor:
      if (!strongly_connected(model.network)) {
        throw ModelError("random-neighbor dynamics need a strongly connected network");
      }
      if (!has_common_prior(model)) throw ModelError("random-neighbor dynamics need a common prior");
      choice = options.neighbor_choice.value_or(uniform_neighbor_choice(model.network));
      require_choice_shape(model.network, choice);
      break;
  }

  BeliefRun run;
  if (options.record_stats && strongly_connected(model.network)) run.spectral = perron(model.network);

  run.trials.resize(trials);
  for (std::size_t k = 0; k < trials; ++k) {
    std::mt19937_64 signal_rng(derive_seed(seed, k));
    std::mt19937_64 choice_rng(derive_seed(~seed, k));
    auto& trial = run.trials[k];
    trial.beliefs.reserve(horizon + 1);
    trial.signals.reserve(horizon + 1);

    auto signals = sample_signals(model, signal_rng);
    BeliefProfile current(n);
    for (std::size_t i = 0; i < n; ++i) current[i] = bayes_initial_belief(model, i, signals[i]);
    if (run.spectral) trial.stats.push_back(global_stats(model, *run.spectral, current, signals));
    trial.beliefs.push_back(current);
    trial.signals.push_back(signals);

    for (std::size_t t = 1; t <= horizon; ++t) {
      signals = sample_signals(model, signal_rng);
      BeliefProfile next(n);
      std::vector<std::size_t> picked;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& nb = model.network.in_neighbors(i);
        switch (mode) {
          case BeliefMode::FullNetwork: {
            std::vector<LogBelief> reported;
            reported.reserve(nb.size());
            for (auto j : nb) reported.push_back(current[j]);
            next[i] = bwr_belief_step(model, i, reported, signals[i]);
            break;
          }
          case BeliefMode::Circle:
            next[i] = circle_step(model, i, current[nb.front()], signals[i]);
            break;
          case BeliefMode::RandomNeighbor: {
            auto r = random_neighbor_step(model, i, choice_rng, current, signals[i], choice);
            next[i] = std::move(r.belief);
            picked.push_back(r.chosen);
            break;
          }
        }
      }
      current = std::move(next);
      if (run.spectral) trial.stats.push_back(global_stats(model, *run.spectral, current, signals));
      trial.beliefs.push_back(current);
      trial.signals.push_back(signals);
      if (mode == BeliefMode::RandomNeighbor) trial.choices.push_back(std::move(picked));
    }
  }
  return run;
}

}  // namespace bwr
