#include "bwr/ising.hpp"

#include <cmath>
#include <limits>

namespace bwr {

namespace {

constexpr Eigen::Index kTheta1 = 0;
constexpr Eigen::Index kTheta2 = 1;

double prior_log_ratio(const ModelSpec& model, std::size_t agent) {
  const auto& nu = model.priors.at(agent);
  return std::log(nu(kTheta1) / nu(kTheta2));
}

struct CellMass {
  double plus_theta1 = 0, plus_theta2 = 0, minus_theta1 = 0, minus_theta2 = 0;
};

CellMass cell_mass(const ModelSpec& model, std::size_t agent, const Dichotomy& d) {
  const auto& l = model.signals.at(agent);
  CellMass m;
  for (auto s : d.plus) {
    m.plus_theta1 += l(s, kTheta1);
    m.plus_theta2 += l(s, kTheta2);
  }
  for (auto s : d.minus) {
    m.minus_theta1 += l(s, kTheta1);
    m.minus_theta2 += l(s, kTheta2);
  }
  return m;
}

}  // namespace

std::uint64_t to_mask(const ActionProfile& profile) {
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] > 0) mask |= std::uint64_t{1} << i;
  }
  return mask;
}

ActionProfile from_mask(std::uint64_t mask, std::size_t n) {
  ActionProfile p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = (mask >> i) & 1U ? std::int8_t{1} : std::int8_t{-1};
  return p;
}

void require_binary(const ModelSpec& model) {
  if (model.state_count() != 2) {
    throw ModelError("binary action dynamics need exactly 2 states, model has " +
                     std::to_string(model.state_count()));
  }
}

Dichotomy signal_dichotomy(const ModelSpec& model, std::size_t agent) {
  require_binary(model);
  const auto& l = model.signals.at(agent);
  const auto& nu = model.priors.at(agent);
  Dichotomy d;
  for (std::size_t s = 0; s < l.signal_count(); ++s) {
    if (l(s, kTheta1) * nu(kTheta1) >= l(s, kTheta2) * nu(kTheta2)) {
      d.plus.push_back(s);
    } else {
      d.minus.push_back(s);
    }
  }
  return d;
}

IsingConstants ising_constants(const ModelSpec& model) {
  require_binary(model);
  const std::size_t n = model.agent_count();
  IsingConstants c;
  c.dichotomy.resize(n);
  c.V.assign(n, 1.0);
  c.W.assign(n, 1.0);
  c.w.assign(n, 0.0);
  c.eta.assign(n, 0.0);
  c.degenerate.assign(n, false);

  std::vector<bool> observed(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : model.network.in_neighbors(i)) observed[j] = true;
  }

  // Per agent j: half log-ratio sums for the V product, and w_j.
  std::vector<double> half_log_v(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    c.dichotomy[j] = signal_dichotomy(model, j);
    const auto m = cell_mass(model, j, c.dichotomy[j]);
    const bool plus_null = m.plus_theta1 == 0.0 && m.plus_theta2 == 0.0;
    const bool minus_null = m.minus_theta1 == 0.0 && m.minus_theta2 == 0.0;
    if (plus_null || minus_null) {
      c.degenerate[j] = true;
      continue;
    }
    const auto bad_cell = [&](const char* cell) {
      throw ModelError("agent " + std::to_string(j) + ": dichotomy cell " + cell +
                       " has zero probability under one state, so its action ratio is undefined");
    };
    if (observed[j]) {
      if (m.plus_theta1 == 0.0 || m.plus_theta2 == 0.0) bad_cell("S^1");
      if (m.minus_theta1 == 0.0 || m.minus_theta2 == 0.0) bad_cell("S^-1");
    }
    const double log_x = std::log(m.plus_theta1) - std::log(m.plus_theta2);
    const double log_y = std::log(m.minus_theta1) - std::log(m.minus_theta2);
    half_log_v[j] = 0.5 * (log_x + log_y);
    c.w[j] = 0.5 * (log_x - log_y);
    c.W[j] = std::exp(c.w[j]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    double log_v = 0.0;
    for (auto j : model.network.in_neighbors(i)) log_v += half_log_v[j];
    c.V[i] = std::exp(log_v);
    c.eta[i] = prior_log_ratio(model, i) + log_v;
  }
  return c;
}

double lambda1(const ModelSpec& model, std::size_t agent, std::size_t signal) {
  const auto& l = model.signals.at(agent);
  const double a = l(signal, kTheta1);
  const double b = l(signal, kTheta2);
  if (a == b) return 0.0;
  if (b == 0.0) return std::numeric_limits<double>::infinity();
  if (a == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(a / b);
}

double field(const ModelSpec& model, const IsingConstants& c, const ActionProfile& profile,
             std::size_t agent) {
  double sum = 0.0;
  for (auto j : model.network.in_neighbors(agent)) sum += c.w[j] * static_cast<double>(profile[j]);
  return sum + c.eta[agent];
}

std::int8_t initial_action(const ModelSpec& model, const IsingConstants&, std::size_t agent,
                           std::size_t signal) {
  require_binary(model);
  return sign_action(prior_log_ratio(model, agent) + lambda1(model, agent, signal));
}

ActionProfile step_actions(const ModelSpec& model, const IsingConstants& c,
                           const ActionProfile& profile, const std::vector<std::size_t>& signals) {
  require_binary(model);
  ActionProfile next(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) {
    next[i] = sign_action(field(model, c, profile, i) + lambda1(model, i, signals[i]));
  }
  return next;
}

ActionTrajectories simulate_actions(const ModelSpec& model, const IsingConstants& c,
                                    std::size_t horizon, std::size_t trials, std::uint64_t seed,
                                    double tie_window) {
  require_binary(model);
  const std::size_t n = model.agent_count();
  ActionTrajectories out;
  out.trials.resize(trials);
  for (std::size_t k = 0; k < trials; ++k) {
    std::mt19937_64 rng(derive_seed(seed, k));
    auto& traj = out.trials[k];
    traj.reserve(horizon + 1);

    auto signals = sample_signals(model, rng);
    ActionProfile a(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = prior_log_ratio(model, i) + lambda1(model, i, signals[i]);
      if (std::abs(arg) < tie_window) out.near_ties.push_back({k, 0, i, arg});
      a[i] = sign_action(arg);
    }
    traj.push_back(a);

    for (std::size_t t = 1; t <= horizon; ++t) {
      signals = sample_signals(model, rng);
      ActionProfile next(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double arg = field(model, c, a, i) + lambda1(model, i, signals[i]);
        if (std::abs(arg) < tie_window) out.near_ties.push_back({k, t, i, arg});
        next[i] = sign_action(arg);
      }
      a = std::move(next);
      traj.push_back(a);
    }
  }
  return out;
}

}  // namespace bwr
