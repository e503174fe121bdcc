#pragma once
// Random model generators shared by the unit and acceptance tests.

#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bwr/model.hpp"

namespace bwr::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

inline Eigen::VectorXd random_simplex(std::mt19937_64& rng, std::size_t k, double floor = 0.05) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform(rng, floor, 1.0);
  return v / v.sum();
}

struct RandomModelOptions {
  std::size_t agents = 3;
  std::size_t states = 2;
  std::size_t min_signals = 2;
  std::size_t max_signals = 4;
  double edge_probability = 0.5;
  bool common_prior = false;
  bool uniform_prior = false;
  /// Probability that a likelihood column gets an exact zero entry.
  double zero_probability = 0.0;
  /// Probability that an agent gets two signals with proportional likelihoods.
  double collision_probability = 0.0;
};

inline ModelSpec random_model(std::mt19937_64& rng, const RandomModelOptions& o) {
  ModelSpec m;
  for (std::size_t k = 0; k < o.states; ++k) m.states.labels.push_back("s" + std::to_string(k));
  m.truth = uniform_index(rng, 0, o.states - 1);
  const auto shared_prior = o.uniform_prior ? Eigen::VectorXd::Constant(static_cast<Eigen::Index>(o.states), 1.0 / static_cast<double>(o.states)).eval()
                                            : random_simplex(rng, o.states, 0.2);
  for (std::size_t i = 0; i < o.agents; ++i) {
    const std::size_t k = uniform_index(rng, o.min_signals, o.max_signals);
    const bool collide = k >= 3 && uniform01(rng) < o.collision_probability;
    const std::size_t base = collide ? k - 1 : k;
    const double split = uniform(rng, 0.2, 0.8);
    Eigen::MatrixXd l(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(o.states));
    for (std::size_t th = 0; th < o.states; ++th) {
      Eigen::VectorXd col = random_simplex(rng, base);
      if (base > 1 && uniform01(rng) < o.zero_probability) {
        const auto z = static_cast<Eigen::Index>(uniform_index(rng, 0, base - 1));
        col(z) = 0.0;
        col /= col.sum();
      }
      const auto c = static_cast<Eigen::Index>(th);
      for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(base); ++s) l(s, c) = col(s);
      if (collide) {
        // The last signal is the first one split off with the same fraction
        // under every state, so the two produce identical posteriors.
        l(static_cast<Eigen::Index>(k - 1), c) = split * col(0);
        l(0, c) = (1.0 - split) * col(0);
      }
    }
    m.signals.push_back({l});
    m.priors.push_back(o.common_prior || o.uniform_prior ? shared_prior : random_simplex(rng, o.states, 0.2));
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < o.agents; ++i) {
    for (std::size_t j = 0; j < o.agents; ++j) {
      if (i != j && uniform01(rng) < o.edge_probability) edges.emplace_back(j, i);
    }
  }
  m.network = Network::from_edges(o.agents, edges);
  return m;
}

inline std::vector<std::pair<std::size_t, std::size_t>> complete_edges(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) e.emplace_back(j, i);
    }
  }
  return e;
}

/// Directed circle 0 -> 1 -> ... -> n-1 -> 0.
inline std::vector<std::pair<std::size_t, std::size_t>> circle_edges(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return e;
}

/// Model with the same likelihoods for every agent and a uniform prior.
inline ModelSpec homogeneous_model(const Eigen::MatrixXd& likelihood, std::size_t n,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                   std::size_t truth = 0) {
  ModelSpec m;
  const auto states = static_cast<std::size_t>(likelihood.cols());
  for (std::size_t k = 0; k < states; ++k) m.states.labels.push_back("s" + std::to_string(k));
  m.truth = truth;
  for (std::size_t i = 0; i < n; ++i) {
    m.signals.push_back({likelihood});
    m.priors.push_back(Eigen::VectorXd::Constant(likelihood.cols(), 1.0 / static_cast<double>(states)));
  }
  m.network = Network::from_edges(n, edges);
  return m;
}

}  // namespace bwr::testing
