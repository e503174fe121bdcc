#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "bwr/model.hpp"

namespace bwr {

// Binary-state action dynamics. State index 0 is theta_1 (action +1) and state
// index 1 is theta_2 (action -1), whichever of them is the truth.

/// Vertex of {+1, -1}^n.
using ActionProfile = std::vector<std::int8_t>;

/// Bit i set iff a_i = +1.
std::uint64_t to_mask(const ActionProfile& profile);
ActionProfile from_mask(std::uint64_t mask, std::size_t n);

struct Dichotomy {
  std::vector<std::size_t> plus;   // S^1
  std::vector<std::size_t> minus;  // S^{-1}
};

struct IsingConstants {
  std::vector<Dichotomy> dichotomy;
  std::vector<double> V;
  std::vector<double> W;
  std::vector<double> w;    // log W
  std::vector<double> eta;  // log(nu(theta_1)/nu(theta_2)) + log V
  /// Agents whose dichotomy has an empty cell: their time-zero action is
  /// constant, so they carry no information and W = 1.
  std::vector<bool> degenerate;
};

/// Throws ModelError unless the model has exactly two states.
void require_binary(const ModelSpec& model);

/// S^1 = {s : l(s|theta_1) nu(theta_1) >= l(s|theta_2) nu(theta_2)}.
Dichotomy signal_dichotomy(const ModelSpec& model, std::size_t agent);

IsingConstants ising_constants(const ModelSpec& model);

/// log(l(s|theta_1) / l(s|theta_2)), +-inf when one side is zero and 0 when
/// both are.
double lambda1(const ModelSpec& model, std::size_t agent, std::size_t signal);

/// sum_{j in N(i)} w_j a_j + eta_i, summed over neighbors in ascending order.
double field(const ModelSpec& model, const IsingConstants& c, const ActionProfile& profile,
             std::size_t agent);

/// sign with sign(0) = +1.
inline std::int8_t sign_action(double x) { return x >= 0.0 ? std::int8_t{1} : std::int8_t{-1}; }

std::int8_t initial_action(const ModelSpec& model, const IsingConstants& c, std::size_t agent,
                           std::size_t signal);

/// Synchronous weighted-majority update of all agents.
ActionProfile step_actions(const ModelSpec& model, const IsingConstants& c,
                           const ActionProfile& profile, const std::vector<std::size_t>& signals);

struct NearTie {
  std::size_t trial;
  std::size_t time;
  std::size_t agent;
  double argument;
};

struct ActionTrajectories {
  std::vector<std::vector<ActionProfile>> trials;  // trials[k][t]
  std::vector<NearTie> near_ties;
};

/// Trial k draws its signals from an engine seeded with derive_seed(seed, k);
/// each step draws one signal per agent in ascending agent order.
ActionTrajectories simulate_actions(const ModelSpec& model, const IsingConstants& c,
                                    std::size_t horizon, std::size_t trials, std::uint64_t seed,
                                    double tie_window = 1e-9);

}  // namespace bwr
