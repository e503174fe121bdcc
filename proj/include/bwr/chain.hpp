#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bwr/ising.hpp"
#include "bwr/model.hpp"

namespace bwr {

/// Largest agent count for which the dense 2^n x 2^n kernel is built.
inline constexpr std::size_t kMaxKernelAgents = 14;

/// Row-stochastic kernel over profile bitmasks: kernel(src, dst) is the
/// probability of moving from profile src to profile dst in one step.
using Kernel = Eigen::MatrixXd;

/// A set of profile bitmasks, ascending.
using ProfileSet = std::vector<std::uint64_t>;

struct ChainClasses {
  std::vector<ProfileSet> transient;
  std::vector<ProfileSet> recurrent;
};

struct ChainAnalysis {
  std::size_t n = 0;
  Kernel kernel;
  ChainClasses classes;
  ProfileSet equilibria;  // absorbing profiles
};

/// P(a_i = +1 next step | current profile): mass under the truth of the
/// signals whose sign argument is >= 0.
double activation_probability(const ModelSpec& model, const IsingConstants& c,
                              const ActionProfile& profile, std::size_t agent);

Kernel transition_kernel(const ModelSpec& model, const IsingConstants& c);

/// Communication classes of the positive-transition digraph. A class is
/// recurrent iff no positive-probability edge leaves it.
ChainClasses classify_states(const Kernel& kernel);

ChainAnalysis analyze_chain(const ModelSpec& model, const IsingConstants& c);

/// Profiles satisfying a_i (sum_j w_j a_j + eta_i + lambda_1(s)) >= 0 for every
/// agent and every signal possible under the truth; ties count for the
/// equilibrium.
ProfileSet equilibria_by_inequality(const ModelSpec& model, const IsingConstants& c);

/// {a : P(a, a) = 1}.
ProfileSet absorbing_profiles(const Kernel& kernel);

struct EquilibriumReport {
  ProfileSet by_inequality;
  ProfileSet absorbing;
  /// Profiles where the two tie conventions disagree (some argument is exactly 0).
  ProfileSet tie_sensitive;
};

EquilibriumReport equilibrium_report(const ModelSpec& model, const IsingConstants& c,
                                     const Kernel& kernel);

/// max_s |lambda_1(s) + eta_i| < sum_{j in N(i)} w_j for every agent.
bool consensus_equilibrium_check(const ModelSpec& model, const IsingConstants& c);

/// Stationary law of a row-stochastic matrix that is irreducible. Direct
/// solve of (P^T - I) p = 0 with a normalization row; Cesaro-averaged power
/// iteration if the solve is not accurate.
Eigen::VectorXd stationary_of(const Eigen::MatrixXd& stochastic);

/// Stationary law of the kernel restricted to a recurrent class, ordered as
/// the class.
Eigen::VectorXd stationary_distribution(const Kernel& kernel, const ProfileSet& recurrent_class);

/// Probability that the first recurrent class reached is each of
/// classes.recurrent, from the given law over all 2^n profiles.
Eigen::VectorXd absorption_analysis(const Kernel& kernel, const ChainClasses& classes,
                                    const Eigen::VectorXd& initial_distribution);

/// Row k: absorption probabilities starting from profile k.
Eigen::MatrixXd absorption_matrix(const Kernel& kernel, const ChainClasses& classes);

/// Law of the time-zero profile.
Eigen::VectorXd initial_profile_distribution(const ModelSpec& model, const IsingConstants& c);

}  // namespace bwr
