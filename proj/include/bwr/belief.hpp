#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bwr/graph.hpp"
#include "bwr/model.hpp"

namespace bwr {

/// Normalized log-probabilities over the states (log-sum-exp = 0).
using LogBelief = Eigen::VectorXd;

/// One log-belief per agent.
using BeliefProfile = std::vector<LogBelief>;

/// Max-shift normalization in the log domain. Throws ModelError when every
/// entry is -inf.
LogBelief normalize_log(const Eigen::VectorXd& unnormalized);

/// Log-belief ratios are clamped to [-700, 700] here and nowhere else.
Eigen::VectorXd to_probabilities(const LogBelief& belief);
LogBelief from_probabilities(const Eigen::VectorXd& probabilities);

/// phi(false_state) = log mu(false_state) - log mu(truth).
double log_belief_ratio(const LogBelief& belief, std::size_t truth, std::size_t false_state);

bool has_common_prior(const ModelSpec& model, double tol = 1e-12);

/// Bayes' rule from the agent's prior on one signal.
LogBelief bayes_initial_belief(const ModelSpec& model, std::size_t agent, std::size_t signal);

/// Sequential Bayes: belief times own likelihood, renormalized.
LogBelief single_agent_bayes_step(const ModelSpec& model, std::size_t agent, const LogBelief& belief,
                                  std::size_t signal);

/// Memoryless network update: prior times own likelihood times, for every
/// in-neighbor, the ratio of its reported belief to its prior.
/// neighbor_beliefs follows the order of network.in_neighbors(agent).
LogBelief bwr_belief_step(const ModelSpec& model, std::size_t agent,
                          const std::vector<LogBelief>& neighbor_beliefs, std::size_t signal);

struct OracleOptions {
  /// Total-variation radius for matching a reported belief to a signal.
  double match_tolerance = 1e-9;
};

/// Exact time-one Bayesian posterior by enumeration: each neighbor's reported
/// belief is inverted to the set of its signals that produce it, and joint
/// likelihoods are summed over every combination of those signals.
/// neighbor_beliefs are probability vectors in network.in_neighbors(agent) order.
Eigen::VectorXd time_one_oracle(const ModelSpec& model, std::size_t agent,
                                const std::vector<Eigen::VectorXd>& neighbor_beliefs,
                                std::size_t signal, const OracleOptions& options = {});

/// Predecessor belief times own likelihood. Needs in-degree 1 and a common prior.
LogBelief circle_step(const ModelSpec& model, std::size_t agent, const LogBelief& predecessor_belief,
                      std::size_t signal);

/// Per-agent distribution over in-neighbors, aligned with in_neighbors(i).
using NeighborChoice = std::vector<Eigen::VectorXd>;

NeighborChoice uniform_neighbor_choice(const Network& network);

/// Row-stochastic matrix of the neighbor-choice chain (i -> chosen j).
Eigen::MatrixXd neighbor_choice_matrix(const Network& network, const NeighborChoice& choice);

struct RandomNeighborResult {
  LogBelief belief;
  std::size_t chosen;
};

/// Samples one in-neighbor and applies the circle update with its belief.
RandomNeighborResult random_neighbor_step(const ModelSpec& model, std::size_t agent,
                                          std::mt19937_64& rng, const BeliefProfile& current,
                                          std::size_t signal, const NeighborChoice& choice);

/// Centrality-weighted statistics, indexed by state; the truth's entry is 0.
struct GlobalStats {
  Eigen::VectorXd phi;     // sum_i alpha_i phi_i(false)
  Eigen::VectorXd lambda;  // sum_i alpha_i lambda_false(s_i)
  Eigen::VectorXd beta;    // sum_i alpha_i log(nu_i(false)/nu_i(truth))
};

GlobalStats global_stats(const ModelSpec& model, const SpectralData& spectral,
                         const BeliefProfile& beliefs, const std::vector<std::size_t>& signals);

struct RateReport {
  double centralized = 0.0;
  std::size_t centralized_binding = 0;
  double circle = 0.0;
  std::vector<double> individual;
  std::vector<std::size_t> individual_binding;
  double average_individual = 0.0;
  std::optional<double> random_walk;
  std::optional<std::size_t> random_walk_binding;
  Eigen::VectorXd stationary;  // neighbor-choice law, when computed
};

/// The random-walk rate is reported only for strongly connected networks.
RateReport learning_rates(const ModelSpec& model,
                          const std::optional<NeighborChoice>& neighbor_choice = std::nullopt);

struct LearningVerdict {
  bool learning = false;
  double rate = 0.0;
  bool saturated = false;  // a log-belief ratio reached -inf; rate is +inf
};

/// Per-agent operational learning check over the last `window` steps
/// (0 = final 20% of the trajectory), plus the negated least-squares slope of
/// max_false phi_t over the same window.
std::vector<LearningVerdict> detect_learning(const std::vector<BeliefProfile>& trajectory,
                                             std::size_t truth, double threshold = 0.99,
                                             std::size_t window = 0);

/// Least-squares slope of ys against their index.
double least_squares_slope(const std::vector<double>& ys);

struct PooledRate {
  double rate = 0.0;
  std::size_t binding = 0;
  Eigen::VectorXd per_state;  // mean decay rate of phi per false state
};

/// Rate estimate pooled over trials and agents: for each false state the
/// least-squares slope of phi_t over steps [first, last] is averaged, and the
/// smallest negated mean slope is reported.
PooledRate pooled_rate(const std::vector<std::vector<BeliefProfile>>& trials,
                       const std::vector<std::size_t>& agents, std::size_t truth, std::size_t first,
                       std::size_t last);

enum class BeliefMode { FullNetwork, Circle, RandomNeighbor };

std::string_view to_string(BeliefMode mode);
BeliefMode belief_mode_from_string(std::string_view name);

struct BeliefTrial {
  std::vector<BeliefProfile> beliefs;                // beliefs[t][i]
  std::vector<std::vector<std::size_t>> signals;     // signals[t][i]
  std::vector<std::vector<std::size_t>> choices;     // random-neighbor mode, t >= 1
  std::vector<GlobalStats> stats;                    // when the network is strongly connected
};

struct BeliefRun {
  std::optional<SpectralData> spectral;
  std::vector<BeliefTrial> trials;
};

struct BeliefSimOptions {
  std::optional<NeighborChoice> neighbor_choice;
  bool record_stats = true;
};

/// Trial k: signals from derive_seed(seed, k) (one per agent per step,
/// ascending agents), neighbor choices from derive_seed(~seed, k).
BeliefRun simulate_beliefs(const ModelSpec& model, BeliefMode mode, std::size_t horizon,
                           std::size_t trials, std::uint64_t seed, const BeliefSimOptions& options = {});

}  // namespace bwr
