#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bwr {

/// Thrown when a model or scenario violates a precondition of an operation.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered, distinct state labels. Index 0..m-1 is the canonical state index.
struct StateSpace {
  std::vector<std::string> labels;

  std::size_t size() const { return labels.size(); }
};

/// Conditional law of one agent's private signal. Rows are signals, columns
/// are states, so column k is l_i(. | state k).
struct SignalStructure {
  Eigen::MatrixXd likelihood;

  std::size_t signal_count() const { return static_cast<std::size_t>(likelihood.rows()); }
  double operator()(std::size_t signal, std::size_t state) const {
    return likelihood(static_cast<Eigen::Index>(signal), static_cast<Eigen::Index>(state));
  }
};

/// Directed network. in_neighbors[i] holds N(i), the agents whose reports i
/// observes, in ascending order. [A]_ij = 1 iff j is in N(i).
class Network {
 public:
  Network() = default;
  explicit Network(std::size_t n) : in_(n) {}

  /// Builds from (from, to) pairs; from is an in-neighbor of to.
  static Network from_edges(std::size_t n,
                            const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  std::size_t size() const { return in_.size(); }
  const std::vector<std::size_t>& in_neighbors(std::size_t i) const { return in_.at(i); }
  std::size_t degree(std::size_t i) const { return in_.at(i).size(); }
  std::vector<std::size_t> out_neighbors(std::size_t j) const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  /// Adds j to N(i). Duplicates are ignored. Self-loops are kept so that
  /// validate() can report them.
  void add_edge(std::size_t from, std::size_t to);
  Eigen::MatrixXd adjacency() const;

 private:
  std::vector<std::vector<std::size_t>> in_;
};

struct ModelSpec {
  StateSpace states;
  std::vector<SignalStructure> signals;
  std::vector<Eigen::VectorXd> priors;
  Network network;
  std::size_t truth = 0;

  std::size_t agent_count() const { return network.size(); }
  std::size_t state_count() const { return states.size(); }
};

struct Violation {
  std::string location;
  std::string message;
};

/// Every invariant violation of the model; empty when valid.
std::vector<Violation> validate(const ModelSpec& model);

/// Throws ModelError listing all violations, if any.
void require_valid(const ModelSpec& model);

/// Draws a uniform double in [0, 1) from the top 53 bits of one engine output.
/// Used instead of std::uniform_real_distribution, whose algorithm is
/// implementation-defined.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw from a probability vector (one engine output).
std::size_t sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& probs,
                               std::mt19937_64& rng);

/// Draws s ~ l_agent(. | truth).
std::size_t sample_signal(const ModelSpec& model, std::size_t agent, std::mt19937_64& rng);

/// One signal per agent, agents in ascending index order.
std::vector<std::size_t> sample_signals(const ModelSpec& model, std::mt19937_64& rng);

/// log(l_i(s | false_state) / l_i(s | truth)). Returns -inf when the numerator
/// is zero. Throws when l_i(s | truth) = 0.
double log_likelihood_ratio(const ModelSpec& model, std::size_t agent, std::size_t signal,
                            std::size_t false_state);

/// D_KL(l_i(. | true_state) || l_i(. | false_state)); +inf when the support of
/// the first column is not contained in the second.
double kl_divergence(const ModelSpec& model, std::size_t agent, std::size_t true_state,
                     std::size_t false_state);

/// Splits a 64-bit seed into a stream seed; the same (seed, stream) pair always
/// yields the same engine state.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace bwr
