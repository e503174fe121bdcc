#include "bwr/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace bwr {

namespace {

constexpr double kSumTolerance = 1e-12;

std::string agent_loc(std::size_t i) { return "agent " + std::to_string(i); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Network Network::from_edges(std::size_t n,
                            const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Network net(n);
  for (const auto& [from, to] : edges) {
    if (from >= n || to >= n) {
      throw ModelError("edge (" + std::to_string(from) + ", " + std::to_string(to) +
                       ") references an agent outside 0.." + std::to_string(n - 1));
    }
    net.add_edge(from, to);
  }
  return net;
}

void Network::add_edge(std::size_t from, std::size_t to) {
  auto& nb = in_.at(to);
  auto it = std::lower_bound(nb.begin(), nb.end(), from);
  if (it == nb.end() || *it != from) nb.insert(it, from);
}

std::vector<std::size_t> Network::out_neighbors(std::size_t j) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < in_.size(); ++i) {
    if (std::binary_search(in_[i].begin(), in_[i].end(), j)) out.push_back(i);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> Network::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < in_.size(); ++i) {
    for (auto j : in_[i]) out.emplace_back(j, i);
  }
  return out;
}

Eigen::MatrixXd Network::adjacency() const {
  const auto n = static_cast<Eigen::Index>(in_.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < in_.size(); ++i) {
    for (auto j : in_[i]) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  }
  return a;
}

std::vector<Violation> validate(const ModelSpec& model) {
  std::vector<Violation> out;
  const std::size_t m = model.state_count();
  const std::size_t n = model.agent_count();

  if (m < 2) out.push_back({"states", "need at least 2 states, got " + std::to_string(m)});
  std::set<std::string> seen;
  for (const auto& label : model.states.labels) {
    if (!seen.insert(label).second) out.push_back({"states", "duplicate label '" + label + "'"});
  }
  if (model.truth >= m) {
    out.push_back({"truth", "index " + std::to_string(model.truth) + " is not a state"});
  }
  if (model.signals.size() != n) {
    out.push_back({"signals", "have " + std::to_string(model.signals.size()) +
                                  " signal structures for " + std::to_string(n) + " agents"});
  }
  if (model.priors.size() != n) {
    out.push_back({"priors", "have " + std::to_string(model.priors.size()) + " priors for " +
                                 std::to_string(n) + " agents"});
  }

  for (std::size_t i = 0; i < std::min(n, model.signals.size()); ++i) {
    const auto& l = model.signals[i].likelihood;
    if (l.rows() < 1) {
      out.push_back({agent_loc(i), "has no signals"});
      continue;
    }
    if (static_cast<std::size_t>(l.cols()) != m) {
      out.push_back({agent_loc(i), "likelihood has " + std::to_string(l.cols()) +
                                       " columns, expected " + std::to_string(m)});
      continue;
    }
    for (Eigen::Index k = 0; k < l.cols(); ++k) {
      bool bad_entry = false;
      for (Eigen::Index s = 0; s < l.rows(); ++s) {
        const double v = l(s, k);
        if (!(v >= 0.0 && v <= 1.0)) {
          out.push_back({agent_loc(i) + ", signal " + std::to_string(s) + ", state " +
                             model.states.labels.at(static_cast<std::size_t>(k)),
                         "likelihood entry outside [0, 1]"});
          bad_entry = true;
        }
      }
      const double sum = l.col(k).sum();
      if (!bad_entry && std::abs(sum - 1.0) > kSumTolerance) {
        std::ostringstream os;
        os << "likelihood column sums to " << sum;
        out.push_back({agent_loc(i) + ", state " + model.states.labels.at(static_cast<std::size_t>(k)),
                       os.str()});
      }
    }
  }

  for (std::size_t i = 0; i < std::min(n, model.priors.size()); ++i) {
    const auto& p = model.priors[i];
    if (static_cast<std::size_t>(p.size()) != m) {
      out.push_back({agent_loc(i), "prior has " + std::to_string(p.size()) + " entries, expected " +
                                       std::to_string(m)});
      continue;
    }
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      if (!(p(k) > 0.0)) {
        out.push_back({agent_loc(i) + ", state " + model.states.labels.at(static_cast<std::size_t>(k)),
                       "prior lacks full support"});
      }
    }
    if (std::abs(p.sum() - 1.0) > kSumTolerance) {
      std::ostringstream os;
      os << "prior sums to " << p.sum();
      out.push_back({agent_loc(i), os.str()});
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : model.network.in_neighbors(i)) {
      if (j == i) out.push_back({agent_loc(i), "self-loop in network"});
    }
  }
  return out;
}

void require_valid(const ModelSpec& model) {
  const auto violations = validate(model);
  if (violations.empty()) return;
  std::ostringstream os;
  os << "invalid model:";
  for (const auto& v : violations) os << "\n  " << v.location << ": " << v.message;
  throw ModelError(os.str());
}

std::size_t sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& probs,
                               std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    if (probs(k) <= 0.0) continue;
    cum += probs(k);
    last_positive = static_cast<std::size_t>(k);
    if (u < cum) return last_positive;
  }
  // Rounding left u above the accumulated mass.
  return last_positive;
}

std::size_t sample_signal(const ModelSpec& model, std::size_t agent, std::mt19937_64& rng) {
  const auto& l = model.signals.at(agent).likelihood;
  return sample_categorical(l.col(static_cast<Eigen::Index>(model.truth)), rng);
}

std::vector<std::size_t> sample_signals(const ModelSpec& model, std::mt19937_64& rng) {
  std::vector<std::size_t> s(model.agent_count());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = sample_signal(model, i, rng);
  return s;
}

double log_likelihood_ratio(const ModelSpec& model, std::size_t agent, std::size_t signal,
                            std::size_t false_state) {
  const auto& l = model.signals.at(agent);
  const double true_l = l(signal, model.truth);
  const double false_l = l(signal, false_state);
  if (!(true_l > 0.0)) {
    throw ModelError("agent " + std::to_string(agent) + ", signal " + std::to_string(signal) +
                     " has zero likelihood under the truth");
  }
  if (false_l == true_l) return 0.0;
  if (false_l == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(false_l / true_l);
}

double kl_divergence(const ModelSpec& model, std::size_t agent, std::size_t true_state,
                     std::size_t false_state) {
  const auto& l = model.signals.at(agent).likelihood;
  const auto p = l.col(static_cast<Eigen::Index>(true_state));
  const auto q = l.col(static_cast<Eigen::Index>(false_state));
  if (p == q) return 0.0;
  double d = 0.0;
  for (Eigen::Index s = 0; s < p.size(); ++s) {
    if (p(s) == 0.0) continue;
    if (q(s) == 0.0) return std::numeric_limits<double>::infinity();
    d += p(s) * std::log(p(s) / q(s));
  }
  // Columns that differ only by rounding can produce a tiny negative sum.
  return std::max(d, 0.0);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5851F42D4C957F2DULL));
}

}  // namespace bwr
