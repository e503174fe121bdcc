#include "bwr/chain.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "bwr/graph.hpp"

namespace bwr {

namespace {

std::size_t profile_count(std::size_t n) { return std::size_t{1} << n; }

void require_kernel_capacity(std::size_t n) {
  if (n > kMaxKernelAgents) {
    throw ModelError("dense transition kernel supports at most " + std::to_string(kMaxKernelAgents) +
                     " agents, model has " + std::to_string(n) + "; use simulation instead");
  }
}

// Product law over profiles given each agent's probability of playing +1.
Eigen::VectorXd product_law(const std::vector<double>& plus_prob) {
  Eigen::VectorXd law(static_cast<Eigen::Index>(profile_count(plus_prob.size())));
  law(0) = 1.0;
  Eigen::Index filled = 1;
  for (double p : plus_prob) {
    for (Eigen::Index m = 0; m < filled; ++m) {
      law(m + filled) = law(m) * p;
      law(m) *= 1.0 - p;
    }
    filled *= 2;
  }
  return law;
}

// Exact 0 and 1 when one side is empty; columns sum to 1 only within 1e-12.
double split_probability(double pass, double fail) {
  if (fail == 0.0) return 1.0;
  if (pass == 0.0) return 0.0;
  return pass / (pass + fail);
}

std::vector<std::size_t> possible_signals(const ModelSpec& model, std::size_t agent) {
  std::vector<std::size_t> out;
  const auto& l = model.signals.at(agent);
  for (std::size_t s = 0; s < l.signal_count(); ++s) {
    if (l(s, model.truth) > 0.0) out.push_back(s);
  }
  return out;
}

}  // namespace

double activation_probability(const ModelSpec& model, const IsingConstants& c,
                              const ActionProfile& profile, std::size_t agent) {
  require_binary(model);
  const auto& l = model.signals.at(agent);
  const double x = field(model, c, profile, agent);
  double pass = 0.0, fail = 0.0;
  for (std::size_t s = 0; s < l.signal_count(); ++s) {
    const double mass = l(s, model.truth);
    if (mass <= 0.0) continue;
    (sign_action(x + lambda1(model, agent, s)) > 0 ? pass : fail) += mass;
  }
  return split_probability(pass, fail);
}

Kernel transition_kernel(const ModelSpec& model, const IsingConstants& c) {
  require_binary(model);
  const std::size_t n = model.agent_count();
  require_kernel_capacity(n);
  const auto size = static_cast<Eigen::Index>(profile_count(n));
  Kernel kernel(size, size);
  std::vector<double> pi(n);
  for (Eigen::Index src = 0; src < size; ++src) {
    const auto profile = from_mask(static_cast<std::uint64_t>(src), n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = activation_probability(model, c, profile, i);
    kernel.row(src) = product_law(pi).transpose();
  }
  return kernel;
}

ChainClasses classify_states(const Kernel& kernel) {
  const auto size = static_cast<std::size_t>(kernel.rows());
  std::vector<std::vector<std::size_t>> succ(size);
  for (std::size_t a = 0; a < size; ++a) {
    for (std::size_t b = 0; b < size; ++b) {
      if (kernel(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) > 0.0) succ[a].push_back(b);
    }
  }
  std::size_t count = 0;
  const auto comp = strongly_connected_components(succ, &count);
  std::vector<ProfileSet> members(count);
  std::vector<bool> closed(count, true);
  for (std::size_t a = 0; a < size; ++a) {
    members[comp[a]].push_back(a);
    for (auto b : succ[a]) {
      if (comp[b] != comp[a]) closed[comp[a]] = false;
    }
  }
  ChainClasses out;
  for (std::size_t k = 0; k < count; ++k) {
    (closed[k] ? out.recurrent : out.transient).push_back(std::move(members[k]));
  }
  const auto by_first = [](const ProfileSet& x, const ProfileSet& y) { return x.front() < y.front(); };
  std::sort(out.recurrent.begin(), out.recurrent.end(), by_first);
  std::sort(out.transient.begin(), out.transient.end(), by_first);
  return out;
}

ProfileSet absorbing_profiles(const Kernel& kernel) {
  ProfileSet out;
  for (Eigen::Index a = 0; a < kernel.rows(); ++a) {
    if (kernel(a, a) == 1.0) out.push_back(static_cast<std::uint64_t>(a));
  }
  return out;
}

ChainAnalysis analyze_chain(const ModelSpec& model, const IsingConstants& c) {
  ChainAnalysis out;
  out.n = model.agent_count();
  out.kernel = transition_kernel(model, c);
  out.classes = classify_states(out.kernel);
  out.equilibria = absorbing_profiles(out.kernel);
  return out;
}

ProfileSet equilibria_by_inequality(const ModelSpec& model, const IsingConstants& c) {
  require_binary(model);
  const std::size_t n = model.agent_count();
  require_kernel_capacity(n);
  std::vector<std::vector<std::size_t>> possible(n);
  for (std::size_t i = 0; i < n; ++i) possible[i] = possible_signals(model, i);

  ProfileSet out;
  for (std::uint64_t mask = 0; mask < profile_count(n); ++mask) {
    const auto a = from_mask(mask, n);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      const double x = field(model, c, a, i);
      for (auto s : possible[i]) {
        if (static_cast<double>(a[i]) * (x + lambda1(model, i, s)) < 0.0) {
          ok = false;
          break;
        }
      }
    }
    if (ok) out.push_back(mask);
  }
  return out;
}

EquilibriumReport equilibrium_report(const ModelSpec& model, const IsingConstants& c,
                                     const Kernel& kernel) {
  EquilibriumReport r;
  r.by_inequality = equilibria_by_inequality(model, c);
  r.absorbing = absorbing_profiles(kernel);
  std::set_symmetric_difference(r.by_inequality.begin(), r.by_inequality.end(), r.absorbing.begin(),
                                r.absorbing.end(), std::back_inserter(r.tie_sensitive));
  return r;
}

bool consensus_equilibrium_check(const ModelSpec& model, const IsingConstants& c) {
  require_binary(model);
  for (std::size_t i = 0; i < model.agent_count(); ++i) {
    double w_sum = 0.0;
    for (auto j : model.network.in_neighbors(i)) w_sum += c.w[j];
    for (auto s : possible_signals(model, i)) {
      if (!(std::abs(lambda1(model, i, s) + c.eta[i]) < w_sum)) return false;
    }
  }
  return true;
}

Eigen::VectorXd stationary_of(const Eigen::MatrixXd& p) {
  const Eigen::Index k = p.rows();
  if (k == 1) return Eigen::VectorXd::Ones(1);
  Eigen::MatrixXd m = p.transpose() - Eigen::MatrixXd::Identity(k, k);
  m.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(k - 1) = 1.0;
  Eigen::VectorXd x = m.fullPivLu().solve(rhs);

  const auto acceptable = [&](const Eigen::VectorXd& v) {
    if (!v.allFinite() || v.minCoeff() < -1e-12) return false;
    const double resid = (p.transpose() * v - v).cwiseAbs().maxCoeff();
    return resid < 1e-12 && std::abs(v.sum() - 1.0) < 1e-12;
  };
  if (!acceptable(x)) {
    // Cesaro averages converge for periodic irreducible chains.
    Eigen::VectorXd cur = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(k);
    constexpr int kSteps = 200000;
    for (int t = 1; t <= kSteps; ++t) {
      cur = p.transpose() * cur;
      avg += (cur - avg) / static_cast<double>(t);
    }
    x = avg;
  }
  x = x.cwiseMax(0.0);
  return x / x.sum();
}

Eigen::VectorXd stationary_distribution(const Kernel& kernel, const ProfileSet& cls) {
  const auto k = static_cast<Eigen::Index>(cls.size());
  Eigen::MatrixXd sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      sub(a, b) = kernel(static_cast<Eigen::Index>(cls[static_cast<std::size_t>(a)]),
                         static_cast<Eigen::Index>(cls[static_cast<std::size_t>(b)]));
    }
  }
  // Rows of a closed class sum to 1 up to rounding.
  for (Eigen::Index a = 0; a < k; ++a) sub.row(a) /= sub.row(a).sum();
  return stationary_of(sub);
}

Eigen::MatrixXd absorption_matrix(const Kernel& kernel, const ChainClasses& classes) {
  const auto size = static_cast<std::size_t>(kernel.rows());
  const auto r = static_cast<Eigen::Index>(classes.recurrent.size());
  constexpr auto kNone = static_cast<Eigen::Index>(-1);
  std::vector<Eigen::Index> recurrent_of(size, kNone);
  for (Eigen::Index c = 0; c < r; ++c) {
    for (auto a : classes.recurrent[static_cast<std::size_t>(c)]) recurrent_of[a] = c;
  }
  std::vector<std::size_t> transient;
  std::vector<Eigen::Index> transient_pos(size, kNone);
  for (std::size_t a = 0; a < size; ++a) {
    if (recurrent_of[a] == kNone) {
      transient_pos[a] = static_cast<Eigen::Index>(transient.size());
      transient.push_back(a);
    }
  }

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size), r);
  for (std::size_t a = 0; a < size; ++a) {
    if (recurrent_of[a] != kNone) out(static_cast<Eigen::Index>(a), recurrent_of[a]) = 1.0;
  }
  if (transient.empty()) return out;

  // (I - Q) B = R on the transient block, recurrent classes collapsed.
  const auto t = static_cast<Eigen::Index>(transient.size());
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(t, t);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(t, r);
  for (Eigen::Index x = 0; x < t; ++x) {
    const auto src = static_cast<Eigen::Index>(transient[static_cast<std::size_t>(x)]);
    for (std::size_t b = 0; b < size; ++b) {
      const double p = kernel(src, static_cast<Eigen::Index>(b));
      if (p == 0.0) continue;
      if (recurrent_of[b] != kNone) {
        rhs(x, recurrent_of[b]) += p;
      } else {
        lhs(x, transient_pos[b]) -= p;
      }
    }
  }
  const Eigen::MatrixXd b = lhs.partialPivLu().solve(rhs);
  for (Eigen::Index x = 0; x < t; ++x) {
    out.row(static_cast<Eigen::Index>(transient[static_cast<std::size_t>(x)])) = b.row(x);
  }
  return out;
}

Eigen::VectorXd absorption_analysis(const Kernel& kernel, const ChainClasses& classes,
                                    const Eigen::VectorXd& initial_distribution) {
  if (initial_distribution.size() != kernel.rows()) {
    throw ModelError("initial distribution has the wrong length for this kernel");
  }
  return absorption_matrix(kernel, classes).transpose() * initial_distribution;
}

Eigen::VectorXd initial_profile_distribution(const ModelSpec& model, const IsingConstants& c) {
  require_binary(model);
  const std::size_t n = model.agent_count();
  require_kernel_capacity(n);
  std::vector<double> plus(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = model.signals.at(i);
    double pass = 0.0, fail = 0.0;
    for (std::size_t s = 0; s < l.signal_count(); ++s) {
      const double mass = l(s, model.truth);
      if (mass <= 0.0) continue;
      (initial_action(model, c, i, s) > 0 ? pass : fail) += mass;
    }
    plus[i] = split_probability(pass, fail);
  }
  return product_law(plus);
}

}  // namespace bwr
