#include "bwr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace bwr {

std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::DirectedCircle: return "DirectedCircle";
    case Topology::RootCircleTree: return "RootCircleTree";
    case Topology::StronglyConnectedGeneral: return "StronglyConnectedGeneral";
    case Topology::Other: return "Other";
  }
  return "Other";
}

std::vector<std::size_t> strongly_connected_components(
    const std::vector<std::vector<std::size_t>>& successors, std::size_t* component_count) {
  constexpr auto kUnvisited = std::numeric_limits<std::size_t>::max();
  const std::size_t n = successors.size();
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0), comp(n, kUnvisited);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t next_index = 0, next_comp = 0;

  // Iterative DFS: frame = (node, position in its successor list).
  std::vector<std::pair<std::size_t, std::size_t>> frames;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;

    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      if (pos < successors[v].size()) {
        const std::size_t w = successors[v][pos++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::size_t done = v;
      frames.pop_back();
      if (!frames.empty()) {
        const std::size_t parent = frames.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == index[done]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = next_comp;
        } while (w != done);
        ++next_comp;
      }
    }
  }
  if (component_count) *component_count = next_comp;
  return comp;
}

namespace {

std::vector<std::vector<std::size_t>> out_lists(const Network& net) {
  std::vector<std::vector<std::size_t>> out(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (auto j : net.in_neighbors(i)) out[j].push_back(i);
  }
  return out;
}

}  // namespace

bool strongly_connected(const Network& network) {
  if (network.size() == 0) return false;
  std::size_t count = 0;
  strongly_connected_components(out_lists(network), &count);
  return count == 1;
}

bool weakly_connected(const Network& network) {
  const std::size_t n = network.size();
  if (n == 0) return false;
  std::vector<std::vector<std::size_t>> undirected(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : network.in_neighbors(i)) {
      undirected[i].push_back(j);
      undirected[j].push_back(i);
    }
  }
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> todo{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!todo.empty()) {
    const auto v = todo.back();
    todo.pop_back();
    for (auto w : undirected[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        todo.push_back(w);
      }
    }
  }
  return reached == n;
}

std::size_t period(const Network& network) {
  const std::size_t n = network.size();
  if (n == 0) return 0;
  const auto out = out_lists(network);
  constexpr auto kUnseen = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> level(n, kUnseen);
  std::queue<std::size_t> q;
  level[0] = 0;
  q.push(0);
  std::size_t g = 0;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (auto w : out[v]) {
      if (level[w] == kUnseen) {
        level[w] = level[v] + 1;
        q.push(w);
      } else {
        const auto diff = level[v] + 1 >= level[w] ? level[v] + 1 - level[w] : level[w] - level[v] - 1;
        g = std::gcd(g, diff);
      }
    }
  }
  return g;
}

SpectralData perron(const Network& network, const PerronOptions& options) {
  if (!strongly_connected(network)) {
    throw ModelError("perron: network is not strongly connected");
  }
  const auto n = static_cast<Eigen::Index>(network.size());
  if (is_directed_circle(network)) {
    return {1.0, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)), 0};
  }

  Eigen::MatrixXd at = network.adjacency().transpose();
  const bool shifted = period(network) != 1;
  if (shifted) at += Eigen::MatrixXd::Identity(n, n);

  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd y(n);
  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    y.noalias() = at * x;
    y /= y.sum();
    const double delta = (y - x).cwiseAbs().maxCoeff();
    x.swap(y);
    if (delta < options.tolerance) break;
  }
  if (it == options.max_iterations) {
    throw ModelError("perron: power iteration did not converge within the iteration cap");
  }
  // With sum(x) = 1, the entries of x^T A sum to rho.
  double rho = (at * x).sum();
  if (shifted) rho -= 1.0;
  return {rho, x, it + 1};
}

double perron_residual(const Network& network, const SpectralData& spectral) {
  const Eigen::MatrixXd a = network.adjacency();
  const Eigen::VectorXd r = a.transpose() * spectral.alpha - spectral.rho * spectral.alpha;
  return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
}

bool is_directed_circle(const Network& network) {
  const std::size_t n = network.size();
  if (n < 2) return false;
  std::vector<std::size_t> out_degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (network.degree(i) != 1) return false;
    ++out_degree[network.in_neighbors(i).front()];
  }
  if (std::any_of(out_degree.begin(), out_degree.end(), [](auto d) { return d != 1; })) return false;
  // A permutation with one orbit.
  std::size_t v = 0, steps = 0;
  do {
    v = network.in_neighbors(v).front();
    ++steps;
  } while (v != 0 && steps <= n);
  return steps == n;
}

std::vector<std::size_t> root_circle(const Network& network) {
  const std::size_t n = network.size();
  if (n < 2 || !weakly_connected(network)) return {};
  // In-degree <= 1 everywhere with a cycle forces in-degree exactly 1: a
  // source has no path from the cycle. With n edges and weak connectivity
  // there is exactly one cycle, and walking predecessors from any node enters it.
  for (std::size_t i = 0; i < n; ++i) {
    if (network.degree(i) != 1) return {};
  }
  std::size_t v = 0;
  for (std::size_t k = 0; k < n; ++k) v = network.in_neighbors(v).front();
  std::vector<std::size_t> circle{v};
  for (std::size_t w = network.in_neighbors(v).front(); w != v; w = network.in_neighbors(w).front()) {
    circle.push_back(w);
  }
  std::sort(circle.begin(), circle.end());
  return circle;
}

Topology classify_topology(const Network& network) {
  if (is_directed_circle(network)) return Topology::DirectedCircle;
  if (strongly_connected(network)) return Topology::StronglyConnectedGeneral;
  if (!root_circle(network).empty()) return Topology::RootCircleTree;
  return Topology::Other;
}

std::vector<std::size_t> distance_from_root_circle(const Network& network) {
  const auto circle = root_circle(network);
  if (circle.empty()) throw ModelError("network has no root circle");
  const std::size_t n = network.size();
  const auto out = out_lists(network);
  constexpr auto kUnseen = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(n, kUnseen);
  std::queue<std::size_t> q;
  for (auto c : circle) {
    dist[c] = 0;
    q.push(c);
  }
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (auto w : out[v]) {
      if (dist[w] == kUnseen) {
        dist[w] = dist[v] + 1;
        q.push(w);
      }
    }
  }
  return dist;
}

}  // namespace bwr
