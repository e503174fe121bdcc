#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bwr/model.hpp"

namespace bwr {

/// Spectral radius of the adjacency matrix and its normalized Perron left
/// eigenvector (the centralities).
struct SpectralData {
  double rho = 0.0;
  Eigen::VectorXd alpha;
  std::size_t iterations = 0;  // 0 when solved analytically
};

enum class Topology { DirectedCircle, RootCircleTree, StronglyConnectedGeneral, Other };

std::string_view to_string(Topology t);

/// Tarjan's algorithm over successor lists. Component ids are assigned in the
/// order components are completed (reverse topological order of the
/// condensation).
std::vector<std::size_t> strongly_connected_components(
    const std::vector<std::vector<std::size_t>>& successors, std::size_t* component_count = nullptr);

bool strongly_connected(const Network& network);
bool weakly_connected(const Network& network);

/// gcd of cycle lengths; only meaningful for strongly connected graphs.
std::size_t period(const Network& network);

struct PerronOptions {
  double tolerance = 1e-13;
  std::size_t max_iterations = 1'000'000;
};

/// Power iteration on A^T. Directed circles are solved analytically; periodic
/// graphs are iterated on A + I. Throws ModelError unless strongly connected.
SpectralData perron(const Network& network, const PerronOptions& options = {});

/// inf-norm of alpha^T A - rho alpha^T.
double perron_residual(const Network& network, const SpectralData& spectral);

bool is_directed_circle(const Network& network);

Topology classify_topology(const Network& network);

/// Members of the unique directed cycle of a DirectedCircle or RootCircleTree
/// graph, ascending. Empty for other topologies.
std::vector<std::size_t> root_circle(const Network& network);

/// Hop distance from the root circle along out-edges (0 on the circle). Only
/// defined for DirectedCircle and RootCircleTree graphs.
std::vector<std::size_t> distance_from_root_circle(const Network& network);

}  // namespace bwr
