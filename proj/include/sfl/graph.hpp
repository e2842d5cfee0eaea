#pragma once
// Client relation graph: construction, row-stochastic GCN propagation of
// stacked parameters, readout, and proximity-based structure learning.

#include <string>

#include "sfl/numerics.hpp"

namespace sfl {

struct SensorField;

struct ClientGraph {
  std::size_t n = 0;
  DenseMatrix adjacency;  // N x N, non-negative, zero diagonal
  bool symmetric = true;

  static ClientGraph empty(std::size_t n);
  static ClientGraph complete(std::size_t n);
  // Block-diagonal complete graph over equal client blocks.
  static ClientGraph blocks(std::size_t n, std::size_t n_blocks);
};

// Rows of the stack are per-client parameter vectors.
using ParamStack = DenseMatrix;

// A_ij = exp(-d_ij^2 / sigma^2) thresholded, zero diagonal, symmetric.
ClientGraph gaussian_kernel_adjacency(const SensorField& field, double sigma,
                                      double threshold);

// P = D^-1 (A + I); every row sums to 1.
DenseMatrix propagation_matrix(const ClientGraph& g);

// P^m * stack. m = 0 is the identity.
ParamStack gcn_propagate(const DenseMatrix& p_matrix, const ParamStack& stack,
                         std::size_t m);

// Size-weighted mean of rows (FedAvg weighting).
ParamVector readout(const ParamStack& stack,
                    const std::vector<std::size_t>& sizes);

// s_ij = exp(-|v_i - v_j|^2 / tau), per-row top_k kept (ties to the
// lower client index), symmetrized by elementwise max.
ClientGraph structure_learn(const ParamStack& local_models, double tau,
                            std::size_t top_k);

// N rows of N space-separated decimals, 9 significant digits.
void dump_adjacency(const ClientGraph& g, const std::string& path);

}  // namespace sfl
