#include "sfl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "sfl/datagen.hpp"
#include "sfl/kernels.hpp"

namespace sfl {

ClientGraph ClientGraph::empty(std::size_t n) {
  return ClientGraph{n, DenseMatrix(n, n), true};
}

ClientGraph ClientGraph::complete(std::size_t n) {
  ClientGraph g{n, DenseMatrix(n, n), true};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) g.adjacency.at(i, j) = 1.0;
  return g;
}

ClientGraph ClientGraph::blocks(std::size_t n, std::size_t n_blocks) {
  if (n_blocks == 0 || n % n_blocks != 0)
    throw std::invalid_argument("ClientGraph::blocks: n not divisible by n_blocks");
  ClientGraph g{n, DenseMatrix(n, n), true};
  const std::size_t per = n / n_blocks;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && i / per == j / per) g.adjacency.at(i, j) = 1.0;
  return g;
}

ClientGraph gaussian_kernel_adjacency(const SensorField& field, double sigma,
                                      double threshold) {
  if (sigma <= 0.0)
    throw std::invalid_argument("gaussian_kernel_adjacency: sigma must be > 0");
  const std::size_t n = field.distance.rows;
  ClientGraph g{n, DenseMatrix(n, n), true};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = field.distance.at(i, j);
      const double w = std::exp(-(d * d) / (sigma * sigma));
      if (w >= threshold) g.adjacency.at(i, j) = w;
    }
  }
  return g;
}

DenseMatrix propagation_matrix(const ClientGraph& g) {
  const std::size_t n = g.n;
  DenseMatrix p = g.adjacency;
  for (std::size_t i = 0; i < n; ++i) p.at(i, i) += 1.0;  // self-loop
  for (std::size_t i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (std::size_t j = 0; j < n; ++j) rowsum += p.at(i, j);
    for (std::size_t j = 0; j < n; ++j) p.at(i, j) /= rowsum;
  }
  return p;
}

ParamStack gcn_propagate(const DenseMatrix& p_matrix, const ParamStack& stack,
                         std::size_t m) {
  if (p_matrix.cols != stack.rows)
    throw std::invalid_argument("gcn_propagate: dimension mismatch");
  // One step is computed as x_i + sum_k P_ik (x_k - x_i), equal to P x
  // in exact arithmetic. The difference form keeps identical rows an
  // exact fixed point even though float row sums only approximate 1.
  ParamStack out = stack;
  for (std::size_t step = 0; step < m; ++step) {
    ParamStack next = out;
    for (std::size_t i = 0; i < out.rows; ++i) {
      for (std::size_t k = 0; k < out.rows; ++k) {
        const double p = p_matrix.at(i, k);
        if (p == 0.0 || k == i) continue;
        for (std::size_t c = 0; c < out.cols; ++c)
          next.at(i, c) += p * (out.at(k, c) - out.at(i, c));
      }
      // the diagonal contributes p_ii (x_i - x_i) = 0 and is skipped
    }
    out = next;
  }
  return out;
}

ParamVector readout(const ParamStack& stack,
                    const std::vector<std::size_t>& sizes) {
  if (stack.rows == 0 || sizes.size() != stack.rows)
    throw std::invalid_argument("readout: empty stack or sizes mismatch");
  std::vector<ParamVector> rows(stack.rows);
  std::vector<double> weights(stack.rows);
  for (std::size_t i = 0; i < stack.rows; ++i) {
    rows[i].assign(stack.row(i), stack.row(i) + stack.cols);
    weights[i] = static_cast<double>(sizes[i]);
  }
  return weighted_mean(rows, weights);
}

ClientGraph structure_learn(const ParamStack& local_models, double tau,
                            std::size_t top_k) {
  if (tau <= 0.0) throw std::invalid_argument("structure_learn: tau must be > 0");
  const std::size_t n = local_models.rows;
  if (top_k < 1 || top_k >= n)
    throw std::invalid_argument("structure_learn: need 1 <= top_k < N");

  DenseMatrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sq = kernels::active().sq_dist(
          local_models.row(i), local_models.row(j), local_models.cols);
      const double s = std::exp(-sq / tau);
      sim.at(i, j) = s;
      sim.at(j, i) = s;
    }
  }

  ClientGraph g{n, DenseMatrix(n, n), true};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    // descending similarity, ties to lower client index
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sim.at(i, a) > sim.at(i, b);
    });
    for (std::size_t r = 0; r < top_k; ++r)
      g.adjacency.at(i, order[r]) = sim.at(i, order[r]);
  }
  // symmetrize by elementwise max
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = std::max(g.adjacency.at(i, j), g.adjacency.at(j, i));
      g.adjacency.at(i, j) = w;
      g.adjacency.at(j, i) = w;
    }
  }
  return g;
}

void dump_adjacency(const ClientGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_adjacency: cannot open " + path);
  char buf[32];
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", g.adjacency.at(i, j));
      out << buf << (j + 1 < g.n ? " " : "");
    }
    out << "\n";
  }
}

}  // namespace sfl
