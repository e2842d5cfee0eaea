#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "sfl/datagen.hpp"
#include "sfl/graph.hpp"

using namespace sfl;

namespace {

ClientGraph random_graph(std::size_t n, RngStream& rng) {
  ClientGraph g{n, DenseMatrix(n, n), true};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.uniform01() < 0.4) {
        const double w = rng.uniform01();
        g.adjacency.at(i, j) = w;
        g.adjacency.at(j, i) = w;
      }
    }
  }
  return g;
}

ParamStack random_stack(std::size_t n, std::size_t p, RngStream& rng) {
  ParamStack s(n, p);
  for (double& v : s.values) v = rng.normal();
  return s;
}

}  // namespace

TEST_CASE("gaussian_kernel_adjacency closed forms") {
  SensorField f;
  f.coords = DenseMatrix(3, 2);
  f.distance = DenseMatrix(3, 3);
  // nodes 0,1 coincident; node 2 at distance sigma from both
  const double sigma = 0.5;
  f.distance.at(0, 2) = sigma;
  f.distance.at(2, 0) = sigma;
  f.distance.at(1, 2) = sigma;
  f.distance.at(2, 1) = sigma;

  const ClientGraph g = gaussian_kernel_adjacency(f, sigma, 0.0);
  CHECK(g.adjacency.at(0, 1) == 1.0);                       // exp(0)
  CHECK(g.adjacency.at(0, 2) == doctest::Approx(std::exp(-1.0)));
  CHECK(g.adjacency.at(0, 0) == 0.0);                       // zero diagonal

  // thresholding zeroes sub-threshold weights
  const ClientGraph t = gaussian_kernel_adjacency(f, sigma, 0.5);
  CHECK(t.adjacency.at(0, 2) == 0.0);
  CHECK(t.adjacency.at(0, 1) == 1.0);

  CHECK_THROWS_AS(gaussian_kernel_adjacency(f, 0.0, 0.1), std::invalid_argument);
}

TEST_CASE("propagation_matrix hand cases") {
  // empty graph -> identity
  const DenseMatrix p0 = propagation_matrix(ClientGraph::empty(3));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(p0.at(i, j) == (i == j ? 1.0 : 0.0));

  // 2-node connected graph -> uniform rows
  const DenseMatrix p2 = propagation_matrix(ClientGraph::complete(2));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(p2.at(i, j) == doctest::Approx(0.5));

  // complete graph on N -> every entry 1/N
  const DenseMatrix p5 = propagation_matrix(ClientGraph::complete(5));
  for (double v : p5.values) CHECK(v == doctest::Approx(0.2));
}

TEST_CASE("propagation_matrix rows sum to one on random graphs") {
  RngStream rng(41, "graphs");
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = 2 + rng.below(28);
    const ClientGraph g = random_graph(n, rng);
    const DenseMatrix p = propagation_matrix(g);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(p.at(i, j) >= 0.0);
        sum += p.at(i, j);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("gcn_propagate hand cases") {
  // empty graph: any m leaves the stack unchanged
  RngStream rng(43, "stack");
  const ParamStack u = random_stack(4, 6, rng);
  const DenseMatrix pid = propagation_matrix(ClientGraph::empty(4));
  CHECK(gcn_propagate(pid, u, 5).values == u.values);

  // m = 0 is the identity for any graph
  const DenseMatrix p = propagation_matrix(ClientGraph::complete(4));
  CHECK(gcn_propagate(p, u, 0).values == u.values);

  // identical rows are a fixed point
  ParamStack same(3, 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) same.at(i, j) = double(j) + 0.5;
  const DenseMatrix p3 = propagation_matrix(ClientGraph::complete(3));
  const ParamStack out = gcn_propagate(p3, same, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(out.at(i, j) == doctest::Approx(same.at(i, j)).epsilon(1e-14));

  // 2-node averaging
  ParamStack two(2, 1);
  two.at(0, 0) = 0.0;
  two.at(1, 0) = 2.0;
  const ParamStack avg = gcn_propagate(propagation_matrix(ClientGraph::complete(2)), two, 1);
  CHECK(avg.at(0, 0) == doctest::Approx(1.0));
  CHECK(avg.at(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("gcn_propagate convex hull and composition properties") {
  RngStream rng(47, "hull");
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rng.below(28);
    const ClientGraph g = random_graph(n, rng);
    const DenseMatrix p = propagation_matrix(g);
    const ParamStack u = random_stack(n, 5, rng);

    const ParamStack out = gcn_propagate(p, u, 3);
    for (std::size_t j = 0; j < 5; ++j) {
      double lo = u.at(0, j), hi = u.at(0, j);
      for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, u.at(i, j));
        hi = std::max(hi, u.at(i, j));
      }
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(out.at(i, j) >= lo - 1e-12);
        CHECK(out.at(i, j) <= hi + 1e-12);
      }
    }

    // P^(a+b) U == P^b (P^a U)
    const ParamStack once = gcn_propagate(p, gcn_propagate(p, u, 2), 1);
    const ParamStack direct = gcn_propagate(p, u, 3);
    for (std::size_t i = 0; i < once.values.size(); ++i)
      CHECK(std::abs(once.values[i] - direct.values[i]) <= 1e-10);
  }
}

TEST_CASE("readout matches weighted_mean and hand cases") {
  ParamStack ones(3, 1);
  for (double& v : ones.values) v = 1.0;
  CHECK(readout(ones, {2, 3, 5})[0] == doctest::Approx(1.0));

  ParamStack two(2, 1);
  two.at(0, 0) = 0.0;
  two.at(1, 0) = 4.0;
  CHECK(readout(two, {1, 3})[0] == doctest::Approx(3.0));

  RngStream rng(53, "readout");
  const ParamStack s = random_stack(6, 7, rng);
  const std::vector<std::size_t> sizes{3, 1, 4, 1, 5, 9};
  const ParamVector r = readout(s, sizes);
  std::vector<ParamVector> rows;
  std::vector<double> w;
  for (std::size_t i = 0; i < 6; ++i) {
    rows.emplace_back(s.row(i), s.row(i) + 7);
    w.push_back(double(sizes[i]));
  }
  CHECK(r == weighted_mean(rows, w));  // same computation path, exact

  CHECK_THROWS_AS(readout(ParamStack(0, 0), {}), std::invalid_argument);
}

TEST_CASE("structure_learn closed forms and tie rule") {
  // N=2, top_k=1: single symmetric edge exp(-d^2/tau)
  ParamStack two(2, 2);
  two.at(0, 0) = 0.0;
  two.at(0, 1) = 0.0;
  two.at(1, 0) = 1.0;
  two.at(1, 1) = 1.0;
  const ClientGraph g2 = structure_learn(two, 4.0, 1);
  CHECK(g2.adjacency.at(0, 1) == doctest::Approx(std::exp(-2.0 / 4.0)));
  CHECK(g2.adjacency.at(1, 0) == g2.adjacency.at(0, 1));
  CHECK(g2.adjacency.at(0, 0) == 0.0);

  // all identical rows: every similarity is 1; top_k keeps lowest indices
  ParamStack same(5, 3);
  const ClientGraph gs = structure_learn(same, 1.0, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(gs.adjacency.at(i, i) == 0.0);
    // row i kept edges to its two lowest other indices before
    // symmetrization; after max-symmetrization weights stay in {0,1}
    for (std::size_t j = 0; j < 5; ++j)
      CHECK((gs.adjacency.at(i, j) == 0.0 || gs.adjacency.at(i, j) == 1.0));
  }
  // client 0 kept clients 1 and 2 (tie rule: lower index)
  CHECK(gs.adjacency.at(0, 1) == 1.0);
  CHECK(gs.adjacency.at(0, 2) == 1.0);

  CHECK_THROWS_AS(structure_learn(same, 0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(structure_learn(same, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(structure_learn(same, 1.0, 5), std::invalid_argument);
}

TEST_CASE("structure_learn recovers two planted parameter clusters") {
  RngStream rng(59, "clusters");
  ParamStack stack(10, 8);
  for (std::size_t i = 0; i < 10; ++i) {
    const double center = i < 5 ? -4.0 : 4.0;
    for (std::size_t j = 0; j < 8; ++j)
      stack.at(i, j) = center + 0.3 * rng.normal();
  }
  // tau = median squared inter-row distance (brute force)
  std::vector<double> sq;
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = i + 1; j < 10; ++j) {
      double s = 0;
      for (std::size_t d = 0; d < 8; ++d) {
        const double diff = stack.at(i, d) - stack.at(j, d);
        s += diff * diff;
      }
      sq.push_back(s);
    }
  std::sort(sq.begin(), sq.end());
  const double tau = sq[sq.size() / 2];

  const ClientGraph g = structure_learn(stack, tau, 4);
  double intra = 0.0, total = 0.0;
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) {
      total += g.adjacency.at(i, j);
      if ((i < 5) == (j < 5)) intra += g.adjacency.at(i, j);
    }
  CHECK(intra / total >= 0.9);
}

TEST_CASE("structure_learn invariants on random stacks") {
  RngStream rng(61, "sl-inv");
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 4 + rng.below(20);
    const std::size_t k = 1 + rng.below(n - 1);
    const ParamStack s = random_stack(n, 6, rng);
    const ClientGraph g = structure_learn(s, 2.0, k);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(g.adjacency.at(i, i) == 0.0);
      std::size_t nz = 0;
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(g.adjacency.at(i, j) >= 0.0);
        CHECK(g.adjacency.at(i, j) == g.adjacency.at(j, i));
        if (g.adjacency.at(i, j) > 0.0) ++nz;
      }
      CHECK(nz >= k);
      CHECK(nz <= n - 1);
    }
  }
}

TEST_CASE("dump_adjacency round-trips at 9 significant digits") {
  RngStream rng(67, "dump");
  const ClientGraph g = random_graph(5, rng);
  const std::string path = "test_adjacency_dump.txt";
  dump_adjacency(g, path);

  std::ifstream in(path);
  REQUIRE(in.good());
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double v;
      in >> v;
      CHECK(std::abs(v - g.adjacency.at(i, j)) <=
            1e-9 * std::max(1.0, std::abs(g.adjacency.at(i, j))));
    }
  std::remove(path.c_str());
}
