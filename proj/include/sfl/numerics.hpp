#pragma once
// Minimal dense linear algebra and reproducible random streams shared
// by every other module. All arithmetic is double precision.

#include <cstdint>
#include <string_view>
#include <vector>

namespace sfl {

// Flattened model parameters (one client's v/u or the global w).
using ParamVector = std::vector<double>;

// Row-major dense matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c) {}

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double* row(std::size_t r) { return values.data() + r * cols; }
  const double* row(std::size_t r) const { return values.data() + r * cols; }
};

// Deterministic random stream. The generator is SplitMix64; the stream
// state is derived by hashing (root_seed, purpose, client, round), so
// per-client streams can be consumed in any order without affecting
// each other. Identical (seed, stream id) gives identical draws on any
// platform with 64-bit integers.
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, std::string_view purpose,
            std::uint64_t client = 0, std::uint64_t round = 0);

  std::uint64_t next_u64();
  double uniform01();          // [0, 1)
  double normal();             // standard normal, Box-Muller
  std::uint64_t below(std::uint64_t bound);  // uniform in [0, bound)
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t state_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Euclidean distance. Throws std::invalid_argument on length mismatch.
double l2_distance(const ParamVector& a, const ParamVector& b);

// sum_i w_i v_i / sum_i w_i. Throws std::invalid_argument on empty
// input, negative weight, zero weight sum, or ragged lengths.
ParamVector weighted_mean(const std::vector<ParamVector>& vectors,
                          const std::vector<double>& weights);

// C = A * B.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// True iff every entry is finite.
bool all_finite(const std::vector<double>& values);

// FNV-1a over raw bytes, used for dataset fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t n_bytes,
                    std::uint64_t seed = 1469598103934665603ULL);

}  // namespace sfl
