#include "sfl/numerics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sfl/kernels.hpp"

namespace sfl {
namespace {

std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64_next(s);
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t n_bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n_bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

RngStream::RngStream(std::uint64_t root_seed, std::string_view purpose,
                     std::uint64_t client, std::uint64_t round) {
  std::uint64_t h = fnv1a(purpose.data(), purpose.size());
  state_ = mix(mix(mix(root_seed, h), client), round);
}

std::uint64_t RngStream::next_u64() { return splitmix64_next(state_); }

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // 1-u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = below(i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

double l2_distance(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("l2_distance: length mismatch");
  return std::sqrt(kernels::active().sq_dist(a.data(), b.data(), a.size()));
}

ParamVector weighted_mean(const std::vector<ParamVector>& vectors,
                          const std::vector<double>& weights) {
  if (vectors.empty()) throw std::invalid_argument("weighted_mean: empty input");
  if (vectors.size() != weights.size())
    throw std::invalid_argument("weighted_mean: weights/vectors size mismatch");
  const std::size_t n = vectors[0].size();
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("weighted_mean: negative weight");
    wsum += w;
  }
  if (wsum <= 0.0) throw std::invalid_argument("weighted_mean: zero weight sum");
  ParamVector out(n, 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != n)
      throw std::invalid_argument("weighted_mean: ragged vector lengths");
    kernels::active().axpy(weights[i], vectors[i].data(), out.data(), n);
  }
  for (double& v : out) v /= wsum;
  return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: dim mismatch");
  DenseMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      kernels::active().axpy(a.at(i, k), b.row(k), c.row(i), b.cols);
    }
  }
  return c;
}

bool all_finite(const std::vector<double>& values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace sfl
