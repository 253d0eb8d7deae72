#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mflqg/model.hpp"

namespace mflqg {

enum class NoiseRole : std::uint64_t { Common = 1, Idiosyncratic = 2, Observation = 3 };

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Sub-seed of one stream. Distinct (replication, role, agent) triples give
// unrelated seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replication, NoiseRole role, std::uint64_t agent) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ replication);
  s = splitmix64(s ^ static_cast<std::uint64_t>(role));
  return splitmix64(s ^ agent);
}

// Row-major agents x columns table.
class AgentTable {
 public:
  AgentTable() = default;
  AgentTable(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }
  double& operator()(int i, int k) { return data_[index(i, k)]; }
  double operator()(int i, int k) const { return data_[index(i, k)]; }
  std::span<double> row(int i) { return {data_.data() + index(i, 0), static_cast<std::size_t>(cols_)}; }
  std::span<const double> row(int i) const { return {data_.data() + index(i, 0), static_cast<std::size_t>(cols_)}; }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t index(int i, int k) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(k);
  }
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Brownian increments on a grid: M common increments, N x M idiosyncratic
// ones and, in the observation case, N x M sensor increments.
struct NoiseBundle {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  TimeGrid grid;
  std::vector<double> common;
  AgentTable idiosyncratic;
  AgentTable observation;

  int agents() const noexcept { return idiosyncratic.rows(); }
};

inline void fill_increments(std::uint64_t stream_seed, double h, std::span<double> out) {
  std::mt19937_64 rng(stream_seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(h));
  for (double& v : out) v = normal(rng);
}

struct StreamSeeds {
  std::uint64_t common;
  std::vector<std::uint64_t> idiosyncratic;
  std::vector<std::uint64_t> observation;  // empty when there is no sensor noise
};

inline StreamSeeds derive_stream_seeds(std::uint64_t seed, std::uint64_t replication, int agents, bool observation) {
  StreamSeeds s;
  s.common = derive_seed(seed, replication, NoiseRole::Common, 0);
  for (int i = 0; i < agents; ++i) {
    s.idiosyncratic.push_back(derive_seed(seed, replication, NoiseRole::Idiosyncratic, static_cast<std::uint64_t>(i)));
    if (observation) {
      s.observation.push_back(derive_seed(seed, replication, NoiseRole::Observation, static_cast<std::uint64_t>(i)));
    }
  }
  return s;
}

// Bundle from explicitly assigned stream seeds.
inline NoiseBundle generate_noise(const TimeGrid& grid, const StreamSeeds& seeds) {
  const int N = static_cast<int>(seeds.idiosyncratic.size());
  const int M = grid.steps();
  const double h = grid.step();
  NoiseBundle b;
  b.grid = grid;
  b.common.resize(static_cast<std::size_t>(M));
  fill_increments(seeds.common, h, b.common);
  b.idiosyncratic = AgentTable(N, M);
  for (int i = 0; i < N; ++i) fill_increments(seeds.idiosyncratic[static_cast<std::size_t>(i)], h, b.idiosyncratic.row(i));
  if (!seeds.observation.empty()) {
    b.observation = AgentTable(N, M);
    for (int i = 0; i < N; ++i) fill_increments(seeds.observation[static_cast<std::size_t>(i)], h, b.observation.row(i));
  }
  return b;
}

inline NoiseBundle generate_noise(const PopulationConfig& config, const TimeGrid& grid, std::uint64_t replication = 0) {
  const bool obs = config.mode == InfoMode::PartialObservation;
  NoiseBundle b = generate_noise(grid, derive_stream_seeds(config.seed, replication, config.agents, obs));
  b.seed = config.seed;
  b.replication = replication;
  return b;
}

// Antithetic partner: idiosyncratic and sensor increments negated, and the
// common increments too when `common` is set.
inline NoiseBundle mirrored(const NoiseBundle& b, bool common = false) {
  NoiseBundle out = b;
  auto negate = [](std::span<double> v) {
    for (double& x : v) x = -x;
  };
  if (common) negate(out.common);
  for (int i = 0; i < out.idiosyncratic.rows(); ++i) negate(out.idiosyncratic.row(i));
  for (int i = 0; i < out.observation.rows(); ++i) negate(out.observation.row(i));
  return out;
}

}  // namespace mflqg
