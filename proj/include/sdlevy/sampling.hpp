#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "sdlevy/model.hpp"

namespace sdlevy {

/// Pseudo-random stream keyed by (seed, stream id). Not thread-safe: every
/// worker owns its own stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Strictly increasing time points starting at 0.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> points);
  static TimeGrid terminal(double T);
  static TimeGrid uniform(double T, std::size_t steps);

  const std::vector<double>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  std::size_t steps() const { return points_.size() - 1; }
  double maturity() const { return points_.back(); }
  double dt(std::size_t step) const { return points_[step + 1] - points_[step]; }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> points_;
};

enum class PathLabel : std::uint32_t { LogDriver = 0, Forward = 1 };

/// Simulated values per asset, n_paths x n_times, column k at grid point k.
struct PathBatch {
  TimeGrid grid = TimeGrid::terminal(1.0);
  std::array<Eigen::MatrixXd, 2> values;
  PathLabel label = PathLabel::LogDriver;

  Eigen::Index n_paths() const { return values[0].rows(); }
  Eigen::Index n_times() const { return values[0].cols(); }
  /// Column of terminal values of asset j.
  Eigen::VectorXd terminal(int j) const { return values[j].col(values[j].cols() - 1); }
};

struct SimulationOptions {
  // Pairs of consecutive paths share subordinator draws and flip the sign of
  // every Gaussian factor. Requires an even path count.
  bool antithetic = false;
  // Paths [c * block_size, (c + 1) * block_size) are drawn from stream c.
  std::size_t block_size = 1 << 14;
  // 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Exact Gamma(shape, rate) draw, valid for every shape > 0.
double sample_gamma(double shape, double rate, RngStream& rng);

/// Negative binomial with P(S = k) = Gamma(alpha + k) / (Gamma(alpha) k!)
/// a^alpha (1 - a)^k, drawn as a Gamma-Poisson mixture.
std::uint64_t sample_polya(double alpha, double a, RngStream& rng);

/// a-remainder of Gamma(alpha, lambda): sum of S ~ Polya(alpha, a)
/// exponentials with rate lambda / a. a = 1 gives 0.
double sample_a_remainder(double alpha, double lambda, double a, RngStream& rng);

struct SubordinatorPaths {
  Eigen::VectorXd h1;
  Eigen::VectorXd h2;
};

/// H1 ~ Gamma(A t, B) and H2 = a H1 + Z_a sampled on the grid.
SubordinatorPaths sample_sd_subordinator_pair(double A, double B, double a,
                                              const TimeGrid& grid, RngStream& rng);

/// Single-step terminal values of (Y1(T), Y2(T)) from one stream.
PathBatch simulate_ssd_terminals(const ModelSpec& spec, double T, std::size_t n,
                                 RngStream& rng);
PathBatch simulate_lssd_terminals(const ModelSpec& spec, double T, std::size_t n,
                                  RngStream& rng);
PathBatch simulate_bbsd_terminals(const ModelSpec& spec, double T, std::size_t n,
                                  RngStream& rng);

/// Log-driver paths on an arbitrary grid from independent Levy increments,
/// fanned out over streams (seed, block index). Output is independent of the
/// thread count.
PathBatch simulate_paths(const ModelSpec& spec, const TimeGrid& grid, std::size_t n,
                         std::uint64_t seed, const SimulationOptions& options = {});

/// Convenience for simulate_paths on TimeGrid::terminal(T).
PathBatch simulate_terminals(const ModelSpec& spec, double T, std::size_t n,
                             std::uint64_t seed, const SimulationOptions& options = {});

/// F_j(t) = F_j(0) exp(omega_j t + Y_j(t)).
PathBatch to_forward_prices(const PathBatch& batch, const std::array<double, 2>& F0,
                            const std::array<VGMarginal, 2>& marginals);

/// Binary dump: "SDLVPATH" magic, u32 version, u64 n_paths, u64 n_times,
/// u32 asset count, u32 label, n_times f64 grid points, then each asset's
/// matrix row-major as f64. All little-endian.
void write_path_batch(const PathBatch& batch, std::ostream& out);
void write_path_batch(const PathBatch& batch, const std::string& path);
PathBatch read_path_batch(std::istream& in);
PathBatch read_path_batch(const std::string& path);

}  // namespace sdlevy
