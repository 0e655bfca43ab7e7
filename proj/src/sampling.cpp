#include "sdlevy/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "sdlevy/errors.hpp"

namespace sdlevy {

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x5d1e7u};
  engine_.seed(seq);
}

double RngStream::uniform() {
  // 53 random bits, shifted by half an ulp so 0 and 1 are never returned.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw std::invalid_argument("TimeGrid needs at least two points");
  if (points_.front() != 0.0) throw std::invalid_argument("TimeGrid must start at 0");
  for (std::size_t k = 1; k < points_.size(); ++k) {
    if (!(points_[k] > points_[k - 1]) || !std::isfinite(points_[k])) {
      throw std::invalid_argument("TimeGrid must be strictly increasing");
    }
  }
}

TimeGrid TimeGrid::terminal(double T) { return TimeGrid({0.0, T}); }

TimeGrid TimeGrid::uniform(double T, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("TimeGrid::uniform needs at least one step");
  std::vector<double> p(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) p[k] = T * static_cast<double>(k) / steps;
  p.back() = T;
  return TimeGrid(std::move(p));
}

double sample_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw std::invalid_argument("sample_gamma: shape and rate must be positive");
  }
  // libstdc++ uses Marsaglia-Tsang with the U^(1/shape) boost below shape 1.
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  return g(rng.engine());
}

std::uint64_t sample_polya(double alpha, double a, RngStream& rng) {
  if (!(alpha > 0.0) || !(a > 0.0 && a <= 1.0)) {
    throw std::invalid_argument("sample_polya: need alpha > 0 and 0 < a <= 1");
  }
  if (a == 1.0) return 0;
  const double intensity = sample_gamma(alpha, a / (1.0 - a), rng);
  if (intensity <= 0.0) return 0;
  std::poisson_distribution<std::uint64_t> p(intensity);
  return p(rng.engine());
}

double sample_a_remainder(double alpha, double lambda, double a, RngStream& rng) {
  if (!(lambda > 0.0)) throw std::invalid_argument("sample_a_remainder: lambda must be positive");
  const std::uint64_t s = sample_polya(alpha, a, rng);
  if (s == 0) return 0.0;
  // Sum of s exponentials with rate lambda / a.
  return sample_gamma(static_cast<double>(s), lambda / a, rng);
}

SubordinatorPaths sample_sd_subordinator_pair(double A, double B, double a, const TimeGrid& grid,
                                              RngStream& rng) {
  if (!(A > 0.0) || !(B > 0.0) || !(a > 0.0 && a <= 1.0)) {
    throw std::invalid_argument("sample_sd_subordinator_pair: need A, B > 0 and 0 < a <= 1");
  }
  SubordinatorPaths p{Eigen::VectorXd::Zero(grid.size()), Eigen::VectorXd::Zero(grid.size())};
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double shape = A * grid.dt(k);
    const double dh1 = sample_gamma(shape, B, rng);
    const double dz = sample_a_remainder(shape, B, a, rng);
    p.h1[k + 1] = p.h1[k] + dh1;
    p.h2[k + 1] = p.h2[k] + a * dh1 + dz;
  }
  return p;
}

namespace {

// Subordinator part of one increment plus its Gaussian factors. Y increments
// are formed from a draw with a sign so antithetic pairs reuse the clocks.
struct Draw {
  double c1 = 0.0, c2 = 0.0;  // idiosyncratic clocks
  double h1 = 0.0, z = 0.0;   // common clock and a-remainder
  double n1 = 0.0, n2 = 0.0, m1 = 0.0, m2 = 0.0, m3 = 0.0;
};

class Stepper {
 public:
  explicit Stepper(const ModelSpec& spec) : spec_(spec) {
    spec.require_feasible();
    if (spec.kind() != ModelKind::BBSD) {
      A_ = spec.kind() == ModelKind::SSD ? spec.ssd().A : spec.lssd().A;
      B_ = spec.kind() == ModelKind::SSD ? spec.ssd().B : spec.lssd().B;
      shape1_ = spec.idiosyncratic_shape(0);
      shape2_ = spec.idiosyncratic_shape(1);
    }
    a_ = spec.sd_parameter();
    if (spec.kind() == ModelKind::LSSD) cross_ = spec.lssd().rho * std::sqrt(a_);
    if (spec.kind() == ModelKind::BBSD) cross_ = std::sqrt(a_);
  }

  Draw draw(double dt, RngStream& rng) const {
    Draw d;
    const auto& m1 = spec_.marginal(0);
    const auto& m2 = spec_.marginal(1);
    if (spec_.kind() == ModelKind::BBSD) {
      const auto& in = spec_.bbsd_internal();
      const double nuR = spec_.bbsd().nuR;
      d.c1 = sample_gamma(dt / in.nu1, 1.0 / in.nu1, rng);
      d.c2 = sample_gamma(dt / in.nu2, 1.0 / in.nu2, rng);
      d.h1 = sample_gamma(dt / nuR, 1.0 / nuR, rng);
      d.z = sample_a_remainder(dt / nuR, 1.0 / nuR, a_, rng);
    } else {
      d.h1 = sample_gamma(A_ * dt, B_, rng);
      d.z = sample_a_remainder(A_ * dt, B_, a_, rng);
      d.c1 = shape1_ > 0.0 ? sample_gamma(shape1_ * dt, B_ / m1.alpha, rng) : 0.0;
      d.c2 = shape2_ > 0.0 ? sample_gamma(shape2_ * dt, B_ / m2.alpha, rng) : 0.0;
    }
    d.n1 = rng.normal();
    d.n2 = rng.normal();
    if (spec_.kind() != ModelKind::SSD) {
      d.m1 = rng.normal();
      d.m2 = cross_ * d.m1 + std::sqrt(std::max(0.0, 1.0 - cross_ * cross_)) * rng.normal();
      d.m3 = rng.normal();
    }
    return d;
  }

  // Gaussian factors multiplied by s (= +1 or -1).
  std::pair<double, double> increment(const Draw& d, double s) const {
    const auto& m1 = spec_.marginal(0);
    const auto& m2 = spec_.marginal(1);
    switch (spec_.kind()) {
      case ModelKind::SSD: {
        const double g1 = d.c1 + m1.alpha * d.h1;
        const double g2 = d.c2 + m2.alpha * (a_ * d.h1 + d.z);
        return {m1.mu * g1 + s * m1.sigma * std::sqrt(g1) * d.n1,
                m2.mu * g2 + s * m2.sigma * std::sqrt(g2) * d.n2};
      }
      case ModelKind::LSSD: {
        const double y1 = m1.mu * d.c1 + s * m1.sigma * std::sqrt(d.c1) * d.n1 +
                          m1.alpha * m1.mu * d.h1 +
                          s * std::sqrt(m1.alpha) * m1.sigma * std::sqrt(d.h1) * d.m1;
        const double y2 =
            m2.mu * d.c2 + s * m2.sigma * std::sqrt(d.c2) * d.n2 +
            m2.alpha * m2.mu * (a_ * d.h1 + d.z) +
            s * std::sqrt(m2.alpha) * m2.sigma *
                (std::sqrt(a_ * d.h1) * d.m2 + std::sqrt(d.z) * d.m3);
        return {y1, y2};
      }
      case ModelKind::BBSD: {
        const auto& in = spec_.bbsd_internal();
        const auto& dep = spec_.bbsd();
        const double x1 = in.beta1 * d.c1 + s * in.gamma1 * std::sqrt(d.c1) * d.n1;
        const double x2 = in.beta2 * d.c2 + s * in.gamma2 * std::sqrt(d.c2) * d.n2;
        const double r1 = in.betaR1 * d.h1 + s * in.gammaR1 * std::sqrt(d.h1) * d.m1;
        const double r2 = in.betaR2 * (a_ * d.h1 + d.z) +
                          s * in.gammaR2 *
                              (std::sqrt(a_ * d.h1) * d.m2 + std::sqrt(d.z) * d.m3);
        return {x1 + dep.a1 * r1, x2 + dep.a2 * r2};
      }
    }
    return {0.0, 0.0};
  }

 private:
  const ModelSpec& spec_;
  double A_ = 0.0, B_ = 1.0, a_ = 0.0, shape1_ = 0.0, shape2_ = 0.0, cross_ = 0.0;
};

void simulate_block(const Stepper& stepper, const TimeGrid& grid, bool antithetic,
                    Eigen::Index begin, Eigen::Index end, RngStream& rng, PathBatch& out) {
  const Eigen::Index stride = antithetic ? 2 : 1;
  for (Eigen::Index p = begin; p < end; p += stride) {
    double y1 = 0.0, y2 = 0.0, w1 = 0.0, w2 = 0.0;
    out.values[0](p, 0) = 0.0;
    out.values[1](p, 0) = 0.0;
    if (antithetic) {
      out.values[0](p + 1, 0) = 0.0;
      out.values[1](p + 1, 0) = 0.0;
    }
    for (std::size_t k = 0; k < grid.steps(); ++k) {
      const Draw d = stepper.draw(grid.dt(k), rng);
      const auto [d1, d2] = stepper.increment(d, 1.0);
      y1 += d1;
      y2 += d2;
      out.values[0](p, k + 1) = y1;
      out.values[1](p, k + 1) = y2;
      if (antithetic) {
        const auto [e1, e2] = stepper.increment(d, -1.0);
        w1 += e1;
        w2 += e2;
        out.values[0](p + 1, k + 1) = w1;
        out.values[1](p + 1, k + 1) = w2;
      }
    }
  }
}

PathBatch allocate(const TimeGrid& grid, std::size_t n) {
  PathBatch b;
  b.grid = grid;
  b.label = PathLabel::LogDriver;
  for (auto& v : b.values) v.resize(static_cast<Eigen::Index>(n), grid.size());
  return b;
}

PathBatch simulate_single_stream(const ModelSpec& spec, ModelKind expected, double T,
                                 std::size_t n, RngStream& rng) {
  if (spec.kind() != expected) throw std::invalid_argument("model kind mismatch");
  const TimeGrid grid = TimeGrid::terminal(T);
  const Stepper stepper(spec);
  PathBatch out = allocate(grid, n);
  simulate_block(stepper, grid, false, 0, static_cast<Eigen::Index>(n), rng, out);
  return out;
}

}  // namespace

PathBatch simulate_ssd_terminals(const ModelSpec& spec, double T, std::size_t n, RngStream& rng) {
  return simulate_single_stream(spec, ModelKind::SSD, T, n, rng);
}

PathBatch simulate_lssd_terminals(const ModelSpec& spec, double T, std::size_t n,
                                  RngStream& rng) {
  return simulate_single_stream(spec, ModelKind::LSSD, T, n, rng);
}

PathBatch simulate_bbsd_terminals(const ModelSpec& spec, double T, std::size_t n,
                                  RngStream& rng) {
  return simulate_single_stream(spec, ModelKind::BBSD, T, n, rng);
}

PathBatch simulate_paths(const ModelSpec& spec, const TimeGrid& grid, std::size_t n,
                         std::uint64_t seed, const SimulationOptions& options) {
  if (n == 0) throw std::invalid_argument("simulate_paths: n must be positive");
  if (options.block_size == 0 || (options.antithetic && options.block_size % 2 != 0)) {
    throw std::invalid_argument("simulate_paths: block size must be positive (even if antithetic)");
  }
  if (options.antithetic && n % 2 != 0) {
    throw std::invalid_argument("simulate_paths: antithetic sampling needs an even path count");
  }
  const Stepper stepper(spec);
  PathBatch out = allocate(grid, n);
  const std::size_t blocks = (n + options.block_size - 1) / options.block_size;
  unsigned threads = options.threads != 0 ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < blocks; c = next++) {
      RngStream rng(seed, c);
      const auto begin = static_cast<Eigen::Index>(c * options.block_size);
      const auto end = static_cast<Eigen::Index>(std::min(n, (c + 1) * options.block_size));
      simulate_block(stepper, grid, options.antithetic, begin, end, rng, out);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  return out;
}

PathBatch simulate_terminals(const ModelSpec& spec, double T, std::size_t n, std::uint64_t seed,
                             const SimulationOptions& options) {
  return simulate_paths(spec, TimeGrid::terminal(T), n, seed, options);
}

PathBatch to_forward_prices(const PathBatch& batch, const std::array<double, 2>& F0,
                            const std::array<VGMarginal, 2>& marginals) {
  if (batch.label != PathLabel::LogDriver) {
    throw std::invalid_argument("to_forward_prices: batch is already forward-labelled");
  }
  PathBatch out = batch;
  out.label = PathLabel::Forward;
  const auto& t = batch.grid.points();
  for (int j = 0; j < 2; ++j) {
    if (!(F0[j] > 0.0)) throw std::invalid_argument("to_forward_prices: F0 must be positive");
    const double omega = drift_correction(marginals[j]);
    for (Eigen::Index k = 0; k < batch.n_times(); ++k) {
      out.values[j].col(k) = (F0[j] * (omega * t[k] + batch.values[j].col(k).array()).exp()).matrix();
    }
    out.values[j].col(0).setConstant(F0[j]);
  }
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "path dump I/O assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'D', 'L', 'V', 'P', 'A', 'T', 'H'};
constexpr std::uint32_t kDumpVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError("path dump truncated");
  return v;
}

}  // namespace

void write_path_batch(const PathBatch& batch, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  put(out, kDumpVersion);
  put(out, static_cast<std::uint64_t>(batch.n_paths()));
  put(out, static_cast<std::uint64_t>(batch.n_times()));
  put(out, static_cast<std::uint32_t>(2));
  put(out, static_cast<std::uint32_t>(batch.label));
  for (double t : batch.grid.points()) put(out, t);
  for (const auto& m : batch.values) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) put(out, m(i, k));
    }
  }
  if (!out) throw Error("failed writing path dump");
}

void write_path_batch(const PathBatch& batch, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  write_path_batch(batch, f);
}

PathBatch read_path_batch(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a path dump (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kDumpVersion) throw ParseError("unsupported path dump version");
  const auto n_paths = get<std::uint64_t>(in);
  const auto n_times = get<std::uint64_t>(in);
  const auto assets = get<std::uint32_t>(in);
  const auto label = get<std::uint32_t>(in);
  if (assets != 2 || label > 1) throw ParseError("path dump header out of range");
  std::vector<double> t(n_times);
  for (auto& x : t) x = get<double>(in);
  PathBatch b;
  b.grid = TimeGrid(std::move(t));
  b.label = static_cast<PathLabel>(label);
  for (auto& m : b.values) {
    m.resize(static_cast<Eigen::Index>(n_paths), static_cast<Eigen::Index>(n_times));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = get<double>(in);
    }
  }
  return b;
}

PathBatch read_path_batch(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open " + path);
  return read_path_batch(f);
}

}  // namespace sdlevy
