#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "qeosim/qstate.hpp"
#include "qeosim/rng.hpp"
#include "qeosim/stats.hpp"

// PSK constellations in coherent-state phase space. Convention: <x> + j<p>
// = alpha with per-quadrature standard deviation 1/2, so |alpha|^2 is the
// mean photon number and the cloud size is photon-number independent.
//
// Monte Carlo symbol-error estimation runs in fixed blocks of kSerBlockSize
// trials; block i uses the substream derive_substream(seed, i), so the
// estimate depends only on (seed, n_trials), not on the worker count.

namespace qeosim {

/// Coherent-state per-quadrature standard deviation.
inline constexpr double kQuadratureSigma = 0.5;

inline constexpr std::uint64_t kSerBlockSize = 65536;

/// Ordered list of microwave PSK symbol phases b_i (rad, in [0, 2pi)).
struct Constellation {
  std::vector<double> phases;

  std::size_t size() const { return phases.size(); }
};

inline void validate(const Constellation& c) {
  if (c.phases.empty()) throw std::invalid_argument("constellation: needs at least one phase");
  for (double b : c.phases) {
    if (!std::isfinite(b)) throw std::invalid_argument("constellation: non-finite phase");
  }
  for (std::size_t i = 0; i < c.phases.size(); ++i) {
    for (std::size_t j = i + 1; j < c.phases.size(); ++j) {
      double d = std::abs(wrap_angle(c.phases[i]) - wrap_angle(c.phases[j]));
      d = std::min(d, kTwoPi - d);
      if (d < 1e-12)
        throw std::invalid_argument("constellation: phases must be distinct mod 2pi");
    }
  }
}

/// Symbols in constellation order plus any pairs whose encoded phases
/// coincide (|theta_i - theta_j| < 1e-12), e.g. b and 2pi - b under the
/// even cosine map.
struct EncodedConstellation {
  std::vector<EncodedSymbol> symbols;
  std::vector<std::pair<int, int>> degenerate_pairs;

  bool degenerate() const { return !degenerate_pairs.empty(); }
};

inline EncodedConstellation encode_constellation(const Constellation& con,
                                                 const CoherentState& alpha,
                                                 const ConverterDesign& design) {
  validate(con);
  EncodedConstellation out;
  out.symbols.reserve(con.size());
  for (double b : con.phases)
    out.symbols.push_back(encode_coherent_symbol(alpha, design, b));
  for (std::size_t i = 0; i < out.symbols.size(); ++i) {
    for (std::size_t j = i + 1; j < out.symbols.size(); ++j) {
      if (std::abs(out.symbols[i].theta - out.symbols[j].theta) < 1e-12)
        out.degenerate_pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return out;
}

/// One symbol with Gaussian quadrature samples around its mean.
struct SymbolCloud {
  EncodedSymbol symbol;
  double sigma = kQuadratureSigma;
  std::vector<std::pair<double, double>> samples;  // (x, p)
  std::uint64_t seed = 0;
};

/// i.i.d. circular Gaussian samples around the symbol mean; fully
/// determined by the seed.
inline SymbolCloud sample_cloud(const EncodedSymbol& symbol, std::uint64_t n_samples,
                                std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("sample_cloud: n_samples must be >= 1");
  SymbolCloud cloud;
  cloud.symbol = symbol;
  cloud.seed = seed;
  cloud.samples.reserve(n_samples);
  GaussianSampler g(seed);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    const double x = symbol.mean_x + cloud.sigma * g();
    const double p = symbol.mean_p + cloud.sigma * g();
    cloud.samples.emplace_back(x, p);
  }
  return cloud;
}

/// Index of the nearest symbol mean in Euclidean (x, p) distance; ties go
/// to the lowest index.
inline int classify(double x, double p, const std::vector<EncodedSymbol>& symbols) {
  if (symbols.empty()) throw std::invalid_argument("classify: needs at least one symbol");
  int best = 0;
  double best_d2 = 0.0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const double dx = x - symbols[i].mean_x;
    const double dp = p - symbols[i].mean_p;
    const double d2 = dx * dx + dp * dp;
    if (i == 0 || d2 < best_d2) {
      best = static_cast<int>(i);
      best_d2 = d2;
    }
  }
  return best;
}

/// Minimum pairwise distance between symbol means and the achieving pair.
struct MinDistance {
  double d = 0.0;
  int i = 0;
  int j = 1;
};

inline MinDistance min_distance(const std::vector<EncodedSymbol>& symbols) {
  if (symbols.size() < 2) throw std::invalid_argument("min_distance: needs at least two symbols");
  MinDistance out;
  bool first = true;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    for (std::size_t j = i + 1; j < symbols.size(); ++j) {
      const double dx = symbols[i].mean_x - symbols[j].mean_x;
      const double dp = symbols[i].mean_p - symbols[j].mean_p;
      const double d = std::hypot(dx, dp);
      if (first || d < out.d) {
        out = {d, static_cast<int>(i), static_cast<int>(j)};
        first = false;
      }
    }
  }
  return out;
}

/// Misclassification probability of two symbols at distance d under
/// circular Gaussians of per-axis deviation sigma: Q(d / (2 sigma)).
inline double pairwise_error(double d, double sigma) {
  if (!(d >= 0.0)) throw std::invalid_argument("pairwise_error: d must be >= 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("pairwise_error: sigma must be > 0");
  return q_function(d / (2.0 * sigma));
}

/// Monte Carlo symbol-error-rate estimate with a 95% binomial interval.
struct SerEstimate {
  double ser = 0.0;
  double ci95 = 0.0;
  std::uint64_t n_trials = 0;
  std::vector<std::uint64_t> per_symbol_errors;
};

namespace detail {

// Errors per true symbol over one block of trials. Draw order per trial is
// fixed (symbol index, then the two quadrature normals) so the block is a
// pure function of its substream seed.
inline void ser_block(const std::vector<EncodedSymbol>& symbols, std::uint64_t n_trials,
                      std::uint64_t block_seed, std::vector<std::uint64_t>& errors) {
  GaussianSampler g(block_seed);
  const std::uint64_t m = symbols.size();
  for (std::uint64_t t = 0; t < n_trials; ++t) {
    const std::uint64_t truth = uniform_index(g.engine(), m);
    const EncodedSymbol& s = symbols[truth];
    const double x = s.mean_x + kQuadratureSigma * g();
    const double p = s.mean_p + kQuadratureSigma * g();
    if (classify(x, p, symbols) != static_cast<int>(truth)) ++errors[truth];
  }
}

}  // namespace detail

/// Uniform symbol draws, Gaussian quadrature noise, minimum-distance
/// classification.  Deterministic in (seed, n_trials) for any n_workers.
inline SerEstimate estimate_ser(const std::vector<EncodedSymbol>& symbols,
                                std::uint64_t n_trials, std::uint64_t seed,
                                int n_workers = 1) {
  if (symbols.empty()) throw std::invalid_argument("estimate_ser: needs at least one symbol");
  if (n_trials < 1000) throw std::invalid_argument("estimate_ser: n_trials must be >= 1000");
  if (n_workers < 1) throw std::invalid_argument("estimate_ser: n_workers must be >= 1");

  const std::uint64_t n_blocks = (n_trials + kSerBlockSize - 1) / kSerBlockSize;
  auto block_size = [&](std::uint64_t b) {
    return (b + 1 < n_blocks) ? kSerBlockSize : n_trials - b * kSerBlockSize;
  };

  std::vector<std::vector<std::uint64_t>> partials(
      static_cast<std::size_t>(n_workers),
      std::vector<std::uint64_t>(symbols.size(), 0));

  auto run_worker = [&](int w) {
    for (std::uint64_t b = static_cast<std::uint64_t>(w); b < n_blocks;
         b += static_cast<std::uint64_t>(n_workers)) {
      detail::ser_block(symbols, block_size(b), derive_substream(seed, b),
                        partials[static_cast<std::size_t>(w)]);
    }
  };

  if (n_workers == 1) {
    run_worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(run_worker, w);
    for (auto& th : pool) th.join();
  }

  SerEstimate est;
  est.n_trials = n_trials;
  est.per_symbol_errors.assign(symbols.size(), 0);
  std::uint64_t total = 0;
  for (const auto& part : partials) {
    for (std::size_t i = 0; i < part.size(); ++i) {
      est.per_symbol_errors[i] += part[i];
      total += part[i];
    }
  }
  est.ser = static_cast<double>(total) / static_cast<double>(n_trials);
  est.ci95 = 1.96 * std::sqrt(est.ser * (1.0 - est.ser) / static_cast<double>(n_trials));
  return est;
}

/// Convenience wrapper: encode the constellation at the design, then
/// estimate.  Degeneracy information is discarded here; use
/// encode_constellation directly if it matters.
inline SerEstimate estimate_ser(const Constellation& con, const CoherentState& alpha,
                                const ConverterDesign& design, std::uint64_t n_trials,
                                std::uint64_t seed, int n_workers = 1) {
  return estimate_ser(encode_constellation(con, alpha, design).symbols, n_trials, seed,
                      n_workers);
}

}  // namespace qeosim
