#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qeosim/bessel.hpp"
#include "qeosim/constants.hpp"
#include "qeosim/physics.hpp"

// Sideband-basis transmission matrices. The optical field is expanded on
// discrete sidebands omega_op + s*omega_w, |s| <= S; a modulating element
// with depth delta_theta and sinusoid offset psi couples them with
//
//   T_sp = e^{-j k_op W} J_{s-p}(delta_theta) e^{-j (s-p) (omega_w t + psi + b)}
//
// which is the matrix form of the scalar identity
// e^{-j z sin u} = sum_s J_s(z) e^{-j s u}.  Cascading element and gap
// matrices reproduces the closed-form array matrix built from the summed
// depth (delta_theta_N, phi_N); both are checked against each other in the
// test suite.
//
// Truncation: coupling beyond |s-p| ~ |delta_theta| decays super-
// exponentially (Bessel tail), so a half-width a little above the total
// depth suffices; truncation_order() encodes the default margin.

namespace qeosim {

class truncation_error : public std::runtime_error {
 public:
  explicit truncation_error(const std::string& what) : std::runtime_error(what) {}
};

/// Default truncation half-width for a given total modulation depth.
inline int truncation_order(double total_depth) {
  if (!std::isfinite(total_depth)) throw std::invalid_argument("truncation_order: non-finite depth");
  return static_cast<int>(std::ceil(std::abs(total_depth))) + 15;
}

/// Half-width of the inner sideband block whose columns are unaffected by
/// truncation clipping, for a matrix of half-width s and total depth d.
inline int padded_inner_halfwidth(int half_width, double total_depth) {
  const int pad = static_cast<int>(std::ceil(std::abs(total_depth))) + 10;
  return std::max(0, half_width - pad);
}

/// Amplitudes on sidebands s in [-half_width, half_width].
struct SidebandVector {
  int half_width = 0;
  std::vector<std::complex<double>> amps;  // index s + half_width

  SidebandVector() = default;
  explicit SidebandVector(int hw) : half_width(hw) {
    if (hw < 0) throw std::invalid_argument("SidebandVector: negative half-width");
    amps.resize(static_cast<std::size_t>(2 * hw + 1));
  }

  int size() const { return 2 * half_width + 1; }

  std::complex<double>& at(int s) {
    if (s < -half_width || s > half_width)
      throw std::out_of_range("SidebandVector: sideband index out of range");
    return amps[static_cast<std::size_t>(s + half_width)];
  }
  const std::complex<double>& at(int s) const {
    if (s < -half_width || s > half_width)
      throw std::out_of_range("SidebandVector: sideband index out of range");
    return amps[static_cast<std::size_t>(s + half_width)];
  }

  double norm_sq() const {
    double n = 0.0;
    for (const auto& a : amps) n += std::norm(a);
    return n;
  }

  /// Pure carrier: amplitude 1 on s = 0.
  static SidebandVector unit(int hw) {
    SidebandVector v(hw);
    v.at(0) = 1.0;
    return v;
  }
};

/// Dense transmission matrix on sidebands s, p in [-half_width, half_width];
/// entry (s, p) maps input sideband p to output sideband s.  ref_time and
/// symbol_phase record the (t, b) the entries were built at.
struct SidebandMatrix {
  int half_width = 0;
  std::vector<std::complex<double>> entries;  // row-major, (s + hw) * n + (p + hw)
  double ref_time = 0.0;
  double symbol_phase = 0.0;
  std::string label;

  SidebandMatrix() = default;
  explicit SidebandMatrix(int hw) : half_width(hw) {
    if (hw < 0) throw std::invalid_argument("SidebandMatrix: negative half-width");
    entries.resize(static_cast<std::size_t>(2 * hw + 1) * static_cast<std::size_t>(2 * hw + 1));
  }

  int size() const { return 2 * half_width + 1; }

  std::complex<double>& at(int s, int p) {
    return entries[idx(s, p)];
  }
  const std::complex<double>& at(int s, int p) const {
    return entries[idx(s, p)];
  }

  std::size_t idx(int s, int p) const {
    if (s < -half_width || s > half_width || p < -half_width || p > half_width)
      throw std::out_of_range("SidebandMatrix: sideband index out of range");
    const int n = size();
    return static_cast<std::size_t>(s + half_width) * static_cast<std::size_t>(n) +
           static_cast<std::size_t>(p + half_width);
  }

  static SidebandMatrix identity(int hw) {
    SidebandMatrix m(hw);
    for (int s = -hw; s <= hw; ++s) m.at(s, s) = 1.0;
    return m;
  }
};

/// C = A * B (apply B first, then A).  Half-widths must agree.
inline SidebandMatrix multiply(const SidebandMatrix& a, const SidebandMatrix& b) {
  if (a.half_width != b.half_width)
    throw std::invalid_argument("multiply: sideband half-widths differ");
  const int hw = a.half_width;
  const int n = a.size();
  SidebandMatrix c(hw);
  c.ref_time = a.ref_time;
  c.symbol_phase = a.symbol_phase;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const std::complex<double> aik = a.entries[static_cast<std::size_t>(i) * n + k];
      if (aik == std::complex<double>(0.0, 0.0)) continue;
      const std::size_t brow = static_cast<std::size_t>(k) * n;
      const std::size_t crow = static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) c.entries[crow + j] += aik * b.entries[brow + j];
    }
  }
  return c;
}

inline SidebandVector apply(const SidebandMatrix& m, const SidebandVector& v) {
  if (m.half_width != v.half_width)
    throw std::invalid_argument("apply: sideband half-widths differ");
  const int n = m.size();
  SidebandVector out(m.half_width);
  for (int i = 0; i < n; ++i) {
    std::complex<double> acc = 0.0;
    const std::size_t row = static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) acc += m.entries[row + j] * v.amps[static_cast<std::size_t>(j)];
    out.amps[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

namespace detail {

// Banded Bessel-phase matrix e^{-j scalar_phase} * J_{s-p}(depth) *
// e^{-j (s-p) osc_phase}; shared by the element and closed-form array builds.
inline SidebandMatrix bessel_phase_matrix(int half_width, double depth, double osc_phase,
                                          double scalar_phase) {
  if (std::abs(depth) > static_cast<double>(half_width) - 5.0)
    throw truncation_error("sideband matrix: half-width " + std::to_string(half_width) +
                           " too small for modulation depth " + std::to_string(depth));
  SidebandMatrix m(half_width);
  const auto j = bessel_j_array(2 * half_width, std::abs(depth));
  const double sgn = depth < 0.0 ? -1.0 : 1.0;  // J_k(-z) = (-1)^k J_k(z)
  const std::complex<double> overall = std::polar(1.0, -scalar_phase);
  for (int s = -half_width; s <= half_width; ++s) {
    for (int p = -half_width; p <= half_width; ++p) {
      const int k = s - p;
      const int ak = std::abs(k);
      double jk = j[static_cast<std::size_t>(ak)];
      if (k < 0 && (ak % 2) != 0) jk = -jk;          // J_{-k} = (-1)^k J_k
      if (sgn < 0.0 && (ak % 2) != 0) jk = -jk;      // odd orders flip with depth sign
      m.at(s, p) = overall * jk * std::polar(1.0, -k * osc_phase);
    }
  }
  return m;
}

}  // namespace detail

/// Transmission matrix of the n-th element (1-based) built at time t:
/// depth delta_theta, sinusoid phase omega_w t + phi_n + b, and the element's
/// own propagation factor e^{-j k_op W}.
inline SidebandMatrix element_matrix(const MaterialParams& mat, const Carriers& car,
                                     const Geometry& geo, const MicrowaveDrive& drive,
                                     int n, double t, int half_width) {
  const double dtheta = modulation_depth(mat, car, geo, drive);
  const double phi_n = element_offset_phase(mat, car, geo, n);
  const double osc = car.omega_w() * t + phi_n + drive.symbol_phase;
  const double prop = car.k_op(mat) * geo.width;
  SidebandMatrix m = detail::bessel_phase_matrix(half_width, dtheta, osc, prop);
  m.ref_time = t;
  m.symbol_phase = drive.symbol_phase;
  m.label = "element " + std::to_string(n);
  return m;
}

/// Free propagation across the inter-element gap G = D - W: a scalar phase
/// e^{-j k_op G} on every sideband (narrowband: k evaluated at the carrier).
inline SidebandMatrix gap_matrix(const MaterialParams& mat, const Carriers& car,
                                 const Geometry& geo, int half_width) {
  validate(mat); validate(car); validate(geo);
  SidebandMatrix m = SidebandMatrix::identity(half_width);
  const std::complex<double> ph = std::polar(1.0, -car.k_op(mat) * geo.gap());
  for (auto& e : m.entries) e *= ph;
  m.label = "gap";
  return m;
}

/// Product of a traversal-ordered list of matrices: stages.front() is hit
/// first by the light, so it sits rightmost in the product.  Empty list
/// gives the identity.
inline SidebandMatrix cascade(const std::vector<SidebandMatrix>& stages, int half_width) {
  SidebandMatrix acc = SidebandMatrix::identity(half_width);
  for (const auto& m : stages) acc = multiply(m, acc);
  return acc;
}

/// Cascade of all N elements and the N-1 gaps between them, built at time t.
inline SidebandMatrix cascade_array_matrix(const MaterialParams& mat, const Carriers& car,
                                           const Geometry& geo, const MicrowaveDrive& drive,
                                           double t, int half_width) {
  validate(geo);
  std::vector<SidebandMatrix> stages;
  stages.reserve(static_cast<std::size_t>(2 * geo.n_elements - 1));
  for (int n = 1; n <= geo.n_elements; ++n) {
    stages.push_back(element_matrix(mat, car, geo, drive, n, t, half_width));
    if (n < geo.n_elements) stages.push_back(gap_matrix(mat, car, geo, half_width));
  }
  SidebandMatrix m = cascade(stages, half_width);
  m.ref_time = t;
  m.symbol_phase = drive.symbol_phase;
  m.label = "array cascade";
  return m;
}

/// Closed-form N-element array matrix built from the summed sinusoid
/// (delta_theta_N, phi_N) and the total propagation phase chi.
inline SidebandMatrix array_matrix(const MaterialParams& mat, const Carriers& car,
                                   const Geometry& geo, const MicrowaveDrive& drive,
                                   double t, int half_width) {
  const DepthResult d = compute_depths(mat, car, geo, drive);
  const double osc = car.omega_w() * t + d.phi_n + drive.symbol_phase;
  SidebandMatrix m = detail::bessel_phase_matrix(half_width, d.delta_theta_n, osc, d.chi);
  m.ref_time = t;
  m.symbol_phase = drive.symbol_phase;
  m.label = "array closed form";
  return m;
}

/// Single entry (s, p) of the N-element array matrix via the composition
/// sum over per-element sideband jumps x_1 + ... + x_N = s - p,
///
///   T_sp = e^{-j chi} * sum  prod_n J_{x_n}(delta_theta)
///                              e^{-j x_n (omega_w t + phi_n + b)},
///
/// evaluated by convolving the per-element jump distributions.  Jumps are
/// pruned to |x_n| <= ceil(|delta_theta|) + 20 per element.
inline std::complex<double> array_matrix_element(const MaterialParams& mat, const Carriers& car,
                                               const Geometry& geo, const MicrowaveDrive& drive,
                                               double t, int s, int p) {
  const double dtheta = modulation_depth(mat, car, geo, drive);
  const double chi = propagation_phase(mat, car, geo);
  const int x_max = static_cast<int>(std::ceil(std::abs(dtheta))) + 20;

  const auto j = bessel_j_array(x_max, std::abs(dtheta));
  auto j_signed = [&](int k) {
    const int ak = std::abs(k);
    double v = j[static_cast<std::size_t>(ak)];
    if (k < 0 && (ak % 2) != 0) v = -v;
    if (dtheta < 0.0 && (ak % 2) != 0) v = -v;
    return v;
  };

  // dist[x + hw] = amplitude of cumulative jump x after the elements so far.
  std::vector<std::complex<double>> dist{1.0};
  int hw = 0;
  for (int n = 1; n <= geo.n_elements; ++n) {
    const double psi = car.omega_w() * t + element_offset_phase(mat, car, geo, n) +
                       drive.symbol_phase;
    const int new_hw = hw + x_max;
    std::vector<std::complex<double>> next(static_cast<std::size_t>(2 * new_hw + 1));
    for (int x = -hw; x <= hw; ++x) {
      const std::complex<double> base = dist[static_cast<std::size_t>(x + hw)];
      if (base == std::complex<double>(0.0, 0.0)) continue;
      for (int k = -x_max; k <= x_max; ++k) {
        next[static_cast<std::size_t>(x + k + new_hw)] +=
            base * j_signed(k) * std::polar(1.0, -k * psi);
      }
    }
    dist = std::move(next);
    hw = new_hw;
  }

  const int k = s - p;
  if (std::abs(k) > hw) return 0.0;
  return std::polar(1.0, -chi) * dist[static_cast<std::size_t>(k + hw)];
}

/// Sideband occupation probabilities |c_s|^2 of a state vector, with their
/// sum and the probability missing to unity (truncation leakage for a
/// unit-norm input).
struct SidebandProbabilities {
  int half_width = 0;
  std::vector<double> p;  // index s + half_width
  double sum = 0.0;
  double tail = 0.0;

  double at(int s) const {
    if (s < -half_width || s > half_width)
      throw std::out_of_range("SidebandProbabilities: index out of range");
    return p[static_cast<std::size_t>(s + half_width)];
  }
};

inline SidebandProbabilities sideband_probabilities(const SidebandVector& v) {
  SidebandProbabilities out;
  out.half_width = v.half_width;
  out.p.resize(v.amps.size());
  for (std::size_t i = 0; i < v.amps.size(); ++i) {
    out.p[i] = std::norm(v.amps[i]);
    out.sum += out.p[i];
  }
  out.tail = std::max(0.0, 1.0 - out.sum);
  return out;
}

/// Largest entry of T^dagger T - I over the inner block
/// |a|, |b| <= inner_half_width (rows summed over the full stored range).
/// An untruncated matrix is exactly unitary; clipping only degrades columns
/// near the edge, so the padded inner block must sit at machine precision.
inline double unitarity_defect(const SidebandMatrix& m, int inner_half_width) {
  if (inner_half_width < 0 || inner_half_width > m.half_width)
    throw std::invalid_argument("unitarity_defect: inner half-width out of range");
  const int n = m.size();
  double worst = 0.0;
  for (int a = -inner_half_width; a <= inner_half_width; ++a) {
    for (int b = -inner_half_width; b <= inner_half_width; ++b) {
      std::complex<double> acc = 0.0;
      for (int s = -m.half_width; s <= m.half_width; ++s) {
        const std::size_t row = static_cast<std::size_t>(s + m.half_width) * n;
        acc += std::conj(m.entries[row + (a + m.half_width)]) *
               m.entries[row + (b + m.half_width)];
      }
      const std::complex<double> want = (a == b) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(acc - want));
    }
  }
  return worst;
}

/// Scalar field reconstructed from a sideband vector dt after its build
/// time: sum_s c_s e^{-j s omega_w dt}.  For the carrier-input column of an
/// element/array matrix this recovers e^{-j(chi + theta_i(t0 + dt))}.
inline std::complex<double> reconstruct_phase(const SidebandVector& v, double omega_w,
                                               double dt) {
  std::complex<double> acc = 0.0;
  for (int s = -v.half_width; s <= v.half_width; ++s)
    acc += v.at(s) * std::polar(1.0, -s * omega_w * dt);
  return acc;
}

/// One row of the element-width sweep: carrier and low-order sideband
/// probabilities of a single element of width w.
struct WidthSweepRow {
  double w = 0.0;
  double p0 = 0.0;    // carrier
  double p1 = 0.0;    // each first-order sideband (s = +1 and s = -1 separately)
  double p2 = 0.0;    // each second-order sideband
  double tail = 0.0;  // total probability beyond |s| = 2
};

/// Sweeps the width of a single modulating element; probabilities depend on
/// w only through delta_theta(w), so rows are time- and symbol-independent.
/// The endpoint w = 2 W_o is modelled as two contiguous W_o sections: the
/// second section modulates in antiphase, so the maximally split amplitudes
/// converge back onto the carrier (rather than reading the single-element
/// depth null, which encodes the same physics but skips the round trip).
inline std::vector<WidthSweepRow> width_sweep(const MaterialParams& mat, const Carriers& car,
                                              double gamma, const MicrowaveDrive& drive,
                                              const std::vector<double>& widths) {
  validate(mat); validate(car); validate(drive);
  const double w_o = optimum_element_width(mat, car);
  std::vector<WidthSweepRow> rows;
  rows.reserve(widths.size());
  for (double w : widths) {
    if (!std::isfinite(w) || w < 0.0)
      throw std::invalid_argument("width_sweep: widths must be finite and >= 0");
    WidthSweepRow row;
    row.w = w;
    SidebandProbabilities probs;
    if (w == 0.0) {
      row.p0 = 1.0;  // zero-width element is transparent
      rows.push_back(row);
      continue;
    }
    if (std::abs(w - 2.0 * w_o) <= 1e-9 * w_o) {
      const Geometry geo{0.5 * w, 0.5 * w, 2, gamma};
      const double dtheta = modulation_depth(mat, car, geo, drive);
      const int hw = truncation_order(2.0 * dtheta);
      const SidebandMatrix m = cascade_array_matrix(mat, car, geo, drive, 0.0, hw);
      probs = sideband_probabilities(apply(m, SidebandVector::unit(hw)));
    } else {
      const Geometry geo{w, w, 1, gamma};
      const double dtheta = modulation_depth(mat, car, geo, drive);
      const int hw = truncation_order(dtheta);
      const SidebandMatrix m = element_matrix(mat, car, geo, drive, 1, 0.0, hw);
      probs = sideband_probabilities(apply(m, SidebandVector::unit(hw)));
    }
    row.p0 = probs.at(0);
    row.p1 = probs.at(1);
    row.p2 = probs.at(2);
    row.tail = std::max(0.0, 1.0 - row.p0 - 2.0 * row.p1 - 2.0 * row.p2);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace qeosim
