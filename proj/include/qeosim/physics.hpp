#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "qeosim/constants.hpp"

// Converter parameters and the closed-form electro-optic modulation
// formulas: single-element depth/offset, optimum element width and array
// periodicity, N-element Dirichlet scaling, and propagation phase.
//
// Sign convention: delta_theta is kept signed (it is negative for positive
// drive parameters). Probabilities only ever see J_s(delta_theta)^2 so the
// sign is invisible there, but sideband phases are sign-sensitive.
//
// All functions are pure and safe to call concurrently; angles are radians
// throughout.

namespace qeosim {

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

/// Electro-optic material of the waveguide core.
struct MaterialParams {
  double eps_op = 0.0;  // relative permittivity at the optical frequency
  double r33 = 0.0;     // Pockels coefficient (m/V)

  double n_op() const { return std::sqrt(eps_op); }

  static MaterialParams from_n_op(double n_op, double r33) { return {n_op * n_op, r33}; }
};

inline void validate(const MaterialParams& m) {
  require_finite(m.eps_op, "material.eps_op");
  require_finite(m.r33, "material.r33");
  if (m.eps_op <= 1.0) throw std::invalid_argument("material.eps_op: must be > 1");
  if (m.r33 <= 0.0) throw std::invalid_argument("material.r33: must be > 0");
}

/// Microwave drive frequency and optical carrier wavelength.
struct Carriers {
  double f_w = 0.0;       // microwave frequency (Hz)
  double lambda_op = 0.0; // optical vacuum wavelength (m)

  double omega_w() const { return kTwoPi * f_w; }
  double omega_op() const { return kTwoPi * kSpeedOfLight / lambda_op; }
  double microwave_period() const { return 1.0 / f_w; }
  /// Optical phase constant in the guide, k_op = n_op * omega_op / c.
  double k_op(const MaterialParams& m) const { return m.n_op() * omega_op() / kSpeedOfLight; }
  /// omega_op / omega_w; the narrowband treatment assumes this is large.
  double carrier_ratio() const { return omega_op() / omega_w(); }
};

inline void validate(const Carriers& c) {
  require_finite(c.f_w, "carriers.f_w_hz");
  require_finite(c.lambda_op, "carriers.lambda_op_m");
  if (c.f_w <= 0.0) throw std::invalid_argument("carriers.f_w_hz: must be > 0");
  if (c.lambda_op <= 0.0) throw std::invalid_argument("carriers.lambda_op_m: must be > 0");
}

/// Modulating-element array geometry plus the antenna slot enhancement.
struct Geometry {
  double width = 0.0;   // element width W (m)
  double period = 0.0;  // array periodicity D (m)
  int n_elements = 1;   // N
  double gamma = 1.0;   // slot field-strength enhancement factor

  double gap() const { return period - width; }  // G = D - W
};

inline void validate(const Geometry& g) {
  require_finite(g.width, "geometry.W_m");
  require_finite(g.period, "geometry.D_m");
  require_finite(g.gamma, "geometry.gamma");
  if (g.width <= 0.0) throw std::invalid_argument("geometry.W_m: must be > 0");
  if (g.period < g.width) throw std::invalid_argument("geometry.D_m: must be >= W_m");
  if (g.n_elements < 1) throw std::invalid_argument("geometry.N: must be >= 1");
  if (g.gamma <= 0.0) throw std::invalid_argument("geometry.gamma: must be > 0");
}

/// Received microwave field strength and the digital symbol phase it carries.
struct MicrowaveDrive {
  double field_strength = 0.0; // |E_w| (V/m)
  double symbol_phase = 0.0;   // b (rad), in [0, 2pi)
};

inline void validate(const MicrowaveDrive& d) {
  require_finite(d.field_strength, "drive.E_w_v_per_m");
  require_finite(d.symbol_phase, "drive.b");
  if (d.field_strength < 0.0) throw std::invalid_argument("drive.E_w_v_per_m: must be >= 0");
  if (d.symbol_phase < 0.0 || d.symbol_phase >= kTwoPi)
    throw std::invalid_argument("drive.b: must lie in [0, 2pi)");
}

/// Wraps an angle into [0, 2pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w;
}

/// Full converter description; convenience bundle for the sideband and
/// state-evolution modules.
struct ConverterDesign {
  MaterialParams material;
  Carriers carriers;
  Geometry geometry;
  MicrowaveDrive drive;
};

inline void validate(const ConverterDesign& d) {
  validate(d.material);
  validate(d.carriers);
  validate(d.geometry);
  validate(d.drive);
}

/// Signed single-element modulation depth,
///   delta_theta = -(omega_op eps_op r33 gamma / omega_w)
///                  * sin(omega_w sqrt(eps_op) W / (2c)) * |E_w|.
inline double modulation_depth(const MaterialParams& mat, const Carriers& car,
                               const Geometry& geo, const MicrowaveDrive& drive) {
  validate(mat); validate(car); validate(geo); validate(drive);
  const double arg = car.omega_w() * mat.n_op() * geo.width / (2.0 * kSpeedOfLight);
  return -(car.omega_op() * mat.eps_op * mat.r33 * geo.gamma / car.omega_w()) *
         std::sin(arg) * drive.field_strength;
}

/// Single-element offset phase, phi = omega_w sqrt(eps_op) W / (2c).
inline double single_element_offset(const MaterialParams& mat, const Carriers& car,
                                    const Geometry& geo) {
  return car.omega_w() * mat.n_op() * geo.width / (2.0 * kSpeedOfLight);
}

/// Element width maximizing |delta_theta|: W_o = pi c / (omega_w sqrt(eps_op)),
/// i.e. the sine argument above equals pi/2. The depth vanishes at 2 W_o.
inline double optimum_element_width(const MaterialParams& mat, const Carriers& car) {
  validate(mat); validate(car);
  return kPi * kSpeedOfLight / (car.omega_w() * mat.n_op());
}

/// Periodicity making per-element contributions add coherently: D_o = 2 W_o.
/// The inter-element transit time D_o sqrt(eps_op)/c is then exactly one
/// microwave period.
inline double optimum_array_periodicity(const MaterialParams& mat, const Carriers& car) {
  return 2.0 * optimum_element_width(mat, car);
}

/// Microwave phase advance between consecutive element entries,
/// Delta = omega_w sqrt(eps_op) D / c.  Equals 2 pi at D = D_o.
inline double inter_element_phase(const MaterialParams& mat, const Carriers& car,
                                  const Geometry& geo) {
  return car.omega_w() * mat.n_op() * geo.period / kSpeedOfLight;
}

/// Offset phase of the n-th element (1-based):
///   phi_n = phi + (n-1) * Delta.
inline double element_offset_phase(const MaterialParams& mat, const Carriers& car,
                                   const Geometry& geo, int n) {
  validate(mat); validate(car); validate(geo);
  if (n < 1 || n > geo.n_elements)
    throw std::out_of_range("element_offset_phase: element index out of range");
  return single_element_offset(mat, car, geo) + (n - 1) * inter_element_phase(mat, car, geo);
}

namespace detail {

// Normalized Dirichlet ratio sin(N x)/sin(x) with its removable
// singularities at x = m pi evaluated analytically (value N * (-1)^{m(N-1)}),
// so that the array depth at the optimum periodicity is exactly N times the
// single-element depth.
inline double dirichlet_ratio(int n, double x) {
  const double m = std::round(x / kPi);
  const double s = std::sin(x);
  if (std::abs(s) < 1e-12 && std::abs(x - m * kPi) < 1e-12) {
    const long long mi = static_cast<long long>(m);
    const double sign = ((mi * (n - 1)) % 2 == 0) ? 1.0 : -1.0;
    return sign * n;
  }
  return std::sin(n * x) / s;
}

}  // namespace detail

/// Array modulation depth and offset: the N sinusoids
/// delta_theta*sin(w t + phi_n + b) sum to delta_theta_N*sin(w t + phi_N + b)
/// with delta_theta_N = delta_theta * sin(N Delta/2)/sin(Delta/2) and
/// phi_N = phi + (N-1) Delta/2.  Returns {delta_theta_N, phi_N}.
inline std::pair<double, double> array_modulation_depth(const MaterialParams& mat,
                                                        const Carriers& car,
                                                        const Geometry& geo,
                                                        const MicrowaveDrive& drive) {
  const double dtheta = modulation_depth(mat, car, geo, drive);
  const double half_delta = 0.5 * inter_element_phase(mat, car, geo);
  const double ratio = detail::dirichlet_ratio(geo.n_elements, half_delta);
  const double phi_n = single_element_offset(mat, car, geo) + (geo.n_elements - 1) * half_delta;
  return {dtheta * ratio, phi_n};
}

/// Propagation phase chi = (N-1) k_op D + k_op W accumulated over the array.
inline double propagation_phase(const MaterialParams& mat, const Carriers& car,
                                const Geometry& geo) {
  validate(mat); validate(car); validate(geo);
  const double k = car.k_op(mat);
  return (geo.n_elements - 1) * k * geo.period + k * geo.width;
}

/// All depth/phase figures of a design in one bundle.
struct DepthResult {
  double delta_theta = 0.0;    // single-element depth (signed)
  double phi = 0.0;            // single-element offset
  double delta_theta_n = 0.0;  // array depth (signed)
  double phi_n = 0.0;          // array offset
  double chi = 0.0;            // propagation phase
};

inline DepthResult compute_depths(const MaterialParams& mat, const Carriers& car,
                                  const Geometry& geo, const MicrowaveDrive& drive) {
  DepthResult r;
  r.delta_theta = modulation_depth(mat, car, geo, drive);
  r.phi = single_element_offset(mat, car, geo);
  const auto [dn, pn] = array_modulation_depth(mat, car, geo, drive);
  r.delta_theta_n = dn;
  r.phi_n = pn;
  r.chi = propagation_phase(mat, car, geo);
  return r;
}

inline DepthResult compute_depths(const ConverterDesign& d) {
  return compute_depths(d.material, d.carriers, d.geometry, d.drive);
}

/// Instantaneous encoded phase theta_i(t) = delta_theta_N sin(w t + phi_N + b).
/// At the optimum periodicity this reduces to N*delta_theta*cos(w t + b).
inline double modulated_phase(const DepthResult& depth, const Carriers& car, double t, double b) {
  return depth.delta_theta_n * std::sin(car.omega_w() * t + depth.phi_n + b);
}

/// True iff the geometry sits at the optimum width and periodicity for the
/// given carriers (within rel_tol). The coherent-state encoding formulas
/// are defined only there.
inline bool is_optimum_design(const MaterialParams& mat, const Carriers& car,
                              const Geometry& geo, double rel_tol = 1e-6) {
  const double w_o = optimum_element_width(mat, car);
  return std::abs(geo.width - w_o) <= rel_tol * w_o &&
         std::abs(geo.period - 2.0 * w_o) <= rel_tol * 2.0 * w_o;
}

}  // namespace qeosim
