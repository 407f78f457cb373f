#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "qeosim/constants.hpp"
#include "qeosim/physics.hpp"

// Quantum optical states traversing the converter. Phase modulation is
// diagonal in the Fock basis — the k-photon amplitude picks up k times the
// per-photon phase — so coherent states stay coherent and only their mean
// amplitude rotates: alpha -> alpha e^{-j theta}.
//
// integrate_amplitude_ode is the independent numerical oracle for that
// statement: it integrates the per-photon equation of motion through the
// element windows with RK4 instead of using any closed-form depth formula.

namespace qeosim {

class refinement_error : public std::runtime_error {
 public:
  explicit refinement_error(const std::string& what) : std::runtime_error(what) {}
};

/// Truncated Fock-basis superposition sum_k C_k |k>.
struct FockState {
  int truncation = 0;                       // K: amplitudes cover k in [0, K]
  std::vector<std::complex<double>> amps;   // C_k
  double tail = 0.0;                        // 1 - sum |C_k|^2 at construction
  bool tail_warning = false;                // tail exceeded 1e-6

  FockState() = default;
  explicit FockState(int k_max)
      : truncation(k_max), amps(static_cast<std::size_t>(k_max) + 1) {
    if (k_max < 0) throw std::invalid_argument("FockState: truncation must be >= 0");
  }

  double norm_sq() const {
    double n = 0.0;
    for (const auto& a : amps) n += std::norm(a);
    return n;
  }
};

/// Coherent state by its mean complex amplitude; n_ph = |alpha|^2.
struct CoherentState {
  std::complex<double> alpha;
  double n_ph = 0.0;

  static CoherentState from_alpha(std::complex<double> a) {
    return {a, std::norm(a)};
  }
  /// Real (zero-phase) amplitude sqrt(n_ph).
  static CoherentState from_mean_photons(double n_ph) {
    if (!(n_ph >= 0.0)) throw std::invalid_argument("CoherentState: n_ph must be >= 0");
    return {std::sqrt(n_ph), n_ph};
  }
};

/// Default Fock truncation holding the Poisson tail below 1e-12 for
/// n_ph <= 100.
inline int default_fock_truncation(double n_ph) {
  if (!(n_ph >= 0.0)) throw std::invalid_argument("default_fock_truncation: n_ph must be >= 0");
  return static_cast<int>(std::ceil(n_ph + 10.0 * std::sqrt(n_ph) + 10.0));
}

/// Poissonian amplitudes C_k = e^{-|alpha|^2/2} alpha^k / sqrt(k!), built by
/// the stable recurrence C_{k+1} = C_k * alpha / sqrt(k+1).  The missing
/// probability beyond K is reported in tail; tail > 1e-6 sets tail_warning.
inline FockState coherent_fock_amplitudes(std::complex<double> alpha, int k_max) {
  FockState st(k_max);
  std::complex<double> c = std::exp(-0.5 * std::norm(alpha));
  st.amps[0] = c;
  for (int k = 1; k <= k_max; ++k) {
    c *= alpha / std::sqrt(static_cast<double>(k));
    st.amps[static_cast<std::size_t>(k)] = c;
  }
  st.tail = std::max(0.0, 1.0 - st.norm_sq());
  st.tail_warning = st.tail > 1e-6;
  return st;
}

/// Applies the per-photon phase factor: C_k -> C_k e^{-j k theta_total}.
inline FockState modulate_fock_state(const FockState& st, double theta_total) {
  FockState out = st;
  const std::complex<double> step = std::polar(1.0, -theta_total);
  std::complex<double> ph = 1.0;
  for (auto& a : out.amps) {
    a *= ph;
    ph *= step;
  }
  return out;
}

/// Phase modulation by the full converter at lab time t with symbol phase b:
/// C_k -> C_k e^{-j k (omega_op t + chi + theta_i(t))}.
inline FockState modulate_fock_state(const FockState& st, const ConverterDesign& design,
                                     double t, double b) {
  ConverterDesign d = design;
  d.drive.symbol_phase = wrap_angle(b);
  validate(d);
  const DepthResult depth = compute_depths(d);
  const double theta = d.carriers.omega_op() * t + depth.chi +
                       modulated_phase(depth, d.carriers, t, d.drive.symbol_phase);
  return modulate_fock_state(st, theta);
}

/// Numerical oracle for the per-photon transit phase. Integrates the
/// k-photon amplitude equation
///
///   dC_k/dt = -j k omega_op (1 - (eps_op r33 / 2) gamma E_w(t)) C_k,
///   E_w(t) = |E_w| sin(omega_w t + b),
///
/// with fixed-step RK4 across each element's transit window (entry of
/// element n at t0 + (n-1) n_op D / c, dwell n_op W / c); the free-carrier
/// part and the gaps are handled analytically (interaction picture), and the
/// spatial propagation phase chi is attached at the end.  Returns the full
/// accumulated factor; for |E_w| = 0 it is exactly
/// e^{-j k (omega_op t_transit + chi)}.
///
/// The result is accepted only if halving the step changes the phase by
/// less than 1e-6 rad; otherwise refinement_error is thrown.
inline std::complex<double> integrate_amplitude_ode(const ConverterDesign& design, double t0,
                                                    double b, int k,
                                                    int steps_per_period = 4096) {
  ConverterDesign d = design;
  d.drive.symbol_phase = wrap_angle(b);
  validate(d);
  if (k < 0) throw std::invalid_argument("integrate_amplitude_ode: k must be >= 0");
  if (steps_per_period < 1000)
    throw std::invalid_argument("integrate_amplitude_ode: steps_per_period must be >= 1000");
  if (!std::isfinite(t0)) throw std::invalid_argument("integrate_amplitude_ode: non-finite t0");

  const double n_op = d.material.n_op();
  const double t_window = n_op * d.geometry.width / kSpeedOfLight;   // per-element dwell
  const double t_pitch = n_op * d.geometry.period / kSpeedOfLight;   // entry-to-entry
  const double omega_w = d.carriers.omega_w();
  // Modulation rate coefficient: d(phase)/dt = -rate * sin(omega_w t + b).
  const double rate = d.carriers.omega_op() * (d.material.eps_op * d.material.r33 / 2.0) *
                      d.geometry.gamma * d.drive.field_strength;
  const double bsym = d.drive.symbol_phase;

  auto integrate = [&](int spp) {
    std::complex<double> c = 1.0;
    const int steps = std::max(
        16, static_cast<int>(std::ceil(spp * t_window * d.carriers.f_w)));
    const auto deriv = [&](double t, std::complex<double> y) {
      return std::complex<double>(0.0, 1.0) * (static_cast<double>(k) * rate) *
             std::sin(omega_w * t + bsym) * y;
    };
    for (int n = 0; n < d.geometry.n_elements; ++n) {
      const double start = t0 + n * t_pitch;
      const double h = t_window / steps;
      for (int i = 0; i < steps; ++i) {
        const double t = start + i * h;
        const auto k1 = deriv(t, c);
        const auto k2 = deriv(t + 0.5 * h, c + 0.5 * h * k1);
        const auto k3 = deriv(t + 0.5 * h, c + 0.5 * h * k2);
        const auto k4 = deriv(t + h, c + h * k3);
        c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
    return c;
  };

  const std::complex<double> coarse = integrate(steps_per_period);
  const std::complex<double> fine = integrate(2 * steps_per_period);
  const double dphase = std::abs(std::arg(fine / coarse));
  if (!(dphase <= 1e-6))
    throw refinement_error("integrate_amplitude_ode: step-halving phase change " +
                           std::to_string(dphase) + " rad exceeds 1e-6");

  const double t_transit = (d.geometry.n_elements - 1) * t_pitch + t_window;
  const double chi = propagation_phase(d.material, d.carriers, d.geometry);
  const double carrier = static_cast<double>(k) * (d.carriers.omega_op() * t_transit + chi);
  return fine * std::polar(1.0, -carrier);
}

/// One PSK symbol carried on a coherent state.
struct EncodedSymbol {
  double b = 0.0;                      // microwave symbol phase (rad)
  double theta = 0.0;                  // encoded optical phase theta_i (rad)
  std::complex<double> alpha_i;        // alpha * e^{-j theta_i}
  double mean_x = 0.0;                 // <x> = Re alpha_i
  double mean_p = 0.0;                 // <p> = Im alpha_i
};

/// Encodes one symbol: theta_i = N * delta_theta * cos(b), alpha_i =
/// alpha e^{-j theta_i}.  Symbols are defined at microwave zero-phase
/// sampling instants; requires the optimum width/periodicity, where the
/// array sinusoid reduces to N delta_theta cos(omega_w t + b).
inline EncodedSymbol encode_coherent_symbol(const CoherentState& alpha,
                                            const ConverterDesign& design, double b) {
  ConverterDesign d = design;
  d.drive.symbol_phase = wrap_angle(b);
  validate(d);
  if (!is_optimum_design(d.material, d.carriers, d.geometry))
    throw std::invalid_argument(
        "encode_coherent_symbol: design must sit at the optimum element width and periodicity");
  const double dtheta = modulation_depth(d.material, d.carriers, d.geometry, d.drive);
  EncodedSymbol sym;
  sym.b = d.drive.symbol_phase;
  sym.theta = d.geometry.n_elements * dtheta * std::cos(sym.b);
  sym.alpha_i = alpha.alpha * std::polar(1.0, -sym.theta);
  sym.mean_x = sym.alpha_i.real();
  sym.mean_p = sym.alpha_i.imag();
  return sym;
}

/// Determinant-+1 rotation [[cos t, sin t], [-sin t, cos t]] acting on
/// (x, p) so that (x', p') = (Re, Im) of (x + j p) e^{-j t}.
struct RotationMatrix {
  double xx = 1.0, xp = 0.0, px = 0.0, pp = 1.0;
};

inline RotationMatrix rotation_matrix(double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("rotation_matrix: non-finite angle");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c, s, -s, c};
}

inline std::pair<double, double> apply_rotation(double theta, double x, double p) {
  const RotationMatrix r = rotation_matrix(theta);
  return {r.xx * x + r.xp * p, r.px * x + r.pp * p};
}

/// Worst-case relative deviation, over t_grid, between the exact modulated
/// amplitude alpha e^{-j theta_i(t)} (carrier and propagation phase removed)
/// and the constant-phase symbol alpha e^{-j theta_i(0)}:
///   max_t |e^{-j theta_i(t)} - e^{-j theta_i(0)}|.
/// Quantifies how far the encoding wanders within a microwave period away
/// from the zero-phase sampling instant.
inline double narrowband_residual(const ConverterDesign& design, double b,
                                  const std::vector<double>& t_grid) {
  ConverterDesign d = design;
  d.drive.symbol_phase = wrap_angle(b);
  validate(d);
  if (!is_optimum_design(d.material, d.carriers, d.geometry))
    throw std::invalid_argument(
        "narrowband_residual: design must sit at the optimum element width and periodicity");
  const DepthResult depth = compute_depths(d);
  const std::complex<double> approx =
      std::polar(1.0, -modulated_phase(depth, d.carriers, 0.0, d.drive.symbol_phase));
  double worst = 0.0;
  for (double t : t_grid) {
    if (!std::isfinite(t)) throw std::invalid_argument("narrowband_residual: non-finite t");
    const std::complex<double> exact =
        std::polar(1.0, -modulated_phase(depth, d.carriers, t, d.drive.symbol_phase));
    worst = std::max(worst, std::abs(exact - approx));
  }
  return worst;
}

}  // namespace qeosim
