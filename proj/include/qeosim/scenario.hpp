#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "qeosim/config.hpp"
#include "qeosim/constellation.hpp"
#include "qeosim/qstate.hpp"
#include "qeosim/sideband.hpp"
#include "qeosim/version.hpp"

// Scenario runners behind the CLI subcommands. Each runner writes its
// artifacts into an output directory (atomically: temp file + rename, and
// everything already written is removed if the run fails) and returns the
// process exit code: 0 success, 3 when a verify subcommand exceeds its
// numerical tolerance.  Validation problems throw and are mapped to exit
// code 2 by the CLI driver.
//
// Output is byte-deterministic for a fixed config + seed: doubles are
// printed with "%.17g" in CSVs and shortest-round-trip in JSON.

namespace qeosim {

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Worker-thread count for Monte Carlo fan-out (results are worker-count
/// independent by the block-substream contract).
inline int mc_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hc, 1u, 8u));
}

/// Sideband half-width: explicit numerics.S, or the truncation rule applied
/// to the design's total modulation depth.
inline int resolve_half_width(const ScenarioConfig& cfg, double total_depth) {
  if (cfg.numerics.sideband_half_width > 0) return cfg.numerics.sideband_half_width;
  return truncation_order(total_depth);
}

/// Fock truncation: explicit numerics.K, or the Poisson-tail rule.
inline int resolve_fock_truncation(const ScenarioConfig& cfg) {
  if (cfg.numerics.fock_truncation > 0) return cfg.numerics.fock_truncation;
  return default_fock_truncation(cfg.n_ph);
}

/// Collects files written during one run; on failure the partial output set
/// is deleted so a directory never holds half a run.
class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec)
      throw std::runtime_error("cannot create output directory '" + dir_.string() +
                               "': " + ec.message());
  }

  void write_text(const std::string& name, const std::string& content) {
    const std::filesystem::path path = dir_ / name;
    const std::filesystem::path tmp(path.string() + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
      out << content;
      out.flush();
      if (!out.good()) throw std::runtime_error("write failure on '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
    written_.push_back(path);
  }

  void write_json(const std::string& name, const nlohmann::json& j) {
    write_text(name, j.dump(2) + "\n");
  }

  void discard_all() noexcept {
    for (const auto& p : written_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
    written_.clear();
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
};

namespace detail {

template <typename Fn>
int guarded(OutputWriter& w, Fn&& fn) {
  try {
    return fn();
  } catch (...) {
    w.discard_all();
    throw;
  }
}

}  // namespace detail

inline nlohmann::json resolved_json(const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["material"] = {{"eps_op", cfg.material.eps_op},
                   {"n_op", cfg.material.n_op()},
                   {"r33", cfg.material.r33}};
  j["carriers"] = {{"f_w_hz", cfg.carriers.f_w}, {"lambda_op_m", cfg.carriers.lambda_op}};
  j["geometry"] = {{"W_m", cfg.geometry.width},
                   {"D_m", cfg.geometry.period},
                   {"N", cfg.geometry.n_elements},
                   {"gamma", cfg.geometry.gamma},
                   {"W_from_optimum_keyword", cfg.width_was_optimum},
                   {"D_from_optimum_keyword", cfg.period_was_optimum}};
  nlohmann::json con = nlohmann::json::array();
  for (double b : cfg.constellation.phases) con.push_back(rad_to_deg(b));
  j["drive"] = {{"E_w_v_per_m", cfg.drive.field_strength},
                {"b_deg", rad_to_deg(cfg.drive.symbol_phase)},
                {"constellation_deg", con}};
  j["state"] = {{"n_ph", cfg.n_ph}};
  j["mc"] = {{"n_samples", cfg.mc.n_samples},
             {"n_trials", cfg.mc.n_trials},
             {"seed", cfg.mc.seed}};
  j["numerics"] = {{"S", cfg.numerics.sideband_half_width},
                   {"K", cfg.numerics.fock_truncation},
                   {"steps_per_period", cfg.numerics.steps_per_period},
                   {"tolerances",
                    {{"matrix", cfg.numerics.matrix_tol}, {"ode", cfg.numerics.ode_tol}}}};
  return j;
}

inline nlohmann::json provenance_json(const ScenarioConfig& cfg) {
  return {{"tool", kVersionString},
          {"config_hash", cfg.config_hash},
          {"resolved", resolved_json(cfg)}};
}

/// Leading comment lines carried by every CSV artifact.
inline std::string provenance_lines(const ScenarioConfig& cfg) {
  std::ostringstream os;
  os << "# " << kVersionString << "\n";
  os << "# config_hash " << cfg.config_hash << "\n";
  os << "# resolved"
     << " f_w_hz=" << fmt_g17(cfg.carriers.f_w)
     << " lambda_op_m=" << fmt_g17(cfg.carriers.lambda_op)
     << " n_op=" << fmt_g17(cfg.material.n_op())
     << " r33=" << fmt_g17(cfg.material.r33)
     << " W_m=" << fmt_g17(cfg.geometry.width)
     << " D_m=" << fmt_g17(cfg.geometry.period)
     << " N=" << cfg.geometry.n_elements
     << " gamma=" << fmt_g17(cfg.geometry.gamma)
     << " E_w_v_per_m=" << fmt_g17(cfg.drive.field_strength)
     << " n_ph=" << fmt_g17(cfg.n_ph)
     << " seed=" << cfg.mc.seed << "\n";
  return os.str();
}

/// `design`: optimum geometry, depth figures, and (at optimum geometry) the
/// encoded constellation with its distance budget.
inline int run_design(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
  OutputWriter w(out_dir);
  return detail::guarded(w, [&] {
    const ConverterDesign design = cfg.design();
    const DepthResult depth = compute_depths(design);
    const double w_o = optimum_element_width(cfg.material, cfg.carriers);
    const double d_o = optimum_array_periodicity(cfg.material, cfg.carriers);

    nlohmann::json j;
    j["provenance"] = provenance_json(cfg);
    const Geometry null_geo{2.0 * w_o, 2.0 * w_o, 1, cfg.geometry.gamma};
    j["optimum"] = {{"W_o_m", w_o},
                    {"D_o_m", d_o},
                    {"delta_theta_at_2W_o",
                     modulation_depth(cfg.material, cfg.carriers, null_geo, cfg.drive)}};
    j["depths"] = {{"delta_theta", depth.delta_theta},
                   {"abs_delta_theta", std::abs(depth.delta_theta)},
                   {"phi", depth.phi},
                   {"delta_theta_n", depth.delta_theta_n},
                   {"abs_delta_theta_n", std::abs(depth.delta_theta_n)},
                   {"phi_n", depth.phi_n},
                   {"chi", depth.chi}};

    std::vector<std::string> warnings = cfg.warnings;
    if (is_optimum_design(cfg.material, cfg.carriers, cfg.geometry)) {
      const auto enc = encode_constellation(cfg.constellation,
                                            CoherentState::from_mean_photons(cfg.n_ph), design);
      nlohmann::json symbols = nlohmann::json::array();
      for (const auto& s : enc.symbols)
        symbols.push_back({{"b_deg", rad_to_deg(s.b)},
                           {"theta_rad", s.theta},
                           {"mean_x", s.mean_x},
                           {"mean_p", s.mean_p}});
      j["constellation"] = symbols;
      for (const auto& [a, b] : enc.degenerate_pairs)
        warnings.push_back("constellation: symbols " + std::to_string(a) + " and " +
                           std::to_string(b) + " encode to the same optical phase");
      if (enc.symbols.size() >= 2) {
        const MinDistance md = min_distance(enc.symbols);
        j["min_distance"] = {{"d", md.d}, {"i", md.i}, {"j", md.j}};
        double union_bound = 0.0;
        for (std::size_t a = 0; a < enc.symbols.size(); ++a) {
          for (std::size_t b = a + 1; b < enc.symbols.size(); ++b) {
            const double dx = enc.symbols[a].mean_x - enc.symbols[b].mean_x;
            const double dp = enc.symbols[a].mean_p - enc.symbols[b].mean_p;
            union_bound += pairwise_error(std::hypot(dx, dp), kQuadratureSigma);
          }
        }
        j["ser_union_bound"] =
            2.0 * union_bound / static_cast<double>(enc.symbols.size());
      }
    } else {
      warnings.push_back("geometry is away from the optimum width/periodicity; "
                         "constellation encoding skipped");
    }
    j["warnings"] = warnings;
    // cfg.warnings were already echoed by the driver; only print the new ones.
    for (std::size_t i = cfg.warnings.size(); i < warnings.size(); ++i)
      std::cerr << "warning: " << warnings[i] << "\n";

    w.write_json("design.json", j);
    return 0;
  });
}

/// `width-sweep`: single-element sideband probabilities over widths
/// (0, 2 W_o], n points (default 1000).
inline int run_width_sweep(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                           std::optional<std::uint64_t> n_override) {
  OutputWriter w(out_dir);
  return detail::guarded(w, [&] {
    const std::uint64_t n = n_override.value_or(1000);
    if (n < 1) throw config_error("width-sweep: --n must be >= 1");
    const double w_o = optimum_element_width(cfg.material, cfg.carriers);
    std::vector<double> widths;
    widths.reserve(n);
    for (std::uint64_t k = 1; k <= n; ++k)
      widths.push_back(2.0 * w_o * static_cast<double>(k) / static_cast<double>(n));

    const auto rows = width_sweep(cfg.material, cfg.carriers, cfg.geometry.gamma, cfg.drive,
                                  widths);
    std::ostringstream csv;
    csv << provenance_lines(cfg);
    csv << "w_m,P0,P1,P2,tail\n";
    for (const auto& r : rows)
      csv << fmt_g17(r.w) << ',' << fmt_g17(r.p0) << ',' << fmt_g17(r.p1) << ','
          << fmt_g17(r.p2) << ',' << fmt_g17(r.tail) << '\n';
    w.write_text("width_sweep.csv", csv.str());
    return 0;
  });
}

/// `matrix-verify`: cascade/closed-form agreement, the two-section
/// identity, unitarity, and probability conservation, all at the resolved
/// design.  Exit 3 when any defect exceeds numerics.tolerances.matrix.
inline int run_matrix_verify(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
  OutputWriter w(out_dir);
  return detail::guarded(w, [&] {
    const double period_w = cfg.carriers.microwave_period();
    const std::vector<double> times{0.0, period_w / 8.0, period_w / 3.0};

    const DepthResult depth = compute_depths(cfg.design());
    const double per_element = std::abs(depth.delta_theta);
    const double total = per_element * cfg.geometry.n_elements;
    const int hw = cfg.numerics.sideband_half_width > 0
                       ? cfg.numerics.sideband_half_width
                       : std::max(25, truncation_order(total));

    // Two contiguous optimum-width sections modulate in antiphase and must
    // cancel to a pure propagation factor e^{-j 2 k_op W_o} * identity.
    const double w_o = optimum_element_width(cfg.material, cfg.carriers);
    const Geometry two_sections{w_o, w_o, 2, cfg.geometry.gamma};
    const double dtheta_opt =
        std::abs(modulation_depth(cfg.material, cfg.carriers, two_sections, cfg.drive));
    const int inner_two = padded_inner_halfwidth(hw, 2.0 * dtheta_opt);
    const std::complex<double> two_target =
        std::polar(1.0, -2.0 * cfg.carriers.k_op(cfg.material) * w_o);
    double two_section_defect = 0.0;
    for (double t : times) {
      const SidebandMatrix m =
          cascade_array_matrix(cfg.material, cfg.carriers, two_sections, cfg.drive, t, hw);
      for (int s = -inner_two; s <= inner_two; ++s) {
        for (int p = -inner_two; p <= inner_two; ++p) {
          const std::complex<double> want = (s == p) ? two_target : 0.0;
          two_section_defect = std::max(two_section_defect, std::abs(m.at(s, p) - want));
        }
      }
    }

    // Cascade product vs the closed form built from the summed sinusoid.
    const int inner = padded_inner_halfwidth(hw, total);
    double cascade_defect = 0.0;
    double unitarity = 0.0;
    double prob_sum_error = 0.0;
    for (double t : times) {
      const SidebandMatrix closed =
          array_matrix(cfg.material, cfg.carriers, cfg.geometry, cfg.drive, t, hw);
      const SidebandMatrix stacked =
          cascade_array_matrix(cfg.material, cfg.carriers, cfg.geometry, cfg.drive, t, hw);
      for (int s = -inner; s <= inner; ++s)
        for (int p = -inner; p <= inner; ++p)
          cascade_defect = std::max(cascade_defect, std::abs(closed.at(s, p) - stacked.at(s, p)));
      unitarity = std::max(unitarity, unitarity_defect(closed, inner));
      const auto probs = sideband_probabilities(apply(closed, SidebandVector::unit(hw)));
      prob_sum_error = std::max(prob_sum_error, std::abs(probs.sum - 1.0));
    }

    const double tol = cfg.numerics.matrix_tol;
    const bool pass = two_section_defect <= tol && cascade_defect <= tol &&
                      unitarity <= tol && prob_sum_error <= tol;

    nlohmann::json j;
    j["provenance"] = provenance_json(cfg);
    j["S"] = hw;
    j["inner_half_width"] = inner;
    j["times_s"] = times;
    j["checks"] = {{"two_section_identity_defect", two_section_defect},
                   {"cascade_vs_closed_form_defect", cascade_defect},
                   {"unitarity_defect", unitarity},
                   {"probability_sum_error", prob_sum_error}};
    j["tolerance"] = tol;
    j["pass"] = pass;
    w.write_json("matrix_verify.json", j);
    return pass ? 0 : 3;
  });
}

/// `ode-verify`: numerically integrated per-photon transit phase against
/// the closed form, k in {0, 1, 2, 5}, three entry times.  Exit 3 when the
/// worst phase mismatch exceeds numerics.tolerances.ode.
inline int run_ode_verify(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
  OutputWriter w(out_dir);
  return detail::guarded(w, [&] {
    const ConverterDesign design = cfg.design();
    const DepthResult depth = compute_depths(design);
    const double period_w = cfg.carriers.microwave_period();
    const double t_transit = cfg.material.n_op() *
                             ((cfg.geometry.n_elements - 1) * cfg.geometry.period +
                              cfg.geometry.width) /
                             kSpeedOfLight;
    const std::vector<int> ks{0, 1, 2, 5};
    const std::vector<double> t0s{0.0, period_w / 8.0, period_w / 3.0};

    nlohmann::json cases = nlohmann::json::array();
    double worst = 0.0;
    for (int k : ks) {
      for (double t0 : t0s) {
        const std::complex<double> numeric = integrate_amplitude_ode(
            design, t0, cfg.drive.symbol_phase, k, cfg.numerics.steps_per_period);
        const double closed = static_cast<double>(k) *
                              (cfg.carriers.omega_op() * t_transit + depth.chi +
                               modulated_phase(depth, cfg.carriers, t0, cfg.drive.symbol_phase));
        const double err =
            std::abs(std::arg(numeric * std::polar(1.0, closed)));
        worst = std::max(worst, err);
        cases.push_back({{"k", k}, {"t0_s", t0}, {"phase_error_rad", err}});
      }
    }

    const double tol = cfg.numerics.ode_tol;
    const bool pass = worst <= tol;
    nlohmann::json j;
    j["provenance"] = provenance_json(cfg);
    j["steps_per_period"] = cfg.numerics.steps_per_period;
    j["cases"] = cases;
    j["max_phase_error_rad"] = worst;
    j["tolerance_rad"] = tol;
    j["pass"] = pass;
    w.write_json("ode_verify.json", j);
    return pass ? 0 : 3;
  });
}

namespace detail {

inline std::string encode_csv(const ScenarioConfig& cfg, const EncodedConstellation& enc,
                              std::uint64_t n_samples, std::uint64_t seed) {
  std::ostringstream csv;
  csv << provenance_lines(cfg);
  csv << "symbol_index,b_deg,theta_rad,mean_x,mean_p,x,p\n";
  for (std::size_t i = 0; i < enc.symbols.size(); ++i) {
    const EncodedSymbol& s = enc.symbols[i];
    const SymbolCloud cloud = sample_cloud(s, n_samples, derive_substream(seed, i));
    for (const auto& [x, p] : cloud.samples) {
      csv << i << ',' << fmt_g17(rad_to_deg(s.b)) << ',' << fmt_g17(s.theta) << ','
          << fmt_g17(s.mean_x) << ',' << fmt_g17(s.mean_p) << ',' << fmt_g17(x) << ','
          << fmt_g17(p) << '\n';
    }
  }
  return csv.str();
}

inline void warn_degenerate(const EncodedConstellation& enc) {
  for (const auto& [a, b] : enc.degenerate_pairs)
    std::cerr << "warning: constellation symbols " << a << " and " << b
              << " encode to the same optical phase\n";
}

}  // namespace detail

/// `encode`: phase-space sample clouds for every constellation symbol.
inline int run_encode(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                      std::optional<std::uint64_t> n_override) {
  OutputWriter w(out_dir);
  return detail::guarded(w, [&] {
    const std::uint64_t n = n_override.value_or(cfg.mc.n_samples);
    const auto enc = encode_constellation(
        cfg.constellation, CoherentState::from_mean_photons(cfg.n_ph), cfg.design());
    detail::warn_degenerate(enc);
    w.write_text("encode.csv", detail::encode_csv(cfg, enc, n, cfg.mc.seed));
    return 0;
  });
}

/// `ser`: Monte Carlo symbol-error estimate plus the analytic distance
/// budget.
inline int run_ser(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                   std::optional<std::uint64_t> n_override) {
  OutputWriter w(out_dir);
  return detail::guarded(w, [&] {
    const std::uint64_t trials = n_override.value_or(cfg.mc.n_trials);
    const auto enc = encode_constellation(
        cfg.constellation, CoherentState::from_mean_photons(cfg.n_ph), cfg.design());
    detail::warn_degenerate(enc);
    const SerEstimate est = estimate_ser(enc.symbols, trials, cfg.mc.seed, mc_workers());

    nlohmann::json j;
    j["provenance"] = provenance_json(cfg);
    j["ser"] = est.ser;
    j["ci95"] = est.ci95;
    j["n_trials"] = est.n_trials;
    j["per_symbol_errors"] = est.per_symbol_errors;
    if (enc.symbols.size() >= 2) {
      const MinDistance md = min_distance(enc.symbols);
      j["min_distance"] = {{"d", md.d}, {"i", md.i}, {"j", md.j}};
    }
    w.write_json("ser.json", j);
    return 0;
  });
}

/// `report`: the full reproduction suite — design summary, width sweep, and
/// the (N, n_ph) grid of encode clouds and SER estimates at optimum
/// geometry.
inline int run_report(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
  OutputWriter w(out_dir);
  int rc = run_design(cfg, out_dir);
  if (rc != 0) return rc;
  rc = run_width_sweep(cfg, out_dir, std::nullopt);
  if (rc != 0) return rc;

  return detail::guarded(w, [&] {
    const double w_o = optimum_element_width(cfg.material, cfg.carriers);
    const std::vector<int> n_grid{1, 5, 10};
    const std::vector<double> nph_grid{10.0, 100.0};

    nlohmann::json grid = nlohmann::json::array();
    std::map<std::pair<int, int>, double> ser_by_cell;  // (N, n_ph) -> ser
    int cell = 0;
    for (double n_ph : nph_grid) {
      for (int n_elements : n_grid) {
        ScenarioConfig c = cfg;
        c.geometry.width = w_o;
        c.geometry.period = 2.0 * w_o;
        c.geometry.n_elements = n_elements;
        c.n_ph = n_ph;
        const auto enc = encode_constellation(
            c.constellation, CoherentState::from_mean_photons(c.n_ph), c.design());
        detail::warn_degenerate(enc);

        const std::uint64_t cell_seed = derive_substream(cfg.mc.seed, 101 + cell);
        std::ostringstream name;
        name << "encode_N" << n_elements << "_nph" << static_cast<int>(n_ph) << ".csv";
        w.write_text(name.str(), detail::encode_csv(c, enc, c.mc.n_samples, cell_seed));

        const SerEstimate est =
            estimate_ser(enc.symbols, c.mc.n_trials, cell_seed, mc_workers());
        grid.push_back({{"N", n_elements},
                        {"n_ph", n_ph},
                        {"ser", est.ser},
                        {"ci95", est.ci95},
                        {"n_trials", est.n_trials},
                        {"per_symbol_errors", est.per_symbol_errors}});
        ser_by_cell[{n_elements, static_cast<int>(n_ph)}] = est.ser;
        ++cell;
      }
    }

    nlohmann::json j;
    j["provenance"] = provenance_json(cfg);
    j["grid"] = grid;
    // Strict decrease is only resolvable where the error counts are far from
    // zero; at n_ph = 100 the tail cells are statistically empty, so the
    // N-ordering there is reported as non-increasing.
    j["orderings"] = {
        {"ser_decreasing_in_N_at_nph10",
         ser_by_cell[{1, 10}] > ser_by_cell[{5, 10}] &&
             ser_by_cell[{5, 10}] > ser_by_cell[{10, 10}]},
        {"ser_nonincreasing_in_N_at_nph100",
         ser_by_cell[{1, 100}] >= ser_by_cell[{5, 100}] &&
             ser_by_cell[{5, 100}] >= ser_by_cell[{10, 100}]},
        {"ser_lower_at_nph100",
         ser_by_cell[{1, 100}] < ser_by_cell[{1, 10}] &&
             ser_by_cell[{5, 100}] < ser_by_cell[{5, 10}] &&
             ser_by_cell[{10, 100}] < ser_by_cell[{10, 10}]}};
    w.write_json("ser_grid.json", j);
    return 0;
  });
}

}  // namespace qeosim
