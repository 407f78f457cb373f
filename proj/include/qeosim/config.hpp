#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "qeosim/constants.hpp"
#include "qeosim/constellation.hpp"
#include "qeosim/physics.hpp"

// Scenario configuration: a single JSON document, SI units with
// unit-suffixed keys (degrees only for *_deg).  Loading applies defaults,
// resolves "optimum" geometry keywords through the physics formulas,
// re-validates every module invariant, and records an FNV-1a hash of the
// raw file for provenance headers.  All failures raise config_error with
// the offending field and constraint spelled out.

namespace qeosim {

class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

struct McConfig {
  std::uint64_t n_samples = 10000;
  std::uint64_t n_trials = 1000000;
  std::uint64_t seed = 1;
};

struct NumericsConfig {
  int sideband_half_width = 0;  // S; 0 = choose from the modulation depth
  int fock_truncation = 0;      // K; 0 = choose from n_ph
  int steps_per_period = 4096;
  double matrix_tol = 1e-9;     // verify subcommands: matrix identity defect
  double ode_tol = 1e-6;        // verify subcommands: phase mismatch (rad)
};

struct ScenarioConfig {
  MaterialParams material;
  Carriers carriers;
  Geometry geometry;      // resolved to concrete lengths
  MicrowaveDrive drive;   // field strength and reference symbol phase b
  Constellation constellation;  // radians
  double n_ph = 10.0;
  McConfig mc;
  NumericsConfig numerics;

  bool width_was_optimum = false;   // geometry came from the "optimum" keyword
  bool period_was_optimum = false;
  std::string config_hash;          // FNV-1a 64 of the raw config bytes (hex)
  std::vector<std::string> warnings;

  ConverterDesign design() const {
    return {material, carriers, geometry, drive};
  }
};

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

namespace detail {

using nlohmann::json;

inline const json* find_section(const json& root, const std::string& name) {
  if (!root.contains(name)) return nullptr;
  const json& s = root.at(name);
  if (!s.is_object()) throw config_error(name + ": expected an object");
  return &s;
}

inline void reject_unknown_keys(const json& obj, const std::string& section,
                                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) { known = true; break; }
    }
    if (!known) throw config_error(section + ": unknown key '" + item.key() + "'");
  }
}

inline double get_number(const json* obj, const std::string& section, const std::string& key,
                         std::optional<double> fallback) {
  if (obj == nullptr || !obj->contains(key)) {
    if (fallback) return *fallback;
    throw config_error(section + "." + key + ": required");
  }
  const json& v = obj->at(key);
  if (!v.is_number()) throw config_error(section + "." + key + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw config_error(section + "." + key + ": non-finite value");
  return d;
}

inline std::int64_t get_integer(const json* obj, const std::string& section,
                                const std::string& key, std::int64_t fallback) {
  if (obj == nullptr || !obj->contains(key)) return fallback;
  const json& v = obj->at(key);
  if (!v.is_number_integer())
    throw config_error(section + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

// number, or the keyword "optimum" (returned as empty optional).
inline std::optional<double> get_length_or_optimum(const json* obj, const std::string& section,
                                                   const std::string& key) {
  if (obj == nullptr || !obj->contains(key)) return std::nullopt;
  const json& v = obj->at(key);
  if (v.is_string()) {
    if (v.get<std::string>() == "optimum") return std::nullopt;
    throw config_error(section + "." + key + ": expected a number or \"optimum\"");
  }
  if (!v.is_number()) throw config_error(section + "." + key + ": expected a number or \"optimum\"");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw config_error(section + "." + key + ": non-finite value");
  return d;
}

}  // namespace detail

/// Parses and validates a config document; raw_bytes feeds the provenance
/// hash.  See load_config for the file-based entry point.
inline ScenarioConfig parse_config(const nlohmann::json& root, const std::string& raw_bytes) {
  using detail::find_section;
  using detail::get_integer;
  using detail::get_length_or_optimum;
  using detail::get_number;
  using detail::reject_unknown_keys;

  if (!root.is_object()) throw config_error("config: top level must be a JSON object");
  reject_unknown_keys(root, "config",
                      {"material", "carriers", "geometry", "drive", "state", "mc", "numerics"});

  ScenarioConfig cfg;
  {
    std::ostringstream h;
    h << std::hex << fnv1a64(raw_bytes);
    cfg.config_hash = h.str();
  }

  const auto* material = find_section(root, "material");
  const auto* carriers = find_section(root, "carriers");
  const auto* geometry = find_section(root, "geometry");
  const auto* drive = find_section(root, "drive");
  const auto* state = find_section(root, "state");
  const auto* mc = find_section(root, "mc");
  const auto* numerics = find_section(root, "numerics");

  if (material) reject_unknown_keys(*material, "material", {"eps_op", "n_op", "r33"});
  if (carriers) reject_unknown_keys(*carriers, "carriers", {"f_w_hz", "lambda_op_m"});
  if (geometry) reject_unknown_keys(*geometry, "geometry", {"W_m", "D_m", "N", "gamma"});
  if (drive) reject_unknown_keys(*drive, "drive", {"E_w_v_per_m", "b_deg", "constellation_deg"});
  if (state) reject_unknown_keys(*state, "state", {"n_ph"});
  if (mc) reject_unknown_keys(*mc, "mc", {"n_samples", "n_trials", "seed"});
  if (numerics)
    reject_unknown_keys(*numerics, "numerics", {"S", "K", "steps_per_period", "tolerances"});

  // material: n_op and eps_op are alternative spellings of one quantity.
  if (material && material->contains("eps_op") && material->contains("n_op"))
    throw config_error("material: give eps_op or n_op, not both");
  if (material && material->contains("eps_op")) {
    cfg.material.eps_op = get_number(material, "material", "eps_op", std::nullopt);
  } else {
    const double n_op = get_number(material, "material", "n_op", 1.734);
    if (n_op <= 1.0) throw config_error("material.n_op: must be > 1 (got " +
                                        std::to_string(n_op) + ")");
    cfg.material.eps_op = n_op * n_op;
  }
  cfg.material.r33 = get_number(material, "material", "r33", 30.8e-12);

  cfg.carriers.f_w = get_number(carriers, "carriers", "f_w_hz", std::nullopt);
  cfg.carriers.lambda_op = get_number(carriers, "carriers", "lambda_op_m", std::nullopt);

  try {
    validate(cfg.material);
    validate(cfg.carriers);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }

  // geometry: resolve "optimum" keywords now that material+carriers exist.
  const std::int64_t n_elements = get_integer(geometry, "geometry", "N", 10);
  if (n_elements < 1)
    throw config_error("geometry.N: must be >= 1 (got " + std::to_string(n_elements) + ")");
  if (n_elements > 100000)
    throw config_error("geometry.N: must be <= 100000 (got " + std::to_string(n_elements) + ")");
  cfg.geometry.n_elements = static_cast<int>(n_elements);
  cfg.geometry.gamma = get_number(geometry, "geometry", "gamma", 6500.0);

  const auto w = get_length_or_optimum(geometry, "geometry", "W_m");
  const auto d = get_length_or_optimum(geometry, "geometry", "D_m");
  cfg.width_was_optimum = !w.has_value();
  cfg.period_was_optimum = !d.has_value();
  cfg.geometry.width = w ? *w : optimum_element_width(cfg.material, cfg.carriers);
  cfg.geometry.period = d ? *d : optimum_array_periodicity(cfg.material, cfg.carriers);

  cfg.drive.field_strength = get_number(drive, "drive", "E_w_v_per_m", std::nullopt);
  cfg.drive.symbol_phase = wrap_angle(get_number(drive, "drive", "b_deg", 0.0) * kPi / 180.0);

  cfg.constellation.phases.clear();
  if (drive && drive->contains("constellation_deg")) {
    const auto& arr = drive->at("constellation_deg");
    if (!arr.is_array() || arr.empty())
      throw config_error("drive.constellation_deg: expected a non-empty array of numbers");
    for (const auto& v : arr) {
      if (!v.is_number())
        throw config_error("drive.constellation_deg: expected a non-empty array of numbers");
      const double deg = v.get<double>();
      if (!std::isfinite(deg)) throw config_error("drive.constellation_deg: non-finite value");
      cfg.constellation.phases.push_back(wrap_angle(deg * kPi / 180.0));
    }
  } else {
    cfg.constellation.phases = {0.0, kPi / 3.0, 2.0 * kPi / 3.0, kPi};
  }

  cfg.n_ph = get_number(state, "state", "n_ph", 10.0);
  if (cfg.n_ph < 0.0)
    throw config_error("state.n_ph: must be >= 0 (got " + std::to_string(cfg.n_ph) + ")");

  const std::int64_t n_samples = get_integer(mc, "mc", "n_samples", 10000);
  if (n_samples < 1) throw config_error("mc.n_samples: must be >= 1");
  cfg.mc.n_samples = static_cast<std::uint64_t>(n_samples);
  const std::int64_t n_trials = get_integer(mc, "mc", "n_trials", 1000000);
  if (n_trials < 1000) throw config_error("mc.n_trials: must be >= 1000");
  cfg.mc.n_trials = static_cast<std::uint64_t>(n_trials);
  const std::int64_t seed = get_integer(mc, "mc", "seed", 1);
  if (seed < 0) throw config_error("mc.seed: must be >= 0");
  cfg.mc.seed = static_cast<std::uint64_t>(seed);

  const std::int64_t s = get_integer(numerics, "numerics", "S", 0);
  if (s < 0) throw config_error("numerics.S: must be >= 0 (0 = automatic)");
  cfg.numerics.sideband_half_width = static_cast<int>(s);
  const std::int64_t k = get_integer(numerics, "numerics", "K", 0);
  if (k < 0) throw config_error("numerics.K: must be >= 0 (0 = automatic)");
  cfg.numerics.fock_truncation = static_cast<int>(k);
  const std::int64_t spp = get_integer(numerics, "numerics", "steps_per_period", 4096);
  if (spp < 1000) throw config_error("numerics.steps_per_period: must be >= 1000");
  cfg.numerics.steps_per_period = static_cast<int>(spp);
  if (numerics && numerics->contains("tolerances")) {
    const auto& tol = numerics->at("tolerances");
    if (!tol.is_object()) throw config_error("numerics.tolerances: expected an object");
    reject_unknown_keys(tol, "numerics.tolerances", {"matrix", "ode"});
    cfg.numerics.matrix_tol = get_number(&tol, "numerics.tolerances", "matrix", 1e-9);
    cfg.numerics.ode_tol = get_number(&tol, "numerics.tolerances", "ode", 1e-6);
    if (cfg.numerics.matrix_tol <= 0.0)
      throw config_error("numerics.tolerances.matrix: must be > 0");
    if (cfg.numerics.ode_tol <= 0.0) throw config_error("numerics.tolerances.ode: must be > 0");
  }

  try {
    validate(cfg.geometry);
    validate(cfg.drive);
    validate(cfg.constellation);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }

  if (cfg.carriers.carrier_ratio() <= 100.0) {
    std::ostringstream w_msg;
    w_msg << "carriers: omega_op/omega_w = " << cfg.carriers.carrier_ratio()
          << " <= 100; the narrowband sideband treatment degrades at low ratios";
    cfg.warnings.push_back(w_msg.str());
  }

  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string raw = buf.str();
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error("config: JSON parse failure in '" + path + "': " + e.what());
  }
  return parse_config(root, raw);
}

}  // namespace qeosim
