#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

// End-to-end tests run the installed binary as a subprocess; the build
// system injects its location via QEOSIM_CLI_PATH.

namespace {

fs::path scratch_root() {
  static fs::path root = [] {
    fs::path p = fs::temp_directory_path() /
                 ("qeosim_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return root;
}

fs::path fresh_dir(const std::string& hint) {
  static int counter = 0;
  fs::path p = scratch_root() / (hint + "_" + std::to_string(counter++));
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct RunResult {
  int code = -1;
  std::string err;
};

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const fs::path errfile = scratch_root() / ("stderr_" + std::to_string(counter++) + ".txt");
  std::string cmd;
  if (!env_prefix.empty()) cmd += env_prefix + " ";
  cmd += std::string("\"") + QEOSIM_CLI_PATH + "\" " + args + " 2> " + errfile.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  if (status != -1 && WIFEXITED(status)) r.code = WEXITSTATUS(status);
  r.err = read_file(errfile);
  return r;
}

json base_config() {
  json j;
  j["material"] = {{"n_op", 1.734}, {"r33", 30.8e-12}};
  j["carriers"] = {{"f_w_hz", 30.0e9}, {"lambda_op_m", 1555.0e-9}};
  j["geometry"] = {{"W_m", "optimum"}, {"D_m", "optimum"}, {"N", 10}, {"gamma", 6500.0}};
  j["drive"] = {{"E_w_v_per_m", 50.0},
                {"b_deg", 0.0},
                {"constellation_deg", {0.0, 60.0, 120.0, 180.0}}};
  j["state"] = {{"n_ph", 10.0}};
  j["mc"] = {{"n_samples", 200}, {"n_trials", 2000}, {"seed", 1}};
  return j;
}

fs::path write_config(const json& j, const std::string& hint = "cfg") {
  static int counter = 0;
  const fs::path p = scratch_root() / (hint + "_" + std::to_string(counter++) + ".json");
  std::ofstream out(p, std::ios::binary);
  out << j.dump(2) << "\n";
  return p;
}

std::vector<std::string> data_lines(const fs::path& p) {
  std::vector<std::string> lines;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  return lines;
}

std::vector<double> split_csv_row(const std::string& line) {
  std::vector<double> out;
  std::istringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) out.push_back(std::stod(field));
  return out;
}

}  // namespace

TEST_CASE("cli: version flag") {
  CHECK(run_cli("--version").code == 0);
}

TEST_CASE("cli: design emits the geometry and depth summary") {
  const fs::path cfg = write_config(base_config());
  const fs::path out = fresh_dir("design");
  const RunResult r = run_cli("design --config " + cfg.string() + " --out " + out.string());
  CHECK(r.code == 0);
  REQUIRE(fs::exists(out / "design.json"));
  const json j = json::parse(read_file(out / "design.json"));

  CHECK(std::abs(j["optimum"]["W_o_m"].get<double>() - 2.88151151480199923e-3) < 1e-12);
  CHECK(std::abs(j["optimum"]["D_o_m"].get<double>() - 5.76302302960399846e-3) < 1e-12);
  CHECK(std::abs(j["optimum"]["delta_theta_at_2W_o"].get<double>()) < 1e-12);
  CHECK(std::abs(j["depths"]["delta_theta"].get<double>() + 0.193419973122849785) < 1e-12);
  CHECK(std::abs(j["depths"]["abs_delta_theta_n"].get<double>() - 1.93419973122849785) < 1e-11);
  CHECK(std::abs(j["depths"]["chi"].get<double>() - 383594.638573078374) < 1e-6);

  REQUIRE(j["constellation"].size() == 4);
  const double radius = std::sqrt(10.0);
  for (const auto& row : j["constellation"]) {
    const double x = row["mean_x"].get<double>();
    const double p = row["mean_p"].get<double>();
    CHECK(std::abs(std::hypot(x, p) - radius) < 1e-10);
  }
  CHECK(j["min_distance"]["d"].get<double>() > 0.0);
  CHECK(j["ser_union_bound"].get<double>() > 0.0);
  CHECK(j["provenance"]["tool"].get<std::string>() == "qeosim 0.1.0");
  CHECK(j["provenance"]["resolved"]["geometry"]["W_from_optimum_keyword"].get<bool>());
}

TEST_CASE("cli: width sweep row count, header, and endpoint") {
  const fs::path cfg = write_config(base_config());
  const fs::path out = fresh_dir("sweep");
  const RunResult r =
      run_cli("width-sweep --config " + cfg.string() + " --out " + out.string() + " --n 50");
  CHECK(r.code == 0);
  const auto lines = data_lines(out / "width_sweep.csv");
  REQUIRE(lines.size() == 51);
  CHECK(lines[0] == "w_m,P0,P1,P2,tail");
  const auto last = split_csv_row(lines.back());
  REQUIRE(last.size() == 5);
  CHECK(std::abs(last[0] - 2.0 * 2.88151151480199923e-3) < 1e-12);
  CHECK(std::abs(last[1] - 1.0) < 1e-9);  // depth null at 2 W_o
  for (const auto& line : lines) {
    if (line == lines[0]) continue;
    for (double v : split_csv_row(line)) CHECK(std::isfinite(v));
  }
}

TEST_CASE("cli: encode output is byte-stable for a fixed seed") {
  const fs::path cfg = write_config(base_config());
  const fs::path out_a = fresh_dir("enc_a");
  const fs::path out_b = fresh_dir("enc_b");
  const fs::path out_c = fresh_dir("enc_c");
  const std::string tail = " --config " + cfg.string() + " --n 40 --out ";
  CHECK(run_cli("encode" + tail + out_a.string()).code == 0);
  CHECK(run_cli("encode" + tail + out_b.string()).code == 0);
  CHECK(run_cli("encode" + tail + out_c.string() + " --seed 9").code == 0);
  const std::string a = read_file(out_a / "encode.csv");
  CHECK(a == read_file(out_b / "encode.csv"));
  CHECK(a != read_file(out_c / "encode.csv"));

  const auto lines = data_lines(out_a / "encode.csv");
  REQUIRE(lines.size() == 1 + 4 * 40);
  CHECK(lines[0] == "symbol_index,b_deg,theta_rad,mean_x,mean_p,x,p");
  const auto row = split_csv_row(lines[1]);
  REQUIRE(row.size() == 7);
  CHECK(row[0] == 0.0);
  CHECK(std::abs(std::hypot(row[3], row[4]) - std::sqrt(10.0)) < 1e-10);
}

TEST_CASE("cli: seed precedence is flag over environment over config") {
  const fs::path cfg = write_config(base_config());  // config seed = 1
  const fs::path out_env = fresh_dir("seed_env");
  const fs::path out_flag = fresh_dir("seed_flag");
  const fs::path out_direct7 = fresh_dir("seed_d7");
  const fs::path out_direct9 = fresh_dir("seed_d9");
  const std::string tail = " --config " + cfg.string() + " --n 25 --out ";

  CHECK(run_cli("encode" + tail + out_env.string(), "QEOSIM_SEED=7").code == 0);
  CHECK(run_cli("encode" + tail + out_flag.string() + " --seed 9", "QEOSIM_SEED=7").code == 0);
  CHECK(run_cli("encode" + tail + out_direct7.string() + " --seed 7").code == 0);
  CHECK(run_cli("encode" + tail + out_direct9.string() + " --seed 9").code == 0);

  CHECK(read_file(out_env / "encode.csv") == read_file(out_direct7 / "encode.csv"));
  CHECK(read_file(out_flag / "encode.csv") == read_file(out_direct9 / "encode.csv"));
  CHECK(read_file(out_env / "encode.csv").find("seed=7") != std::string::npos);
  CHECK(read_file(out_flag / "encode.csv").find("seed=9") != std::string::npos);

  const RunResult bad = run_cli("encode" + tail + fresh_dir("seed_bad").string(),
                                "QEOSIM_SEED=banana");
  CHECK(bad.code == 2);
  CHECK(bad.err.find("QEOSIM_SEED") != std::string::npos);
}

TEST_CASE("cli: matrix verify passes at default tolerance and reports failure at 1e-18") {
  const fs::path cfg = write_config(base_config());
  const fs::path out = fresh_dir("mat_ok");
  const RunResult ok =
      run_cli("matrix-verify --config " + cfg.string() + " --out " + out.string());
  CHECK(ok.code == 0);
  const json j = json::parse(read_file(out / "matrix_verify.json"));
  CHECK(j["pass"].get<bool>());
  CHECK(j["checks"]["two_section_identity_defect"].get<double>() < 1e-9);
  CHECK(j["checks"]["cascade_vs_closed_form_defect"].get<double>() < 1e-9);
  CHECK(j["checks"]["unitarity_defect"].get<double>() < 1e-9);
  CHECK(j["checks"]["probability_sum_error"].get<double>() < 1e-9);

  json tight = base_config();
  tight["numerics"] = {{"tolerances", {{"matrix", 1e-18}}}};
  const fs::path cfg2 = write_config(tight, "tight");
  const fs::path out2 = fresh_dir("mat_tight");
  const RunResult fail =
      run_cli("matrix-verify --config " + cfg2.string() + " --out " + out2.string());
  CHECK(fail.code == 3);
  REQUIRE(fs::exists(out2 / "matrix_verify.json"));
  CHECK_FALSE(json::parse(read_file(out2 / "matrix_verify.json"))["pass"].get<bool>());
}

TEST_CASE("cli: ode verify passes on the default scenario") {
  json cfg_json = base_config();
  cfg_json["numerics"] = {{"steps_per_period", 2048}};
  const fs::path cfg = write_config(cfg_json);
  const fs::path out = fresh_dir("ode");
  const RunResult r =
      run_cli("ode-verify --config " + cfg.string() + " --out " + out.string());
  CHECK(r.code == 0);
  const json j = json::parse(read_file(out / "ode_verify.json"));
  CHECK(j["pass"].get<bool>());
  CHECK(j["max_phase_error_rad"].get<double>() < 1e-6);
  CHECK(j["cases"].size() == 12);
}

TEST_CASE("cli: ser json shape and confidence interval") {
  const fs::path cfg = write_config(base_config());
  const fs::path out = fresh_dir("ser");
  const RunResult r =
      run_cli("ser --config " + cfg.string() + " --out " + out.string() + " --n 2000");
  CHECK(r.code == 0);
  const json j = json::parse(read_file(out / "ser.json"));
  const double ser = j["ser"].get<double>();
  CHECK(ser >= 0.0);
  CHECK(ser <= 1.0);
  CHECK(j["n_trials"].get<long long>() == 2000);
  REQUIRE(j["per_symbol_errors"].size() == 4);
  long long total = 0;
  for (const auto& e : j["per_symbol_errors"]) total += e.get<long long>();
  CHECK(std::abs(ser - static_cast<double>(total) / 2000.0) < 1e-15);
  const double want_ci = 1.96 * std::sqrt(ser * (1.0 - ser) / 2000.0);
  CHECK(std::abs(j["ci95"].get<double>() - want_ci) < 1e-15);
  CHECK(j["min_distance"]["d"].get<double>() > 0.0);
}

TEST_CASE("cli: degenerate constellation points are warned about") {
  json cfg_json = base_config();
  cfg_json["drive"]["constellation_deg"] = {30.0, 330.0};
  const fs::path cfg = write_config(cfg_json, "degen");
  const fs::path out = fresh_dir("degen");
  const RunResult r =
      run_cli("encode --config " + cfg.string() + " --out " + out.string() + " --n 10");
  CHECK(r.code == 0);
  CHECK(r.err.find("same optical phase") != std::string::npos);
}

TEST_CASE("cli: validation failures exit 2 and leave no partial artifacts") {
  json bad = base_config();
  bad["geometry"]["N"] = 0;
  const fs::path cfg = write_config(bad, "badn");
  const fs::path out = fresh_dir("badn");
  const RunResult r = run_cli("design --config " + cfg.string() + " --out " + out.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("geometry.N") != std::string::npos);
  CHECK_FALSE(fs::exists(out / "design.json"));

  const RunResult missing =
      run_cli("design --config /nonexistent/q.json --out " + fresh_dir("miss").string());
  CHECK(missing.code == 2);

  const fs::path garbled = scratch_root() / "garbled.json";
  { std::ofstream(garbled) << "{ not json"; }
  const RunResult parse_fail =
      run_cli("design --config " + garbled.string() + " --out " + fresh_dir("garb").string());
  CHECK(parse_fail.code == 2);

  json unknown = base_config();
  unknown["geometry"]["widht_m"] = 1.0e-3;
  const RunResult unknown_key = run_cli("design --config " +
                                        write_config(unknown, "unk").string() + " --out " +
                                        fresh_dir("unk").string());
  CHECK(unknown_key.code == 2);
  CHECK(unknown_key.err.find("widht_m") != std::string::npos);
}

TEST_CASE("cli: report produces the complete artifact set") {
  json cfg_json = base_config();
  cfg_json["mc"] = {{"n_samples", 50}, {"n_trials", 2000}, {"seed", 1}};
  const fs::path cfg = write_config(cfg_json, "report");
  const fs::path out = fresh_dir("report");
  const RunResult r = run_cli("report --config " + cfg.string() + " --out " + out.string());
  CHECK(r.code == 0);

  CHECK(fs::exists(out / "design.json"));
  CHECK(fs::exists(out / "width_sweep.csv"));
  for (int n : {1, 5, 10})
    for (int nph : {10, 100}) {
      const fs::path enc =
          out / ("encode_N" + std::to_string(n) + "_nph" + std::to_string(nph) + ".csv");
      REQUIRE(fs::exists(enc));
      CHECK(data_lines(enc).size() == 1 + 4 * 50);
    }
  REQUIRE(fs::exists(out / "ser_grid.json"));
  const json j = json::parse(read_file(out / "ser_grid.json"));
  REQUIRE(j["grid"].size() == 6);
  for (const auto& cell : j["grid"]) {
    CHECK(cell["n_trials"].get<long long>() == 2000);
    CHECK(cell["ser"].get<double>() >= 0.0);
  }
  CHECK(j["orderings"].contains("ser_decreasing_in_N_at_nph10"));
  CHECK(j["orderings"].contains("ser_lower_at_nph100"));
}
