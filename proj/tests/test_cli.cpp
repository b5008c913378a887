#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pointdos/runner.hpp"

using namespace pointdos;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pointdos_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream out(p);
  out << j.dump(2);
  return p;
}

json base_config() {
  json j;
  j["dimension"] = 1;
  j["kappa0"] = 1.0;
  j["law"] = {{"kind", "uniform"}, {"alpha", -2.0}, {"beta", -1.0},
              {"delta", 0.08}, {"delta_prime", 0.04}};
  j["energy"] = {{"I_min", -1.2}, {"I_max", -0.8}, {"grid_points", 5}};
  j["truncation"] = {{"n_max", 6}, {"r_hop", 2}, {"lattice_radius", 4},
                     {"sum_tol", 1e-10}, {"budget", 100000000}};
  j["mc"] = {{"L", 8}, {"samples", 200}, {"seed", 4}};
  return j;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const RunConfig cfg = parse_config(base_config());
  CHECK(cfg.dimension == 1);
  CHECK(cfg.law.alpha == -2.0);
  CHECK(cfg.diag_sign() == 1.0);
  json flipped = base_config();
  flipped["flags"] = {{"d1_sign_flip", true}};
  CHECK(parse_config(flipped).diag_sign() == -1.0);

  json bad = base_config();
  bad["dimension"] = 5;
  CHECK_THROWS_AS((void)parse_config(bad), Error);
  bad = base_config();
  bad["energy"]["I_max"] = 1.0;
  CHECK_THROWS_AS((void)parse_config(bad), Error);
  bad = base_config();
  bad["law"]["kind"] = "gaussian";
  CHECK_THROWS_AS((void)parse_config(bad), Error);
}

TEST_CASE("certificate round trip") {
  const GapCertificate cert =
      pole_gap(SingleSiteLaw::uniform(-2.0, -1.0, 0.05, 0.02), 1, 1.0, -1.2, -0.8, 32);
  const GapCertificate back = certificate_from_json(certificate_to_json(cert));
  CHECK(back.delta_star == cert.delta_star);
  CHECK(back.s_sup == cert.s_sup);
  CHECK(back.small_hopping_ok == cert.small_hopping_ok);
  CHECK(back.z_region.re_lo == cert.z_region.re_lo);
  CHECK(back.q_region.im_max == cert.q_region.im_max);
  CHECK(back.d == cert.d);
}

TEST_CASE("sweep runs, caches, and reproduces bytes") {
  const fs::path dir = scratch_dir("sweep");
  const fs::path cfg = write_config(dir, base_config());
  const fs::path out1 = dir / "out1";
  const fs::path out2 = dir / "out2";
  CHECK(run_subcommand("sweep", cfg.string(), out1.string(), 2, std::nullopt) == 0);
  CHECK(run_subcommand("sweep", cfg.string(), out2.string(), 1, std::nullopt) == 0);
  const std::string a = slurp(out1 / "sweep.csv");
  const std::string b = slurp(out2 / "sweep.csv");
  CHECK(!a.empty());
  CHECK(a == b);  // thread count must not affect bytes

  // second run in the same directory hits the cache and re-emits identically
  fs::remove(out1 / "sweep.csv");
  CHECK(run_subcommand("sweep", cfg.string(), out1.string(), 1, std::nullopt) == 0);
  CHECK(slurp(out1 / "sweep.csv") == a);

  // corrupting the cache entry forces a recompute with identical output
  for (const auto& entry : fs::directory_iterator(out1 / "cache")) {
    std::ofstream(entry.path(), std::ios::binary) << "{\"checksum\":\"0\",\"payload\":\"{}\"}";
  }
  CHECK(run_subcommand("sweep", cfg.string(), out1.string(), 1, std::nullopt) == 0);
  CHECK(slurp(out1 / "sweep.csv") == a);

  // any relevant config change misses the cache
  json changed = base_config();
  changed["energy"]["grid_points"] = 7;
  const fs::path cfg2 = write_config(dir, changed);
  CHECK(run_subcommand("sweep", cfg2.string(), out1.string(), 1, std::nullopt) == 0);
  CHECK(slurp(out1 / "sweep.csv") != a);
}

TEST_CASE("gap-check artifact matches the worked example") {
  const fs::path dir = scratch_dir("gap");
  json j = base_config();
  j["dimension"] = 3;
  j["law"] = {{"kind", "uniform"}, {"alpha", -2.0}, {"beta", -1.0},
              {"delta", 0.0}, {"delta_prime", 0.0}};
  j["energy"] = {{"I_min", -9.0}, {"I_max", -4.0}, {"grid_points", 3}};
  const fs::path cfg = write_config(dir, j);
  CHECK(run_subcommand("gap-check", cfg.string(), (dir / "out").string(), 1, std::nullopt) == 0);
  const json rep = json::parse(slurp(dir / "out" / "gap_certificate.json"));
  const double ds = rep.at("certificate").at("delta_star").get<double>();
  CHECK(ds > 0.25);
  CHECK(ds < 0.262);
  CHECK(rep.at("certificate").at("small_hopping_ok").get<bool>());
  CHECK(rep.at("version").get<std::string>() == kToolVersion);
  CHECK(rep.contains("config"));
}

TEST_CASE("mc-validate with a point mass passes with zero variance") {
  const fs::path dir = scratch_dir("mcv");
  json j = base_config();
  j["law"] = {{"kind", "point_mass"}, {"alpha", -2.0}, {"beta", -2.0},
              {"delta", 0.05}, {"delta_prime", 0.02}};
  j["energy"] = {{"I_min", -1.0}, {"I_max", -1.0}, {"grid_points", 1}};
  j["mc"] = {{"L", 10}, {"samples", 8}, {"seed", 2}};
  const fs::path cfg = write_config(dir, j);
  CHECK(run_subcommand("mc-validate", cfg.string(), (dir / "out").string(), 1, std::nullopt) == 0);
  const json rep = json::parse(slurp(dir / "out" / "mc_validate.json"));
  CHECK(rep.at("mc").at("stderr").get<double>() == 0.0);
  CHECK(rep.at("pass").get<bool>());
}

TEST_CASE("error mapping to exit codes") {
  const fs::path dir = scratch_dir("err");
  // malformed JSON
  const fs::path broken = dir / "broken.json";
  std::ofstream(broken) << "{ not json";
  CHECK(run_subcommand("sweep", broken.string(), (dir / "o1").string(), 1, std::nullopt) == 4);
  // missing file
  CHECK(run_subcommand("sweep", (dir / "nope.json").string(), (dir / "o2").string(), 1,
                       std::nullopt) == 4);
  // unknown subcommand
  const fs::path cfg = write_config(dir, base_config());
  CHECK(run_subcommand("frobnicate", cfg.string(), (dir / "o3").string(), 1, std::nullopt) == 4);
  // gap violation: flipped d=1 law straddling its pole
  json j = base_config();
  j["flags"] = {{"d1_sign_flip", true}};
  j["law"] = {{"kind", "uniform"}, {"alpha", -2.1}, {"beta", -1.9},
              {"delta", 0.0}, {"delta_prime", 0.0}};
  j["energy"] = {{"I_min", -1.0}, {"I_max", -1.0}, {"grid_points", 1}};
  const fs::path cfg2 = write_config(dir, j);
  CHECK(run_subcommand("gap-check", cfg2.string(), (dir / "o4").string(), 1, std::nullopt) == 2);
}

TEST_CASE("seed override changes mc outputs deterministically") {
  const fs::path dir = scratch_dir("seed");
  json j = base_config();
  j["mc"] = {{"L", 6}, {"samples", 50}, {"seed", 1}};
  j["energy"] = {{"I_min", -1.0}, {"I_max", -1.0}, {"grid_points", 1}};
  const fs::path cfg = write_config(dir, j);
  CHECK(run_subcommand("mc-validate", cfg.string(), (dir / "a").string(), 1, 7) == 0);
  CHECK(run_subcommand("mc-validate", cfg.string(), (dir / "b").string(), 1, 7) == 0);
  CHECK(run_subcommand("mc-validate", cfg.string(), (dir / "c").string(), 1, 8) == 0);
  const std::string a = slurp(dir / "a" / "mc_validate.json");
  CHECK(a == slurp(dir / "b" / "mc_validate.json"));
  CHECK(a != slurp(dir / "c" / "mc_validate.json"));
}
