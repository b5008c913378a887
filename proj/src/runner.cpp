#include "pointdos/runner.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "pointdos/expansion.hpp"
#include "pointdos/kernels.hpp"
#include "pointdos/lattice.hpp"
#include "pointdos/principal.hpp"

namespace pointdos {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<double> EnergyGrid::grid() const {
  if (grid_points < 1) throw Error(ErrorCode::ConfigError, "grid_points must be >= 1");
  std::vector<double> g;
  for (int i = 0; i < grid_points; ++i)
    g.push_back(grid_points == 1 ? I_min
                                 : I_min + (I_max - I_min) * double(i) / (grid_points - 1));
  return g;
}

namespace {

double num_or(const json& j, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number()) throw Error(ErrorCode::ConfigError, std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

template <class T>
T field_or(const json& j, const char* key, T dflt) {
  if (!j.contains(key)) return dflt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigError, std::string("bad field ") + key);
  }
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig c;
  try {
    c.dimension = field_or<int>(j, "dimension", 1);
    if (c.dimension < 1 || c.dimension > 3)
      throw Error(ErrorCode::ConfigError, "dimension must be 1, 2 or 3");
    c.kappa0 = num_or(j, "kappa0", 1.0);
    if (!(c.kappa0 > 0.0)) throw Error(ErrorCode::ConfigError, "kappa0 must be positive");

    if (j.contains("law")) {
      const json& l = j.at("law");
      const std::string kind = field_or<std::string>(l, "kind", "uniform");
      const double alpha = num_or(l, "alpha", -2.0);
      const double beta = num_or(l, "beta", -1.0);
      const double delta = num_or(l, "delta", 0.0);
      const double delta_prime = num_or(l, "delta_prime", 0.0);
      if (kind == "uniform")
        c.law = SingleSiteLaw::uniform(alpha, beta, delta, delta_prime);
      else if (kind == "point_mass")
        c.law = SingleSiteLaw::point_mass(alpha, delta, delta_prime);
      else
        throw Error(ErrorCode::ConfigError, "law.kind must be uniform or point_mass");
    }
    if (j.contains("energy")) {
      const json& e = j.at("energy");
      c.energy.I_min = num_or(e, "I_min", c.energy.I_min);
      c.energy.I_max = num_or(e, "I_max", c.energy.I_max);
      c.energy.grid_points = field_or<int>(e, "grid_points", c.energy.grid_points);
      if (e.contains("eps_schedule"))
        c.energy.eps_schedule = e.at("eps_schedule").get<std::vector<double>>();
      if (!(c.energy.I_min <= c.energy.I_max && c.energy.I_max < 0.0))
        throw Error(ErrorCode::ConfigError, "energy interval must satisfy I_min <= I_max < 0");
    }
    if (j.contains("truncation")) {
      const json& t = j.at("truncation");
      c.truncation.n_max = field_or<int>(t, "n_max", c.truncation.n_max);
      c.truncation.r_hop = field_or<int>(t, "r_hop", c.truncation.r_hop);
      c.truncation.lattice_radius =
          field_or<int>(t, "lattice_radius", c.truncation.lattice_radius);
      c.truncation.sum_tol = num_or(t, "sum_tol", c.truncation.sum_tol);
      c.truncation.budget = field_or<std::uint64_t>(t, "budget", c.truncation.budget);
      if (c.truncation.n_max < 0 || c.truncation.r_hop < 1)
        throw Error(ErrorCode::ConfigError, "truncation needs n_max >= 0, r_hop >= 1");
    }
    if (j.contains("mc")) {
      const json& m = j.at("mc");
      c.mc.L = field_or<int>(m, "L", c.mc.L);
      c.mc.samples = field_or<int>(m, "samples", c.mc.samples);
      c.mc.seed = field_or<std::uint64_t>(m, "seed", c.mc.seed);
      if (c.mc.L < 0 || c.mc.samples < 1)
        throw Error(ErrorCode::ConfigError, "mc needs L >= 0, samples >= 1");
    }
    if (j.contains("flags")) {
      const json& f = j.at("flags");
      c.flags.d1_sign_flip = field_or<bool>(f, "d1_sign_flip", false);
      c.flags.d2_sign_flip = field_or<bool>(f, "d2_sign_flip", false);
    }
    if (j.contains("output")) {
      c.output_directory = field_or<std::string>(j.at("output"), "directory", c.output_directory);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config parse: ") + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& c) {
  json j;
  j["dimension"] = c.dimension;
  j["kappa0"] = c.kappa0;
  j["law"] = {{"kind", c.law.kind == SingleSiteLaw::Kind::uniform ? "uniform" : "point_mass"},
              {"alpha", c.law.alpha},
              {"beta", c.law.beta},
              {"delta", c.law.delta},
              {"delta_prime", c.law.delta_prime}};
  j["energy"] = {{"I_min", c.energy.I_min},
                 {"I_max", c.energy.I_max},
                 {"grid_points", c.energy.grid_points},
                 {"eps_schedule", c.energy.eps_schedule}};
  j["truncation"] = {{"n_max", c.truncation.n_max},
                     {"r_hop", c.truncation.r_hop},
                     {"lattice_radius", c.truncation.lattice_radius},
                     {"sum_tol", c.truncation.sum_tol},
                     {"budget", c.truncation.budget}};
  j["mc"] = {{"L", c.mc.L}, {"samples", c.mc.samples}, {"seed", c.mc.seed}};
  j["flags"] = {{"d1_sign_flip", c.flags.d1_sign_flip}, {"d2_sign_flip", c.flags.d2_sign_flip}};
  j["output"] = {{"directory", c.output_directory}};
  return j;
}

json certificate_to_json(const GapCertificate& cert) {
  json j;
  j["delta_star"] = cert.delta_star;
  j["z_region"] = {{"re_lo", cert.z_region.re_lo},
                   {"re_hi", cert.z_region.re_hi},
                   {"im_max", cert.z_region.im_max}};
  j["q_region"] = {{"re_lo", cert.q_region.re_lo},
                   {"re_hi", cert.q_region.re_hi},
                   {"im_max", cert.q_region.im_max}};
  j["grid_resolution"] = cert.grid_resolution;
  j["small_hopping_ok"] = cert.small_hopping_ok;
  j["s_sup"] = cert.s_sup;
  j["lipschitz_margin"] = cert.lipschitz_margin;
  j["d"] = cert.d;
  j["kappa0"] = cert.kappa0;
  j["diag_sign"] = cert.diag_sign;
  return j;
}

GapCertificate certificate_from_json(const json& j) {
  GapCertificate cert;
  cert.delta_star = j.at("delta_star").get<double>();
  cert.z_region = {j.at("z_region").at("re_lo").get<double>(),
                   j.at("z_region").at("re_hi").get<double>(),
                   j.at("z_region").at("im_max").get<double>()};
  cert.q_region = {j.at("q_region").at("re_lo").get<double>(),
                   j.at("q_region").at("re_hi").get<double>(),
                   j.at("q_region").at("im_max").get<double>()};
  cert.grid_resolution = j.at("grid_resolution").get<int>();
  cert.small_hopping_ok = j.at("small_hopping_ok").get<bool>();
  cert.s_sup = j.at("s_sup").get<double>();
  cert.lipschitz_margin = j.at("lipschitz_margin").get<double>();
  cert.d = j.at("d").get<int>();
  cert.kappa0 = j.at("kappa0").get<double>();
  cert.diag_sign = j.at("diag_sign").get<double>();
  return cert;
}

std::uint64_t content_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::RegimeViolation:
    case ErrorCode::GapViolation: return 2;
    case ErrorCode::ConfigError: return 4;
    default: return 3;
  }
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

char hex_digit(std::uint64_t v) { return "0123456789abcdef"[v & 0xf]; }

std::string hex64(std::uint64_t v) {
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[std::size_t(i)] = hex_digit(v);
    v >>= 4;
  }
  return s;
}

// Artifacts are built as strings first so cache hits re-emit identical bytes.
struct Artifacts {
  std::map<std::string, std::string> files;  // name -> content
};

json meta_block(const RunConfig& cfg) {
  json m;
  m["version"] = kToolVersion;
  m["config"] = config_to_json(cfg);
  m["config_hash"] = hex64(content_hash(config_to_json(cfg).dump()));
  return m;
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
      } catch (...) {
        errors[std::size_t(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

GapCertificate make_certificate(const RunConfig& cfg) {
  return pole_gap(cfg.law, cfg.dimension, cfg.kappa0, cfg.energy.I_min, cfg.energy.I_max, 48,
                  cfg.diag_sign());
}

Artifacts cmd_kernels(const RunConfig& cfg, int) {
  Artifacts art;
  std::ostringstream csv;
  csv << "E,r,G0_re,G0_im,renorm_re,renorm_im,dz_re,dz_im\n";
  for (double E : cfg.energy.grid()) {
    const SpectralPoint p = cfg.point(Complex(E, 0.0));
    const Complex rho = renorm_diag(p);
    for (int r = 0; r <= 3; ++r) {
      const Complex g = r == 0 ? Complex(0.0) : free_kernel(p, double(r));
      const Complex dg = dz_free_kernel(p, double(r));
      csv << fmt(E) << ',' << r << ',' << fmt(g.real()) << ',' << fmt(g.imag()) << ','
          << fmt(rho.real()) << ',' << fmt(rho.imag()) << ',' << fmt(dg.real()) << ','
          << fmt(dg.imag()) << '\n';
    }
  }
  art.files["kernels.csv"] = csv.str();
  json rep = meta_block(cfg);
  art.files["kernels.json"] = rep.dump(2) + "\n";
  return art;
}

Artifacts cmd_gap_check(const RunConfig& cfg, int) {
  Artifacts art;
  const GapCertificate cert = make_certificate(cfg);
  json rep = meta_block(cfg);
  rep["certificate"] = certificate_to_json(cert);
  art.files["gap_certificate.json"] = rep.dump(2) + "\n";
  return art;
}

Artifacts cmd_sweep(const RunConfig& cfg, int threads) {
  Artifacts art;
  const GapCertificate cert = make_certificate(cfg);
  const std::vector<double> grid = cfg.energy.grid();
  struct Row {
    double E, S, tail, ratio;
    bool small;
  };
  std::vector<Row> rows(grid.size());
  parallel_for(int(grid.size()), threads, [&](int i) {
    const SpectralPoint p = cfg.point(Complex(grid[std::size_t(i)], 0.0));
    const SchurCertificate sc = schur_certificate(p, cert.delta_star, cfg.truncation.sum_tol);
    rows[std::size_t(i)] = {grid[std::size_t(i)], sc.sum_value, sc.sum_tail, sc.ratio,
                            sc.small_hopping};
  });
  std::ostringstream csv;
  csv << "E,S_value,S_tail,schur_ratio,small_hopping\n";
  for (const Row& r : rows)
    csv << fmt(r.E) << ',' << fmt(r.S) << ',' << fmt(r.tail) << ',' << fmt(r.ratio) << ','
        << (r.small ? 1 : 0) << '\n';
  art.files["sweep.csv"] = csv.str();
  json rep = meta_block(cfg);
  rep["certificate"] = certificate_to_json(cert);
  art.files["sweep.json"] = rep.dump(2) + "\n";
  return art;
}

Artifacts cmd_band(const RunConfig& cfg, int threads) {
  Artifacts art;
  const double ds = cfg.diag_sign();
  std::vector<double> lambdas;
  if (cfg.law.kind == SingleSiteLaw::Kind::point_mass) {
    lambdas = {cfg.law.alpha};
  } else {
    lambdas = {cfg.law.alpha, 0.5 * (cfg.law.alpha + cfg.law.beta), cfg.law.beta};
  }
  json bands = json::array();
  std::vector<BandWindow> wins;
  for (double q : lambdas) {
    const BandWindow w = band_window(cfg.dimension, q, cfg.kappa0, 33, ds);
    wins.push_back(w);
    bands.push_back({{"lambda0", q},
                     {"E_minus", w.E_minus},
                     {"E_plus", w.E_plus},
                     {"theta_samples", w.theta_samples}});
  }
  const GapCertificate cert = make_certificate(cfg);

  const std::vector<double> grid = cfg.energy.grid();
  struct Row {
    double E, ratio;
    bool in_band, certified;
  };
  std::vector<Row> rows(grid.size());
  parallel_for(int(grid.size()), threads, [&](int i) {
    const double E = grid[std::size_t(i)];
    const SpectralPoint p = cfg.point(Complex(E, 0.0));
    const SchurCertificate sc = schur_certificate(p, cert.delta_star, cfg.truncation.sum_tol);
    bool in_band = false;
    for (const BandWindow& w : wins)
      if (E >= w.E_minus && E <= w.E_plus) in_band = true;
    rows[std::size_t(i)] = {E, sc.ratio, in_band, sc.small_hopping};
  });
  std::ostringstream csv;
  csv << "E,schur_ratio,small_hopping,in_band,overlap\n";
  bool any_overlap = false;
  for (const Row& r : rows) {
    const bool overlap = r.in_band && r.certified;
    any_overlap = any_overlap || overlap;
    csv << fmt(r.E) << ',' << fmt(r.ratio) << ',' << (r.certified ? 1 : 0) << ','
        << (r.in_band ? 1 : 0) << ',' << (overlap ? 1 : 0) << '\n';
  }
  art.files["regime_map.csv"] = csv.str();
  json rep = meta_block(cfg);
  rep["bands"] = bands;
  rep["certificate"] = certificate_to_json(cert);
  rep["band_certified_overlap"] = any_overlap;
  art.files["band.json"] = rep.dump(2) + "\n";
  return art;
}

Artifacts cmd_expand(const RunConfig& cfg, int) {
  Artifacts art;
  const GapCertificate cert = make_certificate(cfg);
  const double E_mid = 0.5 * (cfg.energy.I_min + cfg.energy.I_max);
  const SpectralPoint p = cfg.point(Complex(E_mid, 0.0));
  std::ostringstream csv;
  csv << "n,F_re,F_im,tail_bound,hop_tail,n_max,r_hop\n";
  for (int n = 0; n <= cfg.truncation.lattice_radius; ++n) {
    const ExpansionResult F = averaged_kernel_F({n, 0, 0}, cfg.law, p, cfg.truncation.n_max,
                                                cfg.truncation.r_hop, cfg.truncation.budget, cert);
    csv << n << ',' << fmt(F.value.real()) << ',' << fmt(F.value.imag()) << ','
        << fmt(F.tail_bound) << ',' << fmt(F.hop_tail) << ',' << F.n_max << ',' << F.r_hop
        << '\n';
  }
  art.files["expand.csv"] = csv.str();
  json rep = meta_block(cfg);
  rep["certificate"] = certificate_to_json(cert);
  rep["E"] = E_mid;
  art.files["expand.json"] = rep.dump(2) + "\n";
  return art;
}

Artifacts cmd_dos(const RunConfig& cfg, int threads) {
  Artifacts art;
  const GapCertificate cert = make_certificate(cfg);
  const std::vector<double> eps =
      cfg.energy.eps_schedule.empty() ? default_eps_schedule() : cfg.energy.eps_schedule;
  const std::vector<double> grid = cfg.energy.grid();
  struct Row {
    double E, re, im, n, tail, err;
  };
  std::vector<Row> rows(grid.size());
  parallel_for(int(grid.size()), threads, [&](int i) {
    const double E = grid[std::size_t(i)];
    const DosPoint dp = dos_density(E, cfg.law, eps, cfg.truncation, cert);
    const GreenDiffResult g = averaged_green_diff(cfg.point(Complex(E, eps.back())), cfg.law,
                                                  cfg.truncation, cert);
    rows[std::size_t(i)] = {E,    g.value.real(),          g.value.imag(),
                            dp.n, g.tail_bound, dp.extrapolation_error};
  });
  std::ostringstream csv;
  csv << "E,Re,Im,n,tail_bound,extrap_err\n";
  for (const Row& r : rows)
    csv << fmt(r.E) << ',' << fmt(r.re) << ',' << fmt(r.im) << ',' << fmt(r.n) << ','
        << fmt(r.tail) << ',' << fmt(r.err) << '\n';
  art.files["dos.csv"] = csv.str();
  json rep = meta_block(cfg);
  rep["certificate"] = certificate_to_json(cert);
  rep["eps_schedule"] = eps;
  art.files["dos.json"] = rep.dump(2) + "\n";
  return art;
}

Artifacts cmd_mc_validate(const RunConfig& cfg, int) {
  Artifacts art;
  const GapCertificate cert = make_certificate(cfg);
  const double E_mid = 0.5 * (cfg.energy.I_min + cfg.energy.I_max);
  const SpectralPoint p = cfg.point(Complex(E_mid, 0.0));
  const ExpansionResult F = averaged_kernel_F({0, 0, 0}, cfg.law, p, cfg.truncation.n_max,
                                              cfg.truncation.r_hop, cfg.truncation.budget, cert);
  MCOptions mo;
  mo.L = cfg.mc.L;
  mo.samples = cfg.mc.samples;
  mo.seed = cfg.mc.seed;
  const MCResult mc = mc_average(cfg.law, p, {{0, 0, 0}}, mo);
  const double edge = finite_box_bound(p, pointwise_gap(cfg.law, p), cfg.mc.L, {0, 0, 0});
  const double dev = std::abs(mc.mean[0] - F.value);
  const double allowed = 3.0 * mc.stderrs[0] + F.tail_bound + edge;

  json rep = meta_block(cfg);
  rep["certificate"] = certificate_to_json(cert);
  rep["E"] = E_mid;
  rep["expansion"] = {{"re", F.value.real()},
                      {"im", F.value.imag()},
                      {"tail_bound", F.tail_bound},
                      {"hop_tail", F.hop_tail}};
  rep["mc"] = {{"mean_re", mc.mean[0].real()},
               {"mean_im", mc.mean[0].imag()},
               {"stderr", mc.stderrs[0]},
               {"samples", mc.samples},
               {"singular", mc.singular}};
  rep["edge_bound"] = edge;
  rep["deviation"] = dev;
  rep["allowed"] = allowed;
  rep["pass"] = dev <= allowed;
  art.files["mc_validate.json"] = rep.dump(2) + "\n";
  return art;
}

Artifacts cmd_conductivity(const RunConfig& cfg, int) {
  Artifacts art;
  const GapCertificate cert = make_certificate(cfg);
  const double E_mid = 0.5 * (cfg.energy.I_min + cfg.energy.I_max);
  std::vector<double> nu;
  for (int i = -4; i <= 4; ++i) nu.push_back(0.005 * i);
  Truncation tr = cfg.truncation;
  tr.n_max = std::min(tr.n_max, 6);
  tr.r_hop = std::min(tr.r_hop, 2);
  const ConductivityProbe probe = conductivity_probe(E_mid, nu, 0.05, cfg.law, tr, cert);
  std::ostringstream csv;
  csv << "nu,F2_re,F2_im\n";
  for (std::size_t i = 0; i < probe.nu.size(); ++i)
    csv << fmt(probe.nu[i]) << ',' << fmt(probe.F2[i].real()) << ',' << fmt(probe.F2[i].imag())
        << '\n';
  art.files["conductivity.csv"] = csv.str();
  json rep = meta_block(cfg);
  rep["certificate"] = certificate_to_json(cert);
  rep["E"] = E_mid;
  rep["eps"] = 0.05;
  rep["fit_residual"] = probe.fit_residual;
  rep["scale"] = probe.scale;
  art.files["conductivity.json"] = rep.dump(2) + "\n";
  return art;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

int run_subcommand(const std::string& cmd, const std::string& config_path,
                   const std::string& out_dir, int threads,
                   std::optional<std::uint64_t> seed_override) {
  try {
    RunConfig cfg = load_config(config_path);
    if (seed_override) cfg.mc.seed = *seed_override;
    const fs::path out = out_dir.empty() ? fs::path(cfg.output_directory) : fs::path(out_dir);
    fs::create_directories(out);
    fs::create_directories(out / "cache");

    json slice = config_to_json(cfg);
    slice.erase("output");
    const std::string cache_key = hex64(content_hash(cmd + "\n" + slice.dump()));
    const fs::path cache_file = out / "cache" / (cache_key + ".json");

    Artifacts art;
    bool from_cache = false;
    if (fs::exists(cache_file)) {
      try {
        std::ifstream in(cache_file, std::ios::binary);
        json entry;
        in >> entry;
        const std::string payload = entry.at("payload").get<std::string>();
        if (hex64(content_hash(payload)) == entry.at("checksum").get<std::string>()) {
          const json files = json::parse(payload);
          for (const auto& [name, content] : files.items())
            art.files[name] = content.get<std::string>();
          from_cache = true;
        }
      } catch (...) {
        from_cache = false;  // corrupt entry: recompute
      }
    }

    if (!from_cache) {
      if (cmd == "kernels")
        art = cmd_kernels(cfg, threads);
      else if (cmd == "gap-check")
        art = cmd_gap_check(cfg, threads);
      else if (cmd == "sweep")
        art = cmd_sweep(cfg, threads);
      else if (cmd == "band")
        art = cmd_band(cfg, threads);
      else if (cmd == "expand")
        art = cmd_expand(cfg, threads);
      else if (cmd == "dos")
        art = cmd_dos(cfg, threads);
      else if (cmd == "mc-validate")
        art = cmd_mc_validate(cfg, threads);
      else if (cmd == "conductivity")
        art = cmd_conductivity(cfg, threads);
      else
        throw Error(ErrorCode::ConfigError, "unknown subcommand " + cmd);
      json files;
      for (const auto& [name, content] : art.files) files[name] = content;
      const std::string payload = files.dump();
      json entry;
      entry["checksum"] = hex64(content_hash(payload));
      entry["payload"] = payload;
      write_file(cache_file, entry.dump());
    }

    for (const auto& [name, content] : art.files) write_file(out / name, content);
    return 0;
  } catch (const Error& e) {
    json err;
    err["error"] = error_code_name(e.code());
    err["message"] = e.what();
    std::cerr << err.dump() << std::endl;
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    json err;
    err["error"] = "Unknown";
    err["message"] = e.what();
    std::cerr << err.dump() << std::endl;
    return 3;
  }
}

}  // namespace pointdos
