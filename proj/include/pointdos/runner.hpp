#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "pointdos/dos.hpp"
#include "pointdos/sites.hpp"

namespace pointdos {

inline constexpr const char* kToolVersion = "pointdos 0.1.0";

struct EnergyGrid {
  double I_min = -9.0;
  double I_max = -4.0;
  int grid_points = 21;
  std::vector<double> eps_schedule;  // defaulted when empty

  std::vector<double> grid() const;
};

struct MCConfig {
  int L = 12;
  int samples = 10000;
  std::uint64_t seed = 1;
};

struct Flags {
  bool d1_sign_flip = false;
  bool d2_sign_flip = false;
};

struct RunConfig {
  int dimension = 1;
  double kappa0 = 1.0;
  SingleSiteLaw law;
  EnergyGrid energy;
  Truncation truncation;
  MCConfig mc;
  Flags flags;
  std::string output_directory = "out";

  double diag_sign() const {
    if (dimension == 1 && flags.d1_sign_flip) return -1.0;
    if (dimension == 2 && flags.d2_sign_flip) return -1.0;
    return 1.0;
  }
  SpectralPoint point(Complex z) const {
    return SpectralPoint(z, dimension, kappa0, diag_sign());
  }
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& c);

nlohmann::json certificate_to_json(const GapCertificate& cert);
GapCertificate certificate_from_json(const nlohmann::json& j);

/// FNV-1a 64 content hash used for cache keys and payload checksums.
std::uint64_t content_hash(const std::string& s);

/// Exit codes: 0 success, 2 regime/gap violation, 3 numerical failure,
/// 4 configuration error.
int exit_code_for(ErrorCode c);

/// Executes one subcommand (kernels, gap-check, sweep, band, expand, dos,
/// mc-validate, conductivity); writes artifacts under out_dir and returns
/// the exit code.  Results are cached content-addressed by (subcommand,
/// config minus output section); hits re-emit byte-identical files.
int run_subcommand(const std::string& cmd, const std::string& config_path,
                   const std::string& out_dir, int threads,
                   std::optional<std::uint64_t> seed_override);

}  // namespace pointdos
