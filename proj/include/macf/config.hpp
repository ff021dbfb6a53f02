#pragma once

// JSON run configuration. Sections and keys are addressed by dotted paths
// ("scheme.N", "kernel.r"); unknown keys are rejected, missing optional keys
// take the defaults listed in default_config().

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "macf/model.hpp"
#include "macf/scheme.hpp"

namespace macf {

struct EnsembleSection {
  int replicates = 64;
};

struct ConvergeSection {
  std::string axis = "m";
  std::vector<double> levels{4, 8, 16};
  int replicates = 1;  // distances are RMS over this many noise replicates
};

struct CoupleSection {
  nlohmann::json b = nlohmann::json::object();  // overrides of scheme.* for the second run
  std::optional<std::uint64_t> seed_b;           // unset: shared noise
  int samples = 32;
  int pairs = 1;
  bool baseline = false;  // also run with independent noise and compare
};

struct MgtestSection {
  int replicates = 1000;
  std::vector<double> times;  // empty: `intervals` equal intervals
  int intervals = 4;
  bool reuse_noise = false;
};

struct SemigroupSection {
  std::vector<double> deltas{1e-2, 1e-3, 1e-4};
  int probes = 64;
  std::vector<double> m_values{0.1, 1.0, 10.0};
  double t = 0.05;
  int steps = 64;
  int commutator_probes = 8;
};

struct RunConfig {
  nlohmann::json resolved;       // every key, defaults filled in
  std::set<std::string> sections;  // top-level sections present in the source
  SchemeConfig scheme;
  std::vector<double> sample_times;
  std::uint64_t seed = 1;
  std::uint32_t replicate = 0;
  int threads = 0;
  bool write_checkpoints = false;
  AssumptionCheckOptions assumptions;
  EnsembleSection ensemble;
  ConvergeSection converge;
  CoupleSection couple;
  MgtestSection mgtest;
  SemigroupSection semigroup;

  /// Throws ConfigError unless `section` was given in the source config.
  void require_section(const std::string& section) const;
};

/// Schema with defaults; null marks required keys.
const nlohmann::json& default_config();

/// Validates and resolves a config (or a manifest holding one under "config").
RunConfig load_config(const nlohmann::json& source);
RunConfig load_config_file(const std::string& path);

/// Rebuilds the typed config after a change to `resolved`.
RunConfig reload(const nlohmann::json& resolved, const std::set<std::string>& sections);

/// Applies scheme.* style overrides ({"n": 64, "N": 128}) to a scheme config.
SchemeConfig apply_scheme_overrides(SchemeConfig cfg, const nlohmann::json& overrides, const std::string& prefix);

}  // namespace macf
