#include "macf/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "macf/checkpoint.hpp"
#include "macf/experiments.hpp"

namespace macf {

using nlohmann::json;

const json& default_config() {
  static const json defaults = json::parse(R"({
    "scheme": {"d": null, "N": null, "T": null, "n": null, "m": null, "eta": null, "ell": null},
    "initial": {"type": "cosine", "amplitude": 0.1, "mean": 0.0, "k": [1, 0, 0], "path": ""},
    "sampling": {"times": 16},
    "potential": {"type": "double_well", "coeffs": []},
    "mobility": {"type": "standard", "value": 1.0, "numerator": [], "denominator": []},
    "kernel": {"r": 1.5, "amplitude": 1.0},
    "noise": {"seed": 1, "replicate": 0},
    "runtime": {"threads": 0},
    "output": {"checkpoints": false},
    "assumptions": {"lo": -20.0, "hi": 20.0, "samples": 100000, "grid": 64},
    "ensemble": {"replicates": 64},
    "converge": {"axis": "m", "levels": [4, 8, 16], "replicates": 1},
    "couple": {"b": {}, "seed_b": null, "samples": 32, "pairs": 1, "baseline": false},
    "mgtest": {"replicates": 1000, "times": [], "intervals": 4, "reuse_noise": false},
    "semigroup": {"deltas": [0.01, 0.001, 0.0001], "probes": 64, "m_values": [0.1, 1.0, 10.0],
                  "t": 0.05, "steps": 64, "commutator_probes": 8}
  })");
  return defaults;
}

namespace {

const std::set<std::string> kRequired{"scheme.d", "scheme.N", "scheme.T", "scheme.n",
                                      "scheme.m", "scheme.eta", "scheme.ell"};
// Keys whose value may be a number or a list.
const std::set<std::string> kNumberOrList{"sampling.times"};
// Keys whose default is null but which are optional.
const std::set<std::string> kOptional{"couple.seed_b"};
const std::set<std::string> kScheme{"d", "N", "T", "n", "m", "eta", "ell"};

std::string type_name(const json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "list";
  if (v.is_object()) return "object";
  return "null";
}

bool compatible(const json& def, const json& v) {
  if (def.is_null()) return v.is_number();
  if (def.is_number()) return v.is_number();
  return type_name(def) == type_name(v);
}

void merge(json& target, const json& source, const json& schema, const std::string& prefix) {
  for (auto it = source.begin(); it != source.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!schema.contains(it.key())) throw ConfigError(key, "unknown key");
    const json& def = schema.at(it.key());
    const json& v = it.value();
    if (key == "couple.b") {
      if (!v.is_object()) throw ConfigError(key, "expected an object of scheme overrides");
      for (auto o = v.begin(); o != v.end(); ++o) {
        if (!kScheme.count(o.key())) throw ConfigError(key + "." + o.key(), "unknown key");
        if (!o.value().is_number()) throw ConfigError(key + "." + o.key(), "expected a number");
      }
      target[it.key()] = v;
      continue;
    }
    if (def.is_object()) {
      if (!v.is_object()) throw ConfigError(key, "expected a section (object), got " + type_name(v));
      merge(target[it.key()], v, def, key);
      continue;
    }
    if (kNumberOrList.count(key)) {
      if (!v.is_number() && !v.is_array()) throw ConfigError(key, "expected a number or a list");
    } else if (kOptional.count(key)) {
      if (!v.is_null() && !v.is_number()) throw ConfigError(key, "expected a number");
    } else if (!compatible(def, v)) {
      throw ConfigError(key, "expected a " + (def.is_null() ? std::string("number") : type_name(def)) +
                                 ", got " + type_name(v));
    }
    target[it.key()] = v;
  }
}

void require_present(const json& resolved) {
  for (const auto& key : kRequired) {
    const auto dot = key.find('.');
    const json& v = resolved.at(key.substr(0, dot)).at(key.substr(dot + 1));
    if (v.is_null()) throw ConfigError(key, "missing required key");
  }
}

template <typename T>
T get(const json& resolved, const std::string& key) {
  const auto dot = key.find('.');
  const json& v = resolved.at(key.substr(0, dot)).at(key.substr(dot + 1));
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

int get_int(const json& resolved, const std::string& key) {
  const double v = get<double>(resolved, key);
  if (v != std::floor(v) || std::abs(v) > 2e9) throw ConfigError(key, "expected an integer");
  return static_cast<int>(v);
}

std::vector<double> get_list(const json& resolved, const std::string& key) {
  const auto dot = key.find('.');
  const json& v = resolved.at(key.substr(0, dot)).at(key.substr(dot + 1));
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(key, "expected a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Model build_model(const json& r) {
  Model model;
  const auto potential = get<std::string>(r, "potential.type");
  try {
    if (potential == "double_well") {
      model.potential = Potential::double_well();
    } else if (potential == "polynomial") {
      model.potential = Potential::polynomial(get_list(r, "potential.coeffs"));
    } else if (potential == "zero") {
      model.potential = Potential::zero();
    } else {
      throw ConfigError("potential.type", "unknown potential '" + potential + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("potential.coeffs", e.what());
  }
  const auto mobility = get<std::string>(r, "mobility.type");
  try {
    if (mobility == "standard") {
      model.mobility = Mobility::standard();
    } else if (mobility == "constant") {
      model.mobility = Mobility::constant(get<double>(r, "mobility.value"));
    } else if (mobility == "rational") {
      model.mobility =
          Mobility::rational(get_list(r, "mobility.numerator"), get_list(r, "mobility.denominator"));
    } else {
      throw ConfigError("mobility.type", "unknown mobility '" + mobility + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("mobility", e.what());
  }
  model.kernel.decay_exponent = get<double>(r, "kernel.r");
  model.kernel.amplitude = get<double>(r, "kernel.amplitude");
  if (model.kernel.decay_exponent < 0.0) throw ConfigError("kernel.r", "must be >= 0");
  return model;
}

SpectralField build_initial(const json& r, int dim, int grid) {
  const auto type = get<std::string>(r, "initial.type");
  if (type == "zero") return SpectralField(dim, grid);
  if (type == "cosine") {
    const auto k = get_list(r, "initial.k");
    if (k.size() != 3) throw ConfigError("initial.k", "expected three integers");
    Wavevector kv{static_cast<int>(k[0]), static_cast<int>(k[1]), static_cast<int>(k[2])};
    for (int a = dim; a < 3; ++a) {
      if (kv[a] != 0) throw ConfigError("initial.k", "component beyond the dimension is nonzero");
    }
    const double a = get<double>(r, "initial.amplitude");
    SpectralField f = SpectralField::mode(dim, grid, kv, {0.5 * a, 0.0});
    if (kv == Wavevector{0, 0, 0}) f = SpectralField::constant(dim, grid, a);
    f.coeffs()[0] += get<double>(r, "initial.mean");
    return f;
  }
  if (type == "checkpoint") {
    const auto path = get<std::string>(r, "initial.path");
    if (path.empty()) throw ConfigError("initial.path", "required for a checkpoint initial datum");
    try {
      return load_checkpoint(path);
    } catch (const std::exception& e) {
      throw ConfigError("initial.path", e.what());
    }
  }
  throw ConfigError("initial.type", "unknown initial datum '" + type + "'");
}

}  // namespace

void RunConfig::require_section(const std::string& section) const {
  if (!sections.count(section)) throw ConfigError(section, "section required by this subcommand is missing");
}

SchemeConfig apply_scheme_overrides(SchemeConfig cfg, const json& overrides, const std::string& prefix) {
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    const std::string key = prefix + "." + it.key();
    const double v = it.value().get<double>();
    auto integer = [&] {
      if (v != std::floor(v)) throw ConfigError(key, "expected an integer");
      return static_cast<int>(v);
    };
    if (it.key() == "d") cfg.dim = integer();
    else if (it.key() == "N") cfg.grid = integer();
    else if (it.key() == "T") cfg.horizon = v;
    else if (it.key() == "n") cfg.outer_steps = integer();
    else if (it.key() == "m") cfg.inner_steps = integer();
    else if (it.key() == "eta") cfg.eta = v;
    else if (it.key() == "ell") cfg.ell = v;
    else throw ConfigError(key, "unknown key");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    const auto dot = e.key().find('.');
    throw ConfigError(dot == std::string::npos ? prefix : prefix + e.key().substr(dot), e.detail());
  }
  return cfg;
}

RunConfig reload(const json& resolved, const std::set<std::string>& sections) {
  const json& r = resolved;
  RunConfig cfg;
  cfg.resolved = resolved;
  cfg.sections = sections;
  require_present(r);

  SchemeConfig& s = cfg.scheme;
  s.dim = get_int(r, "scheme.d");
  s.grid = get_int(r, "scheme.N");
  s.horizon = get<double>(r, "scheme.T");
  s.outer_steps = get_int(r, "scheme.n");
  s.inner_steps = get_int(r, "scheme.m");
  s.eta = get<double>(r, "scheme.eta");
  s.ell = get<double>(r, "scheme.ell");
  if (s.dim < 1 || s.dim > 3) throw ConfigError("scheme.d", "must be 1, 2 or 3");
  if (s.grid <= 0 || s.grid % 2 != 0) throw ConfigError("scheme.N", "must be positive and even");
  s.model = build_model(r);
  s.initial = build_initial(r, s.dim, s.grid);
  s.validate();

  const json& times = r.at("sampling").at("times");
  if (times.is_array()) {
    cfg.sample_times = get_list(r, "sampling.times");
  } else {
    const int count = get_int(r, "sampling.times");
    if (count < 1) throw ConfigError("sampling.times", "count must be >= 1");
    cfg.sample_times = uniform_times(s.horizon, count);
  }
  sample_steps(s, cfg.sample_times);

  const double seed = get<double>(r, "noise.seed");
  if (seed < 0 || seed != std::floor(seed)) throw ConfigError("noise.seed", "expected a non-negative integer");
  cfg.seed = static_cast<std::uint64_t>(seed);
  const int replicate = get_int(r, "noise.replicate");
  if (replicate < 0) throw ConfigError("noise.replicate", "must be >= 0");
  cfg.replicate = static_cast<std::uint32_t>(replicate);
  cfg.threads = get_int(r, "runtime.threads");
  if (cfg.threads < 0) throw ConfigError("runtime.threads", "must be >= 0 (0: all cores)");
  cfg.write_checkpoints = get<bool>(r, "output.checkpoints");

  cfg.assumptions.lo = get<double>(r, "assumptions.lo");
  cfg.assumptions.hi = get<double>(r, "assumptions.hi");
  cfg.assumptions.samples = get_int(r, "assumptions.samples");
  cfg.assumptions.grid = get_int(r, "assumptions.grid");
  cfg.assumptions.dim = s.dim;
  if (!(cfg.assumptions.hi > cfg.assumptions.lo)) throw ConfigError("assumptions.hi", "must exceed assumptions.lo");
  if (cfg.assumptions.samples < 3) throw ConfigError("assumptions.samples", "must be >= 3");

  cfg.ensemble.replicates = get_int(r, "ensemble.replicates");
  if (cfg.ensemble.replicates < 2) throw ConfigError("ensemble.replicates", "must be >= 2");

  cfg.converge.axis = get<std::string>(r, "converge.axis");
  parse_axis(cfg.converge.axis);
  cfg.converge.levels = get_list(r, "converge.levels");
  cfg.converge.replicates = get_int(r, "converge.replicates");
  if (cfg.converge.replicates < 1) throw ConfigError("converge.replicates", "must be >= 1");

  cfg.couple.b = r.at("couple").at("b");
  if (!r.at("couple").at("seed_b").is_null()) {
    const double sb = get<double>(r, "couple.seed_b");
    if (sb < 0 || sb != std::floor(sb)) throw ConfigError("couple.seed_b", "expected a non-negative integer");
    cfg.couple.seed_b = static_cast<std::uint64_t>(sb);
  }
  cfg.couple.samples = get_int(r, "couple.samples");
  cfg.couple.pairs = get_int(r, "couple.pairs");
  cfg.couple.baseline = get<bool>(r, "couple.baseline");
  if (cfg.couple.samples < 1) throw ConfigError("couple.samples", "must be >= 1");
  if (cfg.couple.pairs < 1) throw ConfigError("couple.pairs", "must be >= 1");

  cfg.mgtest.replicates = get_int(r, "mgtest.replicates");
  cfg.mgtest.times = get_list(r, "mgtest.times");
  cfg.mgtest.intervals = get_int(r, "mgtest.intervals");
  cfg.mgtest.reuse_noise = get<bool>(r, "mgtest.reuse_noise");
  if (cfg.mgtest.replicates < 2) throw ConfigError("mgtest.replicates", "must be >= 2");
  if (cfg.mgtest.times.empty() && cfg.mgtest.intervals < 1) throw ConfigError("mgtest.intervals", "must be >= 1");

  cfg.semigroup.deltas = get_list(r, "semigroup.deltas");
  cfg.semigroup.probes = get_int(r, "semigroup.probes");
  cfg.semigroup.m_values = get_list(r, "semigroup.m_values");
  cfg.semigroup.t = get<double>(r, "semigroup.t");
  cfg.semigroup.steps = get_int(r, "semigroup.steps");
  cfg.semigroup.commutator_probes = get_int(r, "semigroup.commutator_probes");
  if (cfg.semigroup.probes < 16) throw ConfigError("semigroup.probes", "must be >= 16");
  if (cfg.semigroup.commutator_probes < 8) throw ConfigError("semigroup.commutator_probes", "must be >= 8");
  if (cfg.semigroup.steps < 1) throw ConfigError("semigroup.steps", "must be >= 1");
  if (cfg.semigroup.t < 0) throw ConfigError("semigroup.t", "must be >= 0");
  for (double d : cfg.semigroup.deltas) {
    if (!(d > 0)) throw ConfigError("semigroup.deltas", "every delta must be positive");
  }
  for (double m : cfg.semigroup.m_values) {
    if (!(m > 0)) throw ConfigError("semigroup.m_values", "every m must be positive");
  }
  return cfg;
}

RunConfig load_config(const json& source) {
  const json* body = &source;
  if (source.is_object() && source.contains("manifest")) {
    const json& m = source.at("manifest");
    if (!m.is_object() || !m.contains("config")) throw ConfigError("manifest.config", "manifest has no config");
    body = &m.at("config");
  }
  if (!body->is_object()) throw ConfigError("(root)", "config must be a JSON object");
  json resolved = default_config();
  merge(resolved, *body, default_config(), "");
  // A manifest's config is fully resolved; its section list says what the source had.
  std::set<std::string> sections;
  const json* listed = nullptr;
  if (source.contains("manifest") && source.at("manifest").contains("sections")) {
    listed = &source.at("manifest").at("sections");
  }
  if (listed) {
    for (const auto& s : *listed) sections.insert(s.get<std::string>());
  } else {
    for (auto it = body->begin(); it != body->end(); ++it) sections.insert(it.key());
  }
  return reload(resolved, sections);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  json source;
  try {
    source = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return load_config(source);
}

}  // namespace macf
