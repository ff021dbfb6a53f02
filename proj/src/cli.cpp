#include "macf/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "macf/checkpoint.hpp"
#include "macf/config.hpp"
#include "macf/diagnostics.hpp"
#include "macf/experiments.hpp"
#include "macf/semigroup.hpp"

namespace macf {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

class Verdicts {
 public:
  explicit Verdicts(std::ostream& out) : out_(out) {}

  void add(const std::string& name, bool pass, const std::string& metric, double value) {
    out_ << "VERDICT " << name << (pass ? " PASS " : " FAIL ") << metric << "=" << num(value) << "\n";
    all_pass_ = all_pass_ && pass;
    entries_.push_back({{"name", name}, {"pass", pass}, {metric, value}});
  }

  bool all_pass() const { return all_pass_; }
  const json& entries() const { return entries_; }

 private:
  std::ostream& out_;
  bool all_pass_ = true;
  json entries_ = json::array();
};

// Written when a run starts and rewritten when it ends.
class Manifest {
 public:
  Manifest(const std::string& subcommand, const RunConfig& cfg, const fs::path& dir, int threads)
      : path_(dir / "manifest.json"), start_(std::chrono::steady_clock::now()) {
    json sections = json::array();
    for (const auto& s : cfg.sections) sections.push_back(s);
    body_ = {{"version", kVersion},
             {"subcommand", subcommand},
             {"config", cfg.resolved},
             {"sections", sections},
             {"seed", cfg.seed},
             {"replicate", cfg.replicate},
             {"threads", threads},
             {"outputs", json::array()},
             {"status", "running"}};
    write();
  }

  void output(const fs::path& p) { body_["outputs"].push_back(p.filename().string()); }
  void set(const std::string& key, json value) { body_[key] = std::move(value); }

  void finish(const std::string& status, long steps) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    body_["status"] = status;
    body_["timing"] = {{"wall_seconds", wall},
                       {"steps", steps},
                       {"seconds_per_step", steps > 0 ? wall / static_cast<double>(steps) : 0.0}};
    write();
  }

 private:
  void write() const {
    std::ofstream f(path_);
    f << json{{"manifest", body_}}.dump(2) << "\n";
  }

  fs::path path_;
  std::chrono::steady_clock::time_point start_;
  json body_;
};

std::ofstream open_output(const fs::path& path, Manifest& manifest) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << std::setprecision(17);
  manifest.output(path);
  return f;
}

bool strictly_decreasing(const std::vector<double>& x) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] < x[i - 1]) && !(x[i] == 0.0 && x[i - 1] == 0.0)) return false;
  }
  return true;
}

int simulate(const RunConfig& cfg, const fs::path& dir, Manifest& manifest, std::ostream& err, bool quiet) {
  RunOptions options;
  options.checkpoints = cfg.write_checkpoints;
  const NoisePath path = make_noise_path(cfg.scheme, cfg.seed, cfg.replicate);
  TrajectoryRecord rec;
  try {
    rec = run(cfg.scheme, path, cfg.sample_times, options);
  } catch (const BlowUpError& e) {
    err << "blow-up at t=" << e.time() << " (step " << e.step() << "): " << e.what() << "\n";
    manifest.set("blowup", {{"time", e.time()}, {"step", e.step()}});
    manifest.finish("blowup", e.step());
    return kExitBlowUp;
  }
  std::ofstream traj = open_output(dir / "trajectory.ndjson", manifest);
  for (std::size_t i = 0; i < rec.diagnostics.size(); ++i) {
    const auto& d = rec.diagnostics[i];
    json line = {{"t", d.t}, {"F", d.F}, {"F_le", d.F_le}, {"willmore", d.willmore},
                 {"l2", d.l2}, {"h1", d.h1}, {"h2", d.h2}};
    if (cfg.write_checkpoints) {
      std::ostringstream name;
      name << "checkpoint_" << std::setw(5) << std::setfill('0') << i << ".macf";
      save_checkpoint(dir / name.str(), rec.checkpoints[i]);
      manifest.output(dir / name.str());
      line["checkpoint"] = name.str();
    }
    traj << line.dump() << "\n";
  }
  std::ofstream refreeze = open_output(dir / "refreeze.ndjson", manifest);
  for (const auto& r : rec.refreezes) {
    refreeze << json{{"t", r.t}, {"min_sigma", r.min_sigma}, {"grad_v", r.grad_v}, {"max_grad_u", r.max_grad_u}}
                    .dump()
             << "\n";
  }
  const auto& s = rec.summary;
  manifest.set("summary", {{"sup_F", s.sup_F},
                           {"sup_F_le", s.sup_F_le},
                           {"dissipation_integral", s.dissipation_integral},
                           {"sup_h1", s.sup_h1},
                           {"sup_linf", s.sup_linf}});
  if (!quiet) err << "simulated " << s.steps << " steps, " << rec.times.size() << " samples\n";
  manifest.finish("ok", s.steps);
  return kExitOk;
}

int ensemble(const RunConfig& cfg, const fs::path& dir, Manifest& manifest, Verdicts& v, int threads,
             std::ostream& err, bool quiet) {
  cfg.require_section("ensemble");
  const EnsembleReport rep = run_ensemble(cfg.scheme, cfg.ensemble.replicates, cfg.seed, threads);
  std::ofstream csv = open_output(dir / "ensemble.csv", manifest);
  csv << "replicate,sup_F,sup_F_le,dissipation,sup_h1,blew_up,blowup_time\n";
  for (const auto& r : rep.rows) {
    csv << r.replicate << "," << r.sup_F << "," << r.sup_F_le << "," << r.dissipation << "," << r.sup_h1 << ","
        << (r.blew_up ? 1 : 0) << "," << r.blowup_time << "\n";
  }
  json moments = json::object();
  bool finite = true;
  auto record = [&](const std::string& name, const std::vector<MomentEstimate>& ms) {
    for (const auto& m : ms) {
      moments[name + "_p" + std::to_string(m.p)] = {{"mean", m.mean}, {"se", m.se}};
      finite = finite && std::isfinite(m.mean);
      if (!quiet) err << name << " p=" << m.p << ": " << m.mean << " +- " << m.se << "\n";
    }
  };
  record("sup_F", rep.sup_F);
  record("sup_F_le", rep.sup_F_le);
  record("dissipation", rep.dissipation);
  record("sup_h1", rep.sup_h1);
  manifest.set("moments", moments);
  v.add("ensemble_blowups", !rep.failed(), "blowup_fraction", rep.blowup_fraction());
  v.add("ensemble_moments", finite, "finite", finite ? 1.0 : 0.0);
  manifest.finish(v.all_pass() ? "ok" : "fail", cfg.scheme.total_steps() * rep.replicates);
  return v.all_pass() ? kExitOk : kExitFail;
}

int converge(const RunConfig& cfg, const fs::path& dir, Manifest& manifest, Verdicts& v, int threads) {
  cfg.require_section("converge");
  const RefinementAxis axis = parse_axis(cfg.converge.axis);
  std::vector<std::vector<CouplingReport>> studies;
  for (int r = 0; r < cfg.converge.replicates; ++r) {
    studies.push_back(refinement_study(cfg.scheme, axis, cfg.converge.levels, cfg.seed,
                                       cfg.replicate + static_cast<std::uint32_t>(r), threads));
  }
  std::ofstream csv = open_output(dir / "converge.csv", manifest);
  csv << "pair,label_a,label_b,replicate,sup_l2,final_psi\n";
  std::vector<double> rms(studies.front().size(), 0.0);
  for (std::size_t r = 0; r < studies.size(); ++r) {
    for (std::size_t p = 0; p < studies[r].size(); ++p) {
      const auto& c = studies[r][p];
      csv << p << "," << c.label_a << "," << c.label_b << "," << r << "," << c.sup_l2 << "," << c.final_psi << "\n";
      rms[p] += c.sup_l2 * c.sup_l2;
    }
  }
  for (double& x : rms) x = std::sqrt(x / static_cast<double>(studies.size()));
  std::ofstream series = open_output(dir / "converge.ndjson", manifest);
  for (std::size_t p = 0; p < studies.front().size(); ++p) {
    const auto& c = studies.front()[p];
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      series << json{{"pair", p}, {"a", c.label_a}, {"b", c.label_b}, {"t", c.times[i]}, {"psi", c.psi[i]},
                     {"l2", c.l2[i]}}
                    .dump()
             << "\n";
    }
  }
  const double max_distance = *std::max_element(rms.begin(), rms.end());
  double max_ratio = 0.0;
  for (std::size_t i = 1; i < rms.size(); ++i) {
    if (rms[i - 1] > 0.0) max_ratio = std::max(max_ratio, rms[i] / rms[i - 1]);
  }
  const std::string name = "converge_" + axis_name(axis);
  if (max_distance == 0.0 || rms.size() < 2) {
    v.add(name, strictly_decreasing(rms), "max_distance", max_distance);
  } else {
    v.add(name, strictly_decreasing(rms), "max_ratio", max_ratio);
  }
  manifest.set("rms_distances", rms);
  manifest.finish(v.all_pass() ? "ok" : "fail", 0);
  return v.all_pass() ? kExitOk : kExitFail;
}

int couple(const RunConfig& cfg, const fs::path& dir, Manifest& manifest, Verdicts& v) {
  cfg.require_section("couple");
  const SchemeConfig a = cfg.scheme;
  const SchemeConfig b = apply_scheme_overrides(cfg.scheme, cfg.couple.b, "couple.b");
  const std::uint64_t seed_b = cfg.couple.seed_b.value_or(cfg.seed);
  // Independent baseline: a seed that differs from both.
  const std::uint64_t seed_ind = std::max(cfg.seed, seed_b) + 1000003;
  std::ofstream series = open_output(dir / "couple.ndjson", manifest);
  double shared_sum = 0.0, independent_sum = 0.0;
  bool gronwall = true;
  double worst_slope = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < cfg.couple.pairs; ++p) {
    const auto replicate = cfg.replicate + static_cast<std::uint32_t>(p);
    const CouplingReport rep = coupling_experiment(a, b, {cfg.seed, seed_b, replicate}, cfg.couple.samples);
    shared_sum += rep.sup_psi;
    const bool zero = rep.sup_psi == 0.0;
    gronwall = gronwall && (zero || std::isfinite(rep.log_psi_slope));
    if (!zero) worst_slope = std::max(worst_slope, rep.log_psi_slope);
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
      series << json{{"pair", p}, {"noise", seed_b == cfg.seed ? "shared" : "independent"}, {"t", rep.times[i]},
                     {"psi", rep.psi[i]}, {"l2", rep.l2[i]}}
                    .dump()
             << "\n";
    }
    if (cfg.couple.baseline) {
      const CouplingReport ind = coupling_experiment(a, b, {cfg.seed, seed_ind, replicate}, cfg.couple.samples);
      independent_sum += ind.sup_psi;
      for (std::size_t i = 0; i < ind.times.size(); ++i) {
        series << json{{"pair", p}, {"noise", "baseline"}, {"t", ind.times[i]}, {"psi", ind.psi[i]},
                       {"l2", ind.l2[i]}}
                      .dump()
               << "\n";
      }
    }
  }
  v.add("couple_gronwall", gronwall, "log_psi_slope", std::isfinite(worst_slope) ? worst_slope : 0.0);
  if (cfg.couple.baseline) {
    const double ratio = independent_sum > 0.0 ? shared_sum / independent_sum : 0.0;
    v.add("couple_separation", ratio < 0.1, "ratio", ratio);
  }
  manifest.finish(v.all_pass() ? "ok" : "fail", 0);
  return v.all_pass() ? kExitOk : kExitFail;
}

int mgtest(const RunConfig& cfg, const fs::path& dir, Manifest& manifest, Verdicts& v, int threads) {
  cfg.require_section("mgtest");
  const std::vector<double> times =
      cfg.mgtest.times.empty() ? uniform_times(cfg.scheme.horizon, cfg.mgtest.intervals) : cfg.mgtest.times;
  MartingaleOptions opts;
  opts.seed = cfg.seed;
  opts.reuse_pairs = cfg.mgtest.reuse_noise;
  opts.threads = threads;
  const MartingaleReport rep = martingale_test(cfg.scheme, cfg.mgtest.replicates,
                                               default_test_function(cfg.scheme.dim, cfg.scheme.grid), times, opts);
  std::ofstream csv = open_output(dir / "mgtest.csv", manifest);
  csv << "t0,t1,mean,mean_z,second_moment,qv_pred,var_z\n";
  for (const auto& s : rep.intervals) {
    csv << s.t0 << "," << s.t1 << "," << s.mean << "," << s.mean_z << "," << s.second_moment << "," << s.qv_pred
        << "," << s.var_z << "\n";
  }
  manifest.set("martingale", {{"degenerate", rep.degenerate}, {"coarse", rep.coarse}, {"blowups", rep.blowups}});
  if (rep.degenerate) {
    v.add("mgtest", false, "degenerate", 1.0);
  } else {
    v.add("mgtest", rep.pass, "max_abs_z", rep.max_abs_z);
  }
  manifest.finish(v.all_pass() ? "ok" : "fail", cfg.scheme.total_steps() * cfg.mgtest.replicates);
  return v.all_pass() ? kExitOk : kExitFail;
}

int semigroup(const RunConfig& cfg, const fs::path& dir, Manifest& manifest, Verdicts& v) {
  cfg.require_section("semigroup");
  const auto& sg = cfg.semigroup;
  const SpectralField field = project_sub_nyquist(cfg.scheme.initial_field());
  const Mobility& mobility = cfg.scheme.model.mobility;
  const int dim = field.dim(), n = field.grid_size();

  std::vector<double> deltas{0.0};
  std::vector<double> sorted = sg.deltas;
  std::sort(sorted.rbegin(), sorted.rend());
  deltas.insert(deltas.end(), sorted.begin(), sorted.end());

  std::ofstream csv = open_output(dir / "semigroup.csv", manifest);
  csv << "delta,commutator_estimate,m0,max_growth_ratio\n";
  double worst_dissipation = std::numeric_limits<double>::infinity();
  double worst_resolvent = 0.0;
  double worst_growth = 0.0;
  std::vector<double> commutators, logd, logc, errors;
  SpectralField reference_u0 = random_field(dim, n, cfg.seed, 7777, 2.0);
  SpectralField reference;
  for (double delta : deltas) {
    FrozenOperator op = make_operator(field, delta, mobility);
    estimate_m0(op, sg.probes, {cfg.seed});
    double comm = 0.0;
    if (delta > 0.0) {
      comm = commutator_norm(field, delta, mobility, sg.commutator_probes, cfg.seed).norm;
      commutators.push_back(comm);
      logd.push_back(std::log(delta));
      logc.push_back(std::log(comm));
    }
    double growth = 0.0;
    for (int p = 0; p < sg.probes; ++p) {
      const SpectralField u = random_field(dim, n, cfg.seed, 100 + static_cast<std::uint32_t>(p), 1.0);
      const double norm_sq = h1_inner(u, u);
      const double au = h1_inner(apply(op, u), u);
      for (double m : sg.m_values) {
        // <((m + m0) I - A) u, u> - m ||u||^2, relative to ||u||^2.
        worst_dissipation = std::min(worst_dissipation, ((m + op.m0) * norm_sq - au - m * norm_sq) / norm_sq);
      }
      if (p < 16) {
        const SpectralField st = evolve(op, u, sg.t, sg.steps);
        growth = std::max(growth, sobolev_norm(st, 1.0) / (std::exp(op.m0 * sg.t) * std::sqrt(norm_sq)));
      }
    }
    for (double m : sg.m_values) {
      const SpectralField f = random_field(dim, n, cfg.seed, 555, 1.0);
      const SolveResult s = resolvent_solve(op, m, f);
      worst_resolvent = std::max(worst_resolvent, sobolev_norm(s.u, 1.0) * m / sobolev_norm(f, 1.0));
    }
    const SpectralField evolved = evolve(op, reference_u0, sg.t, sg.steps);
    if (delta == 0.0) {
      reference = evolved;
    } else {
      errors.push_back(sobolev_norm(evolved - reference, 1.0));
    }
    worst_growth = std::max(worst_growth, growth);
    csv << delta << "," << comm << "," << op.m0 << "," << growth << "\n";
  }

  v.add("semigroup_dissipativity", worst_dissipation >= -1e-9, "min_margin", worst_dissipation);
  v.add("semigroup_resolvent_bound", worst_resolvent <= 1.0 + 1e-8, "max_ratio", worst_resolvent);
  v.add("semigroup_growth", worst_growth <= 1.05, "max_growth_ratio", worst_growth);
  if (commutators.size() >= 2) {
    const double nd = static_cast<double>(logd.size());
    const double md = std::accumulate(logd.begin(), logd.end(), 0.0) / nd;
    const double mc = std::accumulate(logc.begin(), logc.end(), 0.0) / nd;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < logd.size(); ++i) {
      sxy += (logd[i] - md) * (logc[i] - mc);
      sxx += (logd[i] - md) * (logd[i] - md);
    }
    const double slope = sxy / sxx;
    double sse = 0.0;
    for (std::size_t i = 0; i < logd.size(); ++i) {
      const double r = logc[i] - mc - slope * (logd[i] - md);
      sse += r * r;
    }
    const double se = logd.size() > 2 ? std::sqrt(sse / (nd - 2.0) / sxx) : 0.0;
    v.add("semigroup_commutator_decay", strictly_decreasing(commutators) && slope + 2.0 * se >= 0.125, "slope",
          slope);
    v.add("semigroup_convergence", strictly_decreasing(errors), "finest_error", errors.back());
  }
  manifest.finish(v.all_pass() ? "ok" : "fail", 0);
  return v.all_pass() ? kExitOk : kExitFail;
}

int check_model(const RunConfig& cfg, const fs::path& dir, Manifest& manifest, Verdicts& v) {
  const Model& model = cfg.scheme.model;
  const AssumptionReport rep = check_assumptions(model.potential, model.mobility, model.kernel, cfg.assumptions);
  std::ofstream csv = open_output(dir / "check_model.csv", manifest);
  csv << "id,name,pass,constant,witness,detail\n";
  auto row = [&](const AssumptionItem& item) {
    std::string detail = item.detail;
    std::replace(detail.begin(), detail.end(), '"', '\'');
    csv << item.id << ",\"" << item.name << "\"," << (item.pass ? 1 : 0) << "," << item.constant << ","
        << item.witness << ",\"" << detail << "\"\n";
  };
  for (const auto& item : rep.items) {
    row(item);
    v.add("assumption_" + std::to_string(item.id), item.pass, "constant", item.constant);
  }
  row(rep.kernel);
  v.add("kernel_h1", rep.kernel.pass, "constant", rep.kernel.constant);
  manifest.finish(v.all_pass() ? "ok" : "fail", 0);
  return v.all_pass() ? kExitOk : kExitFail;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic Allen-Cahn with mobility: simulation and verification tool", "macf"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options opts;
  app.add_option("--config", opts.config, "JSON config (or a manifest.json from an earlier run)")->required();
  app.add_option("--out", opts.out, "output directory")->capture_default_str();
  app.add_option("--seed", opts.seed, "override noise.seed");
  app.add_flag("--quiet", opts.quiet, "suppress progress messages");
  app.fallthrough();

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "run the scheme and write an NDJSON trajectory"},
      {"ensemble", "Monte Carlo moments over replicates"},
      {"converge", "shared-noise refinement study along one parameter axis"},
      {"couple", "shared-noise coupling of two configurations"},
      {"mgtest", "martingale-property test"},
      {"semigroup", "frozen-coefficient operator checks"},
      {"check-model", "sampled check of the model assumptions"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = load_config_file(opts.config);
    if (opts.seed) {
      json resolved = cfg.resolved;
      resolved["noise"]["seed"] = *opts.seed;
      cfg = reload(resolved, cfg.sections);
    }
    const int threads = resolve_thread_count(cfg.threads);
    const fs::path dir(opts.out);
    fs::create_directories(dir);
    Manifest manifest(command, cfg, dir, threads);
    Verdicts verdicts(out);
    try {
      int code = kExitOk;
      if (command == "simulate") code = simulate(cfg, dir, manifest, err, opts.quiet);
      else if (command == "ensemble") code = ensemble(cfg, dir, manifest, verdicts, threads, err, opts.quiet);
      else if (command == "converge") code = converge(cfg, dir, manifest, verdicts, threads);
      else if (command == "couple") code = couple(cfg, dir, manifest, verdicts);
      else if (command == "mgtest") code = mgtest(cfg, dir, manifest, verdicts, threads);
      else if (command == "semigroup") code = semigroup(cfg, dir, manifest, verdicts);
      else if (command == "check-model") code = check_model(cfg, dir, manifest, verdicts);
      return code;
    } catch (const BlowUpError& e) {
      err << "blow-up at t=" << e.time() << " (step " << e.step() << "): " << e.what() << "\n";
      manifest.finish("blowup", e.step());
      return kExitBlowUp;
    } catch (...) {
      manifest.finish("error", 0);
      throw;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace macf
