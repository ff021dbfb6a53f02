#include "macf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "macf/diagnostics.hpp"

namespace macf {

int resolve_thread_count(int configured) {
  if (const char* env = std::getenv("MACF_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError("MACF_THREADS", "must be a positive integer");
    return static_cast<int>(v);
  }
  if (configured > 0) return configured;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  const int workers = std::clamp(threads, 1, std::max(count, 1));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

MomentEstimate moment(const std::vector<double>& x, int p) {
  MomentEstimate m;
  m.p = p;
  if (x.empty()) {
    m.mean = m.se = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [p](double v) { return std::pow(v, p); });
  const double n = static_cast<double>(y.size());
  m.mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  if (y.size() < 2) {
    m.se = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  // shifted by y[0] so identical samples give exactly zero
  double s1 = 0.0, s2 = 0.0;
  for (double v : y) {
    s1 += v - y[0];
    s2 += (v - y[0]) * (v - y[0]);
  }
  m.se = std::sqrt(std::max(0.0, (s2 - s1 * s1 / n) / (n - 1.0))) / std::sqrt(n);
  return m;
}

double EnsembleReport::blowup_fraction() const {
  return replicates > 0 ? static_cast<double>(blowups) / replicates : 0.0;
}

bool EnsembleReport::failed() const { return blowup_fraction() > 0.05; }

EnsembleReport run_ensemble(const SchemeConfig& cfg, int replicates, std::uint64_t seed, int threads) {
  if (replicates < 2) throw std::invalid_argument("an ensemble needs at least two replicates");
  cfg.validate();
  EnsembleReport report;
  report.replicates = replicates;
  report.seed = seed;
  report.rows.resize(static_cast<std::size_t>(replicates));
  const NoisePath base = make_noise_path(cfg, seed, 0);
  RunOptions options;
  options.diagnostics = false;

  parallel_for(replicates, threads, [&](int r) {
    ReplicateSummary& row = report.rows[static_cast<std::size_t>(r)];
    row.replicate = static_cast<std::uint32_t>(r);
    try {
      const TrajectoryRecord rec = run(cfg, base.with_replicate(row.replicate), {}, options);
      row.sup_F = rec.summary.sup_F;
      row.sup_F_le = rec.summary.sup_F_le;
      row.dissipation = rec.summary.dissipation_integral;
      row.sup_h1 = rec.summary.sup_h1;
    } catch (const BlowUpError& e) {
      row.blew_up = true;
      row.blowup_time = e.time();
    }
  });

  std::vector<double> F, F_le, diss, h1;
  for (const auto& row : report.rows) {
    if (row.blew_up) {
      ++report.blowups;
      continue;
    }
    F.push_back(row.sup_F);
    F_le.push_back(row.sup_F_le);
    diss.push_back(row.dissipation);
    h1.push_back(row.sup_h1);
  }
  for (int p : {1, 2}) {
    report.sup_F.push_back(moment(F, p));
    report.sup_F_le.push_back(moment(F_le, p));
    report.dissipation.push_back(moment(diss, p));
    report.sup_h1.push_back(moment(h1, p));
  }
  return report;
}

RefinementAxis parse_axis(const std::string& name) {
  if (name == "n") return RefinementAxis::n;
  if (name == "m") return RefinementAxis::m;
  if (name == "eta") return RefinementAxis::eta;
  if (name == "ell") return RefinementAxis::ell;
  if (name == "N") return RefinementAxis::N;
  throw ConfigError("converge.axis", "unknown axis '" + name + "' (expected n, m, eta, ell or N)");
}

std::string axis_name(RefinementAxis axis) {
  switch (axis) {
    case RefinementAxis::n: return "n";
    case RefinementAxis::m: return "m";
    case RefinementAxis::eta: return "eta";
    case RefinementAxis::ell: return "ell";
    case RefinementAxis::N: return "N";
  }
  return "?";
}

SchemeConfig at_level(SchemeConfig base, RefinementAxis axis, double level) {
  auto integer = [&](const char* key) {
    const long v = std::lround(level);
    if (std::abs(level - static_cast<double>(v)) > 1e-9 || v < 1) {
      throw ConfigError(key, "refinement level " + std::to_string(level) + " is not a positive integer");
    }
    return static_cast<int>(v);
  };
  switch (axis) {
    case RefinementAxis::n: base.outer_steps = integer("converge.levels"); break;
    case RefinementAxis::m: base.inner_steps = integer("converge.levels"); break;
    case RefinementAxis::eta: base.eta = level; break;
    case RefinementAxis::ell: base.ell = level; break;
    case RefinementAxis::N: base.grid = integer("converge.levels"); break;
  }
  base.validate();
  return base;
}

namespace {

std::vector<SpectralField> h_fields(const std::vector<SpectralField>& fields, const Mobility& m, int grid) {
  std::vector<SpectralField> out;
  for (const auto& f : fields) out.push_back(h_field(resample(f, grid), m));
  return out;
}

CouplingReport compare(const TrajectoryRecord& a, const TrajectoryRecord& b, const Mobility& mobility) {
  if (a.times.size() != b.times.size()) throw std::logic_error("coupled runs sampled differently");
  CouplingReport rep;
  rep.times = a.times;
  const int grid = std::max(a.checkpoints.front().grid_size(), b.checkpoints.front().grid_size());
  const std::vector<SpectralField> ha = h_fields(a.checkpoints, mobility, grid);
  const std::vector<SpectralField> hb = h_fields(b.checkpoints, mobility, grid);
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    const double psi = uniqueness_metric_from_h(ha[i], hb[i]);
    const double l2 = l2_norm(resample(a.checkpoints[i], grid) - resample(b.checkpoints[i], grid));
    rep.psi.push_back(psi);
    rep.l2.push_back(l2);
    rep.sup_psi = std::max(rep.sup_psi, psi);
    rep.sup_l2 = std::max(rep.sup_l2, l2);
  }
  rep.final_psi = rep.psi.back();

  // log Psi against t over the second half.
  std::vector<double> ts, ys;
  for (std::size_t i = rep.times.size() / 2; i < rep.times.size(); ++i) {
    if (rep.psi[i] > 0.0) {
      ts.push_back(rep.times[i]);
      ys.push_back(std::log(rep.psi[i]));
    }
  }
  if (ts.size() < 2) {
    rep.log_psi_slope = std::numeric_limits<double>::quiet_NaN();
  } else {
    const double n = static_cast<double>(ts.size());
    const double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      sxy += (ts[i] - mt) * (ys[i] - my);
      sxx += (ts[i] - mt) * (ts[i] - mt);
    }
    rep.log_psi_slope = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

std::string describe(RefinementAxis axis, double level) {
  std::ostringstream s;
  s << axis_name(axis) << "=" << level;
  return s.str();
}

bool same_function(const ScalarFn& f, const ScalarFn& g) {
  for (double u : {-3.7, -1.0, -0.2, 0.0, 0.45, 1.3, 5.0}) {
    const double a = f(u), b = g(u);
    if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)})) return false;
  }
  return true;
}

// Common substep length dividing every config's substep.
double master_dt(const std::vector<SchemeConfig>& cfgs) {
  double dt = cfgs.front().inner_dt();
  for (const auto& c : cfgs) dt = std::min(dt, c.inner_dt());
  for (const auto& c : cfgs) {
    const double r = c.inner_dt() / dt;
    if (std::abs(r - std::round(r)) > 1e-9 * r) {
      throw ConfigError("scheme", "substeps of the compared configurations are not nested");
    }
  }
  return dt;
}

NoisePath master_path(const std::vector<SchemeConfig>& cfgs, std::uint64_t seed, std::uint32_t replicate) {
  const double dt = master_dt(cfgs);
  int grid = 0;
  for (const auto& c : cfgs) grid = std::max(grid, c.grid);
  const long steps = std::lround(cfgs.front().horizon / dt);
  return NoisePath(seed, replicate, dt, steps, grid);
}

}  // namespace

void require_same_equation(const SchemeConfig& a, const SchemeConfig& b) {
  if (a.dim != b.dim) throw ConfigError("scheme.d", "coupled configurations differ in dimension");
  if (std::abs(a.horizon - b.horizon) > 1e-12 * a.horizon) {
    throw ConfigError("scheme.T", "coupled configurations differ in horizon");
  }
  const Model& ma = a.model;
  const Model& mb = b.model;
  if (ma.potential.name != mb.potential.name || !same_function(ma.potential.value, mb.potential.value)) {
    throw ConfigError("potential", "coupled configurations solve different equations (potential differs)");
  }
  if (ma.mobility.name != mb.mobility.name || !same_function(ma.mobility.value, mb.mobility.value)) {
    throw ConfigError("mobility", "coupled configurations solve different equations (mobility differs)");
  }
  if (ma.kernel.decay_exponent != mb.kernel.decay_exponent || ma.kernel.amplitude != mb.kernel.amplitude) {
    throw ConfigError("kernel", "coupled configurations solve different equations (kernel differs)");
  }
}

std::vector<CouplingReport> refinement_study(const SchemeConfig& base, RefinementAxis axis,
                                             const std::vector<double>& levels, std::uint64_t seed,
                                             std::uint32_t replicate, int threads) {
  if (levels.size() < 2) throw ConfigError("converge.levels", "need at least two levels");
  const bool up = levels[1] > levels[0];
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if ((levels[i] > levels[i - 1]) != up || levels[i] == levels[i - 1]) {
      throw ConfigError("converge.levels", "levels must be strictly monotone");
    }
  }
  std::vector<SchemeConfig> cfgs;
  for (double l : levels) cfgs.push_back(at_level(base, axis, l));
  for (const auto& c : cfgs) {
    if (c.dim != cfgs.front().dim) throw ShapeError("refinement levels live on different mode sets");
  }
  const NoisePath path = master_path(cfgs, seed, replicate);

  long coarsest = cfgs.front().total_steps();
  for (const auto& c : cfgs) coarsest = std::min(coarsest, c.total_steps());
  const std::vector<double> times = uniform_times(base.horizon, static_cast<int>(coarsest));

  RunOptions options;
  options.diagnostics = false;
  options.checkpoints = true;
  options.summary = false;
  std::vector<TrajectoryRecord> runs(cfgs.size());
  parallel_for(static_cast<int>(cfgs.size()), threads,
               [&](int i) { runs[static_cast<std::size_t>(i)] = run(cfgs[static_cast<std::size_t>(i)], path, times, options); });

  std::vector<CouplingReport> out;
  for (std::size_t i = 0; i + 1 < cfgs.size(); ++i) {
    CouplingReport rep = compare(runs[i], runs[i + 1], base.model.mobility);
    rep.label_a = describe(axis, levels[i]);
    rep.label_b = describe(axis, levels[i + 1]);
    out.push_back(std::move(rep));
  }
  return out;
}

CouplingReport coupling_experiment(const SchemeConfig& a, const SchemeConfig& b, const CouplingNoise& noise,
                                   int sample_count) {
  a.validate();
  b.validate();
  require_same_equation(a, b);
  if (sample_count < 1) throw ConfigError("couple.samples", "must be >= 1");
  const std::vector<SchemeConfig> both{a, b};
  const NoisePath pa = master_path(both, noise.seed_a, noise.replicate);
  const NoisePath pb = noise.seed_b == noise.seed_a ? pa : master_path(both, noise.seed_b, noise.replicate);
  const std::vector<double> times = uniform_times(a.horizon, sample_count);

  RunOptions options;
  options.diagnostics = false;
  options.checkpoints = true;
  options.summary = false;
  CouplingReport rep = compare(run(a, pa, times, options), run(b, pb, times, options), a.model.mobility);
  std::ostringstream la, lb;
  la << "n=" << a.outer_steps << ",m=" << a.inner_steps << ",N=" << a.grid << ",seed=" << noise.seed_a;
  lb << "n=" << b.outer_steps << ",m=" << b.inner_steps << ",N=" << b.grid << ",seed=" << noise.seed_b;
  rep.label_a = la.str();
  rep.label_b = lb.str();
  return rep;
}

MartingaleReport martingale_test(const SchemeConfig& cfg, int replicates, const SpectralField& psi,
                                 const std::vector<double>& test_times, const MartingaleOptions& opts) {
  cfg.validate();
  if (replicates < 2) throw std::invalid_argument("martingale test needs at least two replicates");
  if (test_times.size() < 2) throw std::invalid_argument("martingale test needs at least two test times");
  MartingaleReport report;
  report.replicates = replicates;
  if (cfg.model.kernel.amplitude == 0.0) {
    report.degenerate = true;
    return report;
  }

  const long steps = cfg.total_steps();
  const double dt = cfg.inner_dt();
  std::vector<long> test_index;
  for (double t : test_times) {
    const double idx = t / dt;
    const long s = std::lround(idx);
    if (std::abs(idx - static_cast<double>(s)) > 1e-6 || s < 0 || s > steps) {
      throw ConfigError("mgtest.times", "test time " + std::to_string(t) + " is not on the substep grid");
    }
    if (!test_index.empty() && s <= test_index.back()) {
      throw ConfigError("mgtest.times", "test times must be strictly increasing");
    }
    test_index.push_back(s);
  }
  const SpectralField test = resample(psi, cfg.grid);
  const std::vector<double> times = uniform_times(cfg.horizon, static_cast<int>(steps));

  NoisePath base = make_noise_path(cfg, opts.seed, 0);
  if (opts.reuse_pairs) base = base.with_reused_pairs();
  RunOptions options;
  options.diagnostics = false;
  options.checkpoints = true;
  options.summary = false;

  const std::size_t intervals = test_index.size() - 1;
  // Per replicate: increments and predicted QV per interval.
  std::vector<std::vector<double>> jump(static_cast<std::size_t>(replicates)),
      qv(static_cast<std::size_t>(replicates));
  std::vector<char> blew(static_cast<std::size_t>(replicates), 0), coarse(static_cast<std::size_t>(replicates), 0);
  parallel_for(replicates, opts.threads, [&](int r) {
    const auto ri = static_cast<std::size_t>(r);
    try {
      const TrajectoryRecord rec = run(cfg, base.with_replicate(static_cast<std::uint32_t>(r)), times, options);
      const MartingaleSeries s = martingale_statistic(rec, test, cfg.model.potential, cfg.model.mobility,
                                                      cfg.model.kernel);
      coarse[ri] = s.coarse;
      for (std::size_t i = 0; i < intervals; ++i) {
        const auto a = static_cast<std::size_t>(test_index[i]);
        const auto b = static_cast<std::size_t>(test_index[i + 1]);
        jump[ri].push_back(s.M[b] - s.M[a]);
        qv[ri].push_back(s.qv_pred[b] - s.qv_pred[a]);
      }
    } catch (const BlowUpError&) {
      blew[ri] = 1;
    }
  });

  for (std::size_t i = 0; i < intervals; ++i) {
    std::vector<double> x, d;
    double q = 0.0;
    for (std::size_t r = 0; r < static_cast<std::size_t>(replicates); ++r) {
      if (blew[r]) continue;
      x.push_back(jump[r][i]);
      d.push_back(jump[r][i] * jump[r][i] - qv[r][i]);
      q += qv[r][i];
    }
    IntervalScore score;
    score.t0 = test_times[i];
    score.t1 = test_times[i + 1];
    const MomentEstimate mx = moment(x, 1);
    const MomentEstimate md = moment(d, 1);
    score.mean = mx.mean;
    score.mean_z = mx.se > 0.0 ? mx.mean / mx.se : 0.0;
    score.qv_pred = q / static_cast<double>(x.size());
    score.second_moment = md.mean + score.qv_pred;
    score.var_z = md.se > 0.0 ? md.mean / md.se : 0.0;
    report.max_abs_z = std::max({report.max_abs_z, std::abs(score.mean_z), std::abs(score.var_z)});
    report.intervals.push_back(score);
  }
  for (std::size_t r = 0; r < static_cast<std::size_t>(replicates); ++r) {
    report.blowups += blew[r];
    report.coarse = report.coarse || coarse[r];
  }
  report.pass = !(report.max_abs_z >= opts.z_threshold) && report.blowups * 20 <= replicates;
  return report;
}

}  // namespace macf
