#include "modelavg/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace modelavg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Runs job(i) for i in [0, jobs) on a small pool; callers write results into
/// pre-sized slots so the outcome does not depend on scheduling.
template <typename Job>
void parallel_jobs(std::size_t jobs, std::size_t threads, Job job) {
  std::size_t n = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  n = std::min(n, jobs);
  if (n <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

template <typename T>
std::string join(const std::vector<T>& xs, char sep = ',') {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << sep;
    if constexpr (std::is_floating_point_v<T>) {
      os << format_double(xs[i]);
    } else {
      os << xs[i];
    }
  }
  return os.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

struct ScheduleEntry {
  std::string label;
  AveragingSchedule schedule;
  std::size_t workers;
};

std::vector<ScheduleEntry> resolve_schedules(const std::vector<std::string>& tokens, std::size_t workers) {
  std::vector<ScheduleEntry> out;
  for (const auto& t : tokens) {
    if (t == "single") {
      out.push_back({t, AveragingSchedule::one_shot(), 1});
    } else {
      const auto s = AveragingSchedule::parse(t);
      out.push_back({s.to_string(), s, workers});
    }
  }
  return out;
}

std::string file_label(std::string s) {
  for (char& ch : s) {
    if (ch == ':' || ch == '/' || ch == ',' || ch == ' ') ch = '_';
  }
  return s;
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
  return out;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double standard_error_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

std::size_t repeats_or(const ExperimentConfig& cfg, std::size_t fallback) {
  return cfg.repeats == 0 ? fallback : cfg.repeats;
}

}  // namespace

double effective_alpha(const ExperimentConfig& cfg) {
  if (cfg.alpha > 0.0) return cfg.alpha;
  switch (cfg.kind) {
    case ExperimentKind::kQuartic: return 0.025;
    case ExperimentKind::kPca: return 0.01;
    case ExperimentKind::kLemmaSweep: return 0.1;
    default: return 0.0;
  }
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "convex-compare") return ExperimentKind::kConvexCompare;
  if (name == "quartic") return ExperimentKind::kQuartic;
  if (name == "pca") return ExperimentKind::kPca;
  if (name == "lemma-sweep") return ExperimentKind::kLemmaSweep;
  if (name == "profile-envelope") return ExperimentKind::kProfileEnvelope;
  if (name == "equivalence") return ExperimentKind::kEquivalence;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kConvexCompare: return "convex-compare";
    case ExperimentKind::kQuartic: return "quartic";
    case ExperimentKind::kPca: return "pca";
    case ExperimentKind::kLemmaSweep: return "lemma-sweep";
    case ExperimentKind::kProfileEnvelope: return "profile-envelope";
    case ExperimentKind::kEquivalence: return "equivalence";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (model != "ls" && model != "lr") throw ConfigError("model must be ls or lr");
  for (const auto& s : schedules) {
    if (s != "single") AveragingSchedule::parse(s);
  }
  if (kind == ExperimentKind::kConvexCompare) {
    if (grid_alpha.empty() || grid_d.empty()) throw ConfigError("convex-compare needs a non-empty grid");
    for (double a : grid_alpha)
      if (!(a > 0.0)) throw ConfigError("grid alpha values must be positive");
    for (double d : grid_d)
      if (!(d > 0.0)) throw ConfigError("grid d values must be positive");
  }
  if ((kind == ExperimentKind::kConvexCompare || kind == ExperimentKind::kProfileEnvelope) &&
      data_path.empty() && synthetic.empty()) {
    throw ConfigError(to_string(kind) + " needs --data or --synthetic");
  }
  if (alpha < 0.0) throw ConfigError("alpha must be positive");
  if (kind == ExperimentKind::kLemmaSweep && trials < 2) throw ConfigError("need at least two trials");
}

Metadata ExperimentConfig::describe() const {
  return {
      {"experiment", to_string(kind)},
      {"data", data_path},
      {"synthetic", synthetic},
      {"model", model},
      {"scale_features", scale_features ? "true" : "false"},
      {"workers", std::to_string(workers)},
      {"steps", std::to_string(steps)},
      {"schedules", join(schedules, ';')},
      {"grid_alpha", join(grid_alpha)},
      {"grid_d", join(grid_d)},
      {"repeats", std::to_string(repeats)},
      {"seed", std::to_string(seed)},
      {"trace_every", std::to_string(trace_every)},
      {"threshold", format_double(threshold)},
      {"alpha", format_double(effective_alpha(*this))},
      {"dim", std::to_string(dim)},
      {"averaging_counts", join(averaging_counts)},
      {"sweep_c", join(sweep_c)},
      {"sweep_beta2", join(sweep_beta2)},
      {"sweep_sigma2", join(sweep_sigma2)},
      {"sweep_zeta", join(sweep_zeta)},
      {"trials", std::to_string(trials)},
      {"horizon", std::to_string(horizon)},
      {"period", std::to_string(period)},
  };
}

// ---------------------------------------------------------------------------
// Data

SparseDataset make_sparse_regression(std::size_t rows, std::size_t features, std::size_t nnz,
                                     double noise_sd, std::uint64_t seed) {
  if (nnz < 1 || nnz > features) throw ConfigError("sparse regression: need 1 <= nnz <= features");
  Rng rng(seed, kInitStream, 11);
  Eigen::VectorXd w_true(static_cast<Eigen::Index>(features));
  for (auto& x : w_true) x = rng.normal();
  SparseDataset ds;
  ds.n_features = features;
  ds.rows.resize(rows);
  std::vector<std::uint32_t> cols;
  for (auto& row : ds.rows) {
    cols.clear();
    while (cols.size() < nnz) {
      const auto c = static_cast<std::uint32_t>(rng.index(features) + 1);
      if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
    }
    std::sort(cols.begin(), cols.end());
    double label = 0.0;
    for (auto c : cols) {
      const double v = rng.normal();
      row.features.push_back({c, v});
      label += v * w_true[c - 1];
    }
    row.label = label + noise_sd * rng.normal();
  }
  return ds;
}

SparseDataset make_dense_regression(std::size_t rows, std::size_t features, double noise_sd, double w_scale,
                                    std::uint64_t seed, double condition) {
  if (!(condition >= 1.0)) throw ConfigError("dense regression: condition must be >= 1");
  Rng rng(seed, kInitStream, 12);
  const auto n = static_cast<Eigen::Index>(features);
  Eigen::VectorXd w_true(n);
  for (auto& x : w_true) x = w_scale * rng.normal();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows), n);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < n; ++k) a(i, k) = rng.normal();
  if (n > 1) {
    // Every direction contributes the same expected suboptimality at w = 0.
    for (Eigen::Index k = 0; k < n; ++k) {
      const double s = std::pow(condition, -0.5 * static_cast<double>(k) / static_cast<double>(n - 1));
      a.col(k) *= s;
      w_true[k] /= s;
    }
  }
  Eigen::VectorXd b = a * w_true;
  for (auto& x : b) x += noise_sd * rng.normal();
  return SparseDataset::from_dense(a, b);
}

SparseDataset make_synthetic_dataset(const std::string& spec, std::uint64_t seed) {
  const auto parts = split(spec, ':');
  try {
    if (parts.size() == 5 && parts[0] == "sparse") {
      return make_sparse_regression(std::stoul(parts[1]), std::stoul(parts[2]), std::stoul(parts[3]),
                                    parse_double(parts[4]), seed);
    }
    if ((parts.size() == 5 || parts.size() == 6) && parts[0] == "dense") {
      return make_dense_regression(std::stoul(parts[1]), std::stoul(parts[2]), parse_double(parts[3]),
                                   parse_double(parts[4]), seed, parts.size() == 6 ? parse_double(parts[5]) : 1.0);
    }
  } catch (const std::logic_error&) {
    // fall through to the format error below
  }
  throw ConfigError("bad synthetic spec '" + spec +
                    "' (expected sparse:ROWS:FEATURES:NNZ:NOISE or dense:ROWS:FEATURES:NOISE:WSCALE[:COND])");
}

std::unique_ptr<LinearModelObjective> make_objective(const ExperimentConfig& cfg) {
  SparseDataset ds = cfg.data_path.empty() ? make_synthetic_dataset(cfg.synthetic, cfg.seed)
                                           : load_libsvm(cfg.data_path);
  if (ds.n_rows() == 0 || ds.n_features == 0) throw ConfigError("dataset is empty");
  if (cfg.scale_features) scale_max_abs(ds);
  if (cfg.model == "lr") return std::make_unique<LogisticRegression>(ds);
  return std::make_unique<LeastSquares>(ds);
}

// ---------------------------------------------------------------------------
// convex-compare

ConvexCompareResult run_convex_compare(const FiniteSumObjective& obj, const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<std::string> tokens =
      cfg.schedules.empty() ? std::vector<std::string>{"single", "oneshot", "every:128", "every:1024"}
                            : cfg.schedules;
  const auto entries = resolve_schedules(tokens, cfg.workers);
  const std::size_t repeats = repeats_or(cfg, 3);

  ConvexCompareResult result;
  const ModelVector w0(obj.dimension());
  const double g0 = obj.full_gradient(w0).norm();
  const ModelVector w_star = find_optimum(obj, 1e-9 * std::max(1.0, g0));
  result.f0 = obj.value(w0);
  result.f_star = obj.value(w_star);
  const double f0 = result.f0;
  const double fs = result.f_star;
  // Validates f0 > f*.
  normalize_objective(f0, f0, fs);

  const std::size_t cells = cfg.grid_alpha.size() * cfg.grid_d.size();
  const std::size_t jobs = entries.size() * cells * repeats;
  std::vector<std::vector<double>> curves(jobs);
  std::vector<std::uint64_t> ticks;
  std::mutex ticks_mutex;

  parallel_jobs(jobs, cfg.threads, [&](std::size_t job) {
    const std::size_t e = job / (cells * repeats);
    const std::size_t cell = (job / repeats) % cells;
    const std::size_t r = job % repeats;
    ParallelRunConfig run;
    run.workers = entries[e].workers;
    run.total_steps = cfg.steps;
    run.schedule = entries[e].schedule;
    run.step = StepSchedule::inverse_time(cfg.grid_alpha[cell / cfg.grid_d.size()],
                                          cfg.grid_d[cell % cfg.grid_d.size()]);
    run.seed = derive_seed(cfg.seed, r);
    run.trace_every = cfg.trace_every;
    run.track_workers = false;
    const RunTrace trace = run_parallel(obj, run);
    std::vector<double> values;
    values.reserve(trace.records.size());
    for (const auto& rec : trace.records) {
      const double v = (rec.objective - fs) / (f0 - fs);
      values.push_back(std::isfinite(v) ? v : kInf);
    }
    curves[job] = std::move(values);
    if (job == 0) {
      std::lock_guard lock(ticks_mutex);
      for (const auto& rec : trace.records) ticks.push_back(rec.iter);
    }
  });

  const std::size_t n_ticks = ticks.size();
  for (std::size_t e = 0; e < entries.size(); ++e) {
    ConvexCurve curve;
    curve.label = entries[e].label;
    curve.iters = ticks;
    curve.normalized.assign(n_ticks, kInf);
    curve.best_alpha.assign(n_ticks, 0.0);
    curve.best_d.assign(n_ticks, 0.0);
    for (std::size_t cell = 0; cell < cells; ++cell) {
      for (std::size_t k = 0; k < n_ticks; ++k) {
        double sum = 0.0;
        for (std::size_t r = 0; r < repeats; ++r) sum += curves[(e * cells + cell) * repeats + r][k];
        const double avg = sum / static_cast<double>(repeats);
        if (avg < curve.normalized[k]) {
          curve.normalized[k] = avg;
          curve.best_alpha[k] = cfg.grid_alpha[cell / cfg.grid_d.size()];
          curve.best_d[k] = cfg.grid_d[cell % cfg.grid_d.size()];
        }
      }
    }
    for (std::size_t k = 0; k < n_ticks; ++k) {
      if (curve.normalized[k] <= cfg.threshold) {
        curve.iterations_to_threshold = curve.iters[k];
        break;
      }
    }
    result.curves.push_back(std::move(curve));
  }

  std::optional<std::uint64_t> oneshot;
  for (const auto& c : result.curves)
    if (c.label == "oneshot") oneshot = c.iterations_to_threshold;
  for (const auto& c : result.curves) {
    SpeedupRow row{c.label, c.iterations_to_threshold, std::nullopt};
    if (oneshot && c.iterations_to_threshold && *c.iterations_to_threshold > 0) {
      row.speedup_vs_oneshot = static_cast<double>(*oneshot) / static_cast<double>(*c.iterations_to_threshold);
    }
    result.speedups.push_back(row);
  }
  return result;
}

ConvexCompareResult run_convex_compare(const ExperimentConfig& cfg) {
  const auto obj = make_objective(cfg);
  return run_convex_compare(*obj, cfg);
}

// ---------------------------------------------------------------------------
// quartic

std::vector<ScheduleSummary> run_quartic(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<std::string> tokens =
      cfg.schedules.empty()
          ? std::vector<std::string>{"oneshot", "bernoulli:0.001", "bernoulli:0.1", "every:1000", "every:10"}
          : cfg.schedules;
  const auto entries = resolve_schedules(tokens, cfg.workers);
  const std::size_t seeds = repeats_or(cfg, 100);
  const QuarticDoubleWell obj;
  const double alpha = effective_alpha(cfg);

  std::vector<double> values(entries.size() * seeds);
  std::vector<double> events(entries.size() * seeds);
  parallel_jobs(values.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t e = job / seeds;
    ParallelRunConfig run;
    run.workers = entries[e].workers;
    run.total_steps = cfg.steps;
    run.schedule = entries[e].schedule;
    run.step = StepSchedule::constant(alpha);
    run.seed = derive_seed(cfg.seed, job % seeds);
    run.trace_every = 0;
    run.track_workers = false;
    const RunTrace trace = run_parallel(obj, run);
    values[job] = obj.value(trace.final_model);
    events[job] = static_cast<double>(trace.averaging_events);
  });

  std::vector<ScheduleSummary> out;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    ScheduleSummary s;
    s.label = entries[e].label;
    s.values.assign(values.begin() + static_cast<std::ptrdiff_t>(e * seeds),
                    values.begin() + static_cast<std::ptrdiff_t>((e + 1) * seeds));
    s.mean = mean_of(s.values);
    s.standard_error = standard_error_of(s.values);
    s.mean_events = mean_of(std::vector<double>(events.begin() + static_cast<std::ptrdiff_t>(e * seeds),
                                                events.begin() + static_cast<std::ptrdiff_t>((e + 1) * seeds)));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// pca

std::vector<ScheduleSummary> run_pca(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ScheduleEntry> entries;
  if (!cfg.schedules.empty()) {
    entries = resolve_schedules(cfg.schedules, cfg.workers);
  } else {
    std::vector<std::uint64_t> counts = cfg.averaging_counts;
    if (counts.empty()) counts = {1, 10, 100, 1000, cfg.steps};
    std::sort(counts.begin(), counts.end());
    counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
    for (auto c : counts) {
      if (c < 1 || c > cfg.steps) continue;
      if (c == 1) {
        entries.push_back({"oneshot", AveragingSchedule::one_shot(), cfg.workers});
      } else {
        const auto s = AveragingSchedule::every(cfg.steps / c);
        entries.push_back({s.to_string(), s, cfg.workers});
      }
    }
  }
  const std::size_t seeds = repeats_or(cfg, 100);
  const double alpha = effective_alpha(cfg);

  std::vector<double> values(entries.size() * seeds);
  std::vector<double> events(entries.size() * seeds);
  parallel_jobs(values.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t e = job / seeds;
    const std::uint64_t trial_seed = derive_seed(cfg.seed, job % seeds);
    const OjaPcaStream stream = OjaPcaStream::standard(cfg.dim, trial_seed);
    Rng init(trial_seed, kInitStream, 3);
    ParallelRunConfig run;
    run.workers = entries[e].workers;
    run.total_steps = cfg.steps;
    run.schedule = entries[e].schedule;
    run.step = StepSchedule::constant(alpha);
    run.seed = trial_seed;
    run.trace_every = 0;
    run.track_workers = false;
    run.initial = random_unit_vector(cfg.dim, init);
    const ModelVector& v1 = stream.principal_component();
    run.monitor = [&v1](const ModelVector& w) { return pca_error(w, v1); };
    const RunTrace trace = run_parallel(stream, run);
    values[job] = pca_error(trace.final_model, v1);
    events[job] = static_cast<double>(trace.averaging_events);
  });

  std::vector<ScheduleSummary> out;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    ScheduleSummary s;
    s.label = entries[e].label;
    s.values.assign(values.begin() + static_cast<std::ptrdiff_t>(e * seeds),
                    values.begin() + static_cast<std::ptrdiff_t>((e + 1) * seeds));
    s.mean = mean_of(s.values);
    s.standard_error = standard_error_of(s.values);
    s.mean_events = mean_of(std::vector<double>(events.begin() + static_cast<std::ptrdiff_t>(e * seeds),
                                                events.begin() + static_cast<std::ptrdiff_t>((e + 1) * seeds)));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// lemma-sweep

std::vector<LemmaRow> run_lemma_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const double alpha = effective_alpha(cfg);
  std::vector<LemmaRow> rows;
  std::uint64_t index = 0;
  for (double c : cfg.sweep_c) {
    for (double b2 : cfg.sweep_beta2) {
      for (double s2 : cfg.sweep_sigma2) {
        for (double z : cfg.sweep_zeta) {
          LemmaRow row;
          row.params = {alpha, c, b2, s2, cfg.workers, z};
          row.q_closed = asymptotic_variance(row.params);
          row.q_fixed_point = fixed_point(row.params).q;
          const auto mc = monte_carlo_variance(row.params, cfg.horizon, cfg.trials, derive_seed(cfg.seed, index++),
                                               NoiseDistribution::kGaussian, cfg.threads);
          row.q_monte_carlo = mc.estimate;
          row.mc_standard_error = mc.standard_error;
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// profile-envelope

EnvelopeProfile run_profile_envelope(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto obj = make_objective(cfg);
  const ModelVector w0(obj->dimension());
  const double g0 = obj->full_gradient(w0).norm();
  const ModelVector w_star = find_optimum(*obj, 1e-9 * std::max(1.0, g0));
  EnvelopeFitOptions opts;
  opts.seed = cfg.seed;
  EnvelopeProfile p;
  p.dataset = cfg.data_path.empty() ? file_label(cfg.synthetic)
                                    : std::filesystem::path(cfg.data_path).stem().string();
  p.model = cfg.model;
  p.envelope = fit_variance_envelope(*obj, w_star, w0, opts);
  p.gradient_norm_at_optimum = obj->full_gradient(w_star).norm();
  return p;
}

// ---------------------------------------------------------------------------
// equivalence

double run_equivalence(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto obj = HomogeneousQuadratic::random(8, 16, 0.5, 1.0, cfg.seed);
  return run_equivalence_harness(obj, cfg.workers, cfg.period, cfg.steps, cfg.seed);
}

// ---------------------------------------------------------------------------

namespace {

void write_summaries(std::ostream& out, const std::vector<ScheduleSummary>& rows, const Metadata& meta,
                     const std::string& value_name) {
  for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
  out << "schedule,mean_events," << value_name << ",stderr,seeds\n";
  for (const auto& r : rows) {
    out << r.label << ',' << format_double(r.mean_events) << ',' << format_double(r.mean) << ','
        << format_double(r.standard_error) << ',' << r.values.size() << '\n';
  }
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Metadata meta = cfg.describe();
  const bool write = !cfg.out_dir.empty();
  switch (cfg.kind) {
    case ExperimentKind::kConvexCompare: {
      const auto res = run_convex_compare(cfg);
      log << "f0=" << format_double(res.f0) << " f*=" << format_double(res.f_star) << '\n';
      for (const auto& s : res.speedups) {
        log << s.label << ": iterations to " << cfg.threshold << " = "
            << (s.iterations ? std::to_string(*s.iterations) : std::string("not reached"));
        if (s.speedup_vs_oneshot) log << ", speedup vs oneshot " << format_double(*s.speedup_vs_oneshot);
        log << '\n';
      }
      if (write) {
        for (const auto& c : res.curves) {
          auto out = open_output(cfg.out_dir, "curve_" + file_label(c.label) + ".csv");
          for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
          out << "iter,normalized_objective,best_alpha,best_d\n";
          for (std::size_t k = 0; k < c.iters.size(); ++k) {
            out << c.iters[k] << ',' << format_double(c.normalized[k]) << ',' << format_double(c.best_alpha[k])
                << ',' << format_double(c.best_d[k]) << '\n';
          }
        }
        auto out = open_output(cfg.out_dir, "speedup.csv");
        for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
        out << "schedule,iterations_to_threshold,speedup_vs_oneshot\n";
        for (const auto& s : res.speedups) {
          out << s.label << ',' << (s.iterations ? std::to_string(*s.iterations) : "") << ','
              << (s.speedup_vs_oneshot ? format_double(*s.speedup_vs_oneshot) : "") << '\n';
        }
      }
      break;
    }
    case ExperimentKind::kQuartic: {
      const auto rows = run_quartic(cfg);
      for (const auto& r : rows) {
        log << r.label << ": mean final objective " << format_double(r.mean) << " (se "
            << format_double(r.standard_error) << ")\n";
      }
      if (write) {
        auto out = open_output(cfg.out_dir, "quartic.csv");
        write_summaries(out, rows, meta, "mean_final_objective");
      }
      break;
    }
    case ExperimentKind::kPca: {
      const auto rows = run_pca(cfg);
      for (const auto& r : rows) {
        log << r.label << " (" << format_double(r.mean_events) << " averages): mean pca error "
            << format_double(r.mean) << '\n';
      }
      if (write) {
        auto out = open_output(cfg.out_dir, "pca.csv");
        write_summaries(out, rows, meta, "mean_pca_error");
      }
      break;
    }
    case ExperimentKind::kLemmaSweep: {
      const auto rows = run_lemma_sweep(cfg);
      std::ostringstream csv;
      for (const auto& [k, v] : meta) csv << "# " << k << '=' << v << '\n';
      csv << "alpha,c,beta2,sigma2,M,zeta,Q_closed,Q_fixedpoint,Q_montecarlo,mc_stderr\n";
      for (const auto& r : rows) {
        const auto& p = r.params;
        csv << format_double(p.alpha) << ',' << format_double(p.c) << ',' << format_double(p.beta2) << ','
            << format_double(p.sigma2) << ',' << p.workers << ',' << format_double(p.zeta) << ','
            << format_double(r.q_closed) << ',' << format_double(r.q_fixed_point) << ','
            << format_double(r.q_monte_carlo) << ',' << format_double(r.mc_standard_error) << '\n';
      }
      log << csv.str();
      if (write) open_output(cfg.out_dir, "lemma_sweep.csv") << csv.str();
      break;
    }
    case ExperimentKind::kProfileEnvelope: {
      const auto p = run_profile_envelope(cfg);
      write_envelope_report(log, p.dataset, p.model, p.envelope);
      if (write) {
        const std::vector<EnvelopeRow> rows{make_envelope_row(p.dataset, p.model, p.envelope)};
        auto csv = open_output(cfg.out_dir, "envelope.csv");
        write_envelope_csv(csv, rows, meta);
        auto txt = open_output(cfg.out_dir, "envelope.txt");
        for (const auto& [k, v] : meta) txt << "# " << k << '=' << v << '\n';
        write_envelope_report(txt, p.dataset, p.model, p.envelope);
      }
      break;
    }
    case ExperimentKind::kEquivalence: {
      const double dev = run_equivalence(cfg);
      log << "max relative deviation " << format_double(dev) << '\n';
      if (write) {
        auto out = open_output(cfg.out_dir, "equivalence.csv");
        for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
        out << "workers,period,steps,max_relative_deviation\n"
            << cfg.workers << ',' << cfg.period << ',' << cfg.steps << ',' << format_double(dev) << '\n';
      }
      break;
    }
  }
}

}  // namespace modelavg
