#include "modelavg/parallel.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

namespace modelavg {

AveragingSchedule AveragingSchedule::every(std::uint64_t k) {
  if (k < 1) throw ConfigError("every-K schedule needs K >= 1");
  return {Kind::kEveryK, k, 0.0};
}

AveragingSchedule AveragingSchedule::bernoulli(double zeta) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw ConfigError("Bernoulli schedule needs zeta in [0, 1]");
  return {Kind::kBernoulli, 0, zeta};
}

AveragingSchedule AveragingSchedule::parse(const std::string& text) {
  if (text == "oneshot") return one_shot();
  if (text == "minibatch") return mini_batch();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    const std::string arg = text.substr(colon + 1);
    const char* first = arg.data();
    const char* last = arg.data() + arg.size();
    if (head == "every") {
      std::uint64_t k = 0;
      auto [ptr, ec] = std::from_chars(first, last, k);
      if (ec == std::errc() && ptr == last && !arg.empty()) return every(k);
    } else if (head == "bernoulli") {
      double z = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, z);
      if (ec == std::errc() && ptr == last && !arg.empty()) return bernoulli(z);
    }
  }
  throw ConfigError("unknown averaging schedule '" + text +
                    "' (expected oneshot, every:K, bernoulli:Z or minibatch)");
}

std::string AveragingSchedule::to_string() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::kOneShot: os << "oneshot"; break;
    case Kind::kEveryK: os << "every:" << k_; break;
    case Kind::kBernoulli: os << "bernoulli:" << zeta_; break;
    case Kind::kMiniBatch: os << "minibatch"; break;
  }
  return os.str();
}

bool AveragingSchedule::averages_after(std::uint64_t completed, std::uint64_t seed) const {
  switch (kind_) {
    case Kind::kOneShot: return false;
    case Kind::kEveryK: return completed % k_ == 0;
    case Kind::kMiniBatch: return true;
    case Kind::kBernoulli: {
      // One coin per global step, independent of the worker streams.
      Rng coin(seed, kCoordinatorStream, completed);
      return coin.uniform() < zeta_;
    }
  }
  return false;
}

void ParallelRunConfig::validate() const {
  if (workers < 1) throw ConfigError("need at least one worker");
  if (total_steps < 1) throw ConfigError("need at least one step");
  if (threads < 1) throw ConfigError("need at least one thread");
  if (initial && initial->size() == 0) throw ConfigError("initial model is empty");
}

namespace {

template <typename Get>
ModelVector incremental_mean(std::size_t count, Get get) {
  ModelVector mean = get(0);
  for (std::size_t i = 1; i < count; ++i) {
    const ModelVector& x = get(i);
    mean.check(x, "average");
    mean.values() += (x.values() - mean.values()) / static_cast<double>(i + 1);
  }
  return mean;
}

/// Fork/join over a fixed set of threads. Worker indices are split into
/// contiguous chunks, one per thread; the calling thread takes chunk 0.
class WorkerPool {
 public:
  WorkerPool(std::size_t threads, std::size_t workers)
      : threads_(std::max<std::size_t>(1, std::min(threads, workers))), workers_(workers),
        start_(static_cast<std::ptrdiff_t>(threads_)), done_(static_cast<std::ptrdiff_t>(threads_)) {
    for (std::size_t t = 1; t < threads_; ++t) helpers_.emplace_back([this, t] { loop(t); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    if (!helpers_.empty()) {
      stop_ = true;
      start_.arrive_and_wait();
      for (auto& h : helpers_) h.join();
    }
  }

  void run(const std::function<void(std::size_t)>& task) {
    if (helpers_.empty()) {
      for (std::size_t i = 0; i < workers_; ++i) task(i);
      return;
    }
    task_ = &task;
    start_.arrive_and_wait();
    run_chunk(0);
    done_.arrive_and_wait();
    task_ = nullptr;
    if (error_) {
      auto e = error_;
      error_ = nullptr;
      std::rethrow_exception(e);
    }
  }

 private:
  void loop(std::size_t t) {
    for (;;) {
      start_.arrive_and_wait();
      if (stop_) return;
      run_chunk(t);
      done_.arrive_and_wait();
    }
  }

  void run_chunk(std::size_t t) {
    const std::size_t lo = t * workers_ / threads_;
    const std::size_t hi = (t + 1) * workers_ / threads_;
    try {
      for (std::size_t i = lo; i < hi; ++i) (*task_)(i);
    } catch (...) {
      std::lock_guard lock(error_mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }

  std::size_t threads_;
  std::size_t workers_;
  std::barrier<> start_;
  std::barrier<> done_;
  std::vector<std::thread> helpers_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  bool stop_ = false;
  std::exception_ptr error_;
  std::mutex error_mutex_;
};

std::uint64_t next_averaging_step(const AveragingSchedule& s, std::uint64_t after, std::uint64_t total,
                                  std::uint64_t seed) {
  switch (s.kind()) {
    case AveragingSchedule::Kind::kOneShot: return total;
    case AveragingSchedule::Kind::kMiniBatch: return std::min(total, after + 1);
    case AveragingSchedule::Kind::kEveryK:
      return std::min(total, (after / s.period() + 1) * s.period());
    case AveragingSchedule::Kind::kBernoulli:
      for (std::uint64_t t = after + 1; t < total; ++t) {
        if (s.averages_after(t, seed)) return t;
      }
      return total;
  }
  return total;
}

}  // namespace

ModelVector average_models(std::span<const ModelVector> models) {
  if (models.empty()) throw std::invalid_argument("average_models: empty list");
  return incremental_mean(models.size(), [&](std::size_t i) -> const ModelVector& { return models[i]; });
}

double worker_spread(std::span<const ModelVector> models) {
  const ModelVector mean = average_models(models);
  double total = 0.0;
  for (const auto& w : models) total += squared_distance(w, mean);
  return total / static_cast<double>(models.size());
}

RunTrace run_parallel(const Objective& obj, const ParallelRunConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::size_t n = obj.dimension();
  const ModelVector w0 = cfg.initial.value_or(ModelVector(n));
  require_dimension(w0, n, "run_parallel initial model");
  const auto monitor = cfg.monitor ? cfg.monitor : [&obj](const ModelVector& w) { return obj.value(w); };

  const std::size_t m = cfg.workers;
  const std::uint64_t total = cfg.total_steps;
  std::vector<WorkerState> workers(m);
  for (std::size_t i = 0; i < m; ++i) workers[i] = {i, w0, 0, cfg.seed};
  auto model_of = [&](std::size_t i) -> const ModelVector& { return workers[i].model; };

  RunTrace trace;
  auto record = [&](std::uint64_t iter) {
    TraceRecord rec;
    rec.iter = iter;
    rec.objective = monitor(incremental_mean(m, model_of));
    if (cfg.track_workers) {
      rec.worker_min = std::numeric_limits<double>::infinity();
      rec.worker_max = -std::numeric_limits<double>::infinity();
      for (const auto& w : workers) {
        const double v = monitor(w.model);
        rec.worker_min = std::min(rec.worker_min, v);
        rec.worker_max = std::max(rec.worker_max, v);
      }
    } else {
      rec.worker_min = rec.worker_max = rec.objective;
    }
    rec.avg_events = trace.averaging_events;
    rec.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    trace.records.push_back(rec);
  };

  WorkerPool pool(cfg.threads, m);
  record(0);
  std::uint64_t done = 0;
  std::uint64_t next_avg = next_averaging_step(cfg.schedule, 0, total, cfg.seed);
  while (done < total) {
    const std::uint64_t r = cfg.trace_every;
    const std::uint64_t next_tick = r == 0 ? total : std::min(total, (done / r + 1) * r);
    const std::uint64_t segment_end = std::min(next_avg, next_tick);
    const std::uint64_t len = segment_end - done;
    pool.run([&](std::size_t i) { run_worker_phase(workers[i], obj, cfg.step, len); });
    done = segment_end;
    if (done == next_avg || done == total) {
      const ModelVector avg = incremental_mean(m, model_of);
      for (auto& w : workers) w.model = avg;
      ++trace.averaging_events;
      if (done == next_avg) next_avg = next_averaging_step(cfg.schedule, done, total, cfg.seed);
    }
    if (done == next_tick) record(done);
  }
  trace.final_model = workers.front().model;
  return trace;
}

double run_equivalence_harness(const HomogeneousQuadratic& obj, std::size_t workers, std::uint64_t k,
                               std::uint64_t steps, std::uint64_t seed, std::optional<double> alpha) {
  double step = 0.0;
  if (alpha) {
    step = *alpha;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(obj.hessian(), Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    step = lmax > 0.0 ? 0.5 / lmax : 0.1;
  }
  ParallelRunConfig cfg;
  cfg.workers = workers;
  cfg.total_steps = steps;
  cfg.step = StepSchedule::constant(step);
  cfg.seed = seed;
  cfg.trace_every = 0;
  cfg.track_workers = false;

  std::vector<ModelVector> finals;
  for (const auto& s : {AveragingSchedule::one_shot(), AveragingSchedule::mini_batch(),
                        AveragingSchedule::every(k)}) {
    cfg.schedule = s;
    finals.push_back(run_parallel(obj, cfg).final_model);
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < finals.size(); ++a) {
    for (std::size_t b = a + 1; b < finals.size(); ++b) {
      const double scale = std::max(finals[a].norm(), finals[b].norm());
      const double diff = std::sqrt(squared_distance(finals[a], finals[b]));
      if (diff > 0.0) worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
    }
  }
  return worst;
}

double run_equivalence_harness(const Objective& obj, std::size_t workers, std::uint64_t k,
                               std::uint64_t steps, std::uint64_t seed, std::optional<double> alpha) {
  const auto* quad = dynamic_cast<const HomogeneousQuadratic*>(&obj);
  if (quad == nullptr) {
    throw std::invalid_argument("equivalence harness requires a homogeneous quadratic, got " + obj.name());
  }
  return run_equivalence_harness(*quad, workers, k, steps, seed, alpha);
}

}  // namespace modelavg
