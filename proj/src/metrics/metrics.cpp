#include "echo/metrics/metrics.hpp"

#include "echo/errors.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

namespace echo {

namespace {

void check_pair(const Motion& p, const Motion& g, const char* what) {
  if (p.representation() != Representation::euclidean_xyz ||
      g.representation() != Representation::euclidean_xyz) {
    throw DataError(std::string(what) + " needs euclidean_xyz motions");
  }
  if (p.frames() != g.frames() || p.joints() != g.joints()) {
    throw DataError(std::string(what) + ": shape mismatch (" + std::to_string(p.frames()) + "x" +
                    std::to_string(p.joints()) + " vs " + std::to_string(g.frames()) + "x" +
                    std::to_string(g.joints()) + ")");
  }
}

void check_set(const std::vector<Motion>& pred, const std::vector<Motion>& gt, const char* what) {
  if (pred.empty() || pred.size() != gt.size()) {
    throw DataError(std::string(what) + ": agent count mismatch");
  }
  for (size_t i = 0; i < pred.size(); ++i) check_pair(pred[i], gt[i], what);
}

void check_frame(const Motion& m, int t, const char* what) {
  if (t < 0 || t >= m.frames()) {
    throw DataError(std::string(what) + ": frame " + std::to_string(t) + " outside [0, " +
                    std::to_string(m.frames()) + ")");
  }
}

double dist(const Vec3& a, const Vec3& b, bool squared) {
  const double d2 = (a - b).squaredNorm();
  return squared ? d2 : std::sqrt(d2);
}

double joint_error(const std::vector<Motion>& pred, const std::vector<Motion>& gt, int t,
                   const MetricOptions& opt, bool aligned) {
  double acc = 0.0;
  int count = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const Motion& p = pred[i];
    const Motion& g = gt[i];
    if (aligned && (opt.root < 0 || opt.root >= p.joints())) throw DataError("root index out of range");
    const Vec3 pr = aligned ? p.position(t, opt.root) : Vec3::Zero();
    const Vec3 gr = aligned ? g.position(t, opt.root) : Vec3::Zero();
    for (int j = 0; j < p.joints(); ++j) {
      acc += dist(p.position(t, j) - pr, g.position(t, j) - gr, opt.squared);
      ++count;
    }
  }
  return acc / count;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_horizon(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

double jpe(const std::vector<Motion>& pred, const std::vector<Motion>& gt, int t,
           const MetricOptions& opt) {
  check_set(pred, gt, "jpe");
  check_frame(pred[0], t, "jpe");
  return joint_error(pred, gt, t, opt, false);
}

double ajpe(const std::vector<Motion>& pred, const std::vector<Motion>& gt, int t,
            const MetricOptions& opt) {
  check_set(pred, gt, "ajpe");
  check_frame(pred[0], t, "ajpe");
  return joint_error(pred, gt, t, opt, true);
}

double fde_at(const std::vector<Motion>& pred, const std::vector<Motion>& gt, int t,
              const MetricOptions& opt) {
  check_set(pred, gt, "fde");
  check_frame(pred[0], t, "fde");
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (opt.root < 0 || opt.root >= pred[i].joints()) throw DataError("root index out of range");
    acc += dist(pred[i].position(t, opt.root), gt[i].position(t, opt.root), opt.squared);
  }
  return acc / static_cast<double>(pred.size());
}

double fde(const std::vector<Motion>& pred, const std::vector<Motion>& gt, const MetricOptions& opt) {
  if (pred.empty() || pred[0].frames() == 0) throw DataError("fde: empty prediction");
  return fde_at(pred, gt, pred[0].frames() - 1, opt);
}

double mpjpe(const Motion& pred, const Motion& gt, int t, const MetricOptions& opt) {
  check_pair(pred, gt, "mpjpe");
  check_frame(pred, t, "mpjpe");
  return joint_error({pred}, {gt}, t, opt, false);
}

int horizon_frame(double fps, int observed_len, int total_frames, double horizon_s) {
  const double k = horizon_s * fps;
  const double rk = std::round(k);
  std::ostringstream where;
  where << "horizon " << horizon_s << " s at " << fps << " fps";
  if (std::abs(k - rk) > 1e-9) {
    throw DataError(where.str() + " is " + fmt(k) + " frames, not an integer frame offset");
  }
  const int frame = observed_len - 1 + static_cast<int>(rk);
  if (rk < 1 || frame >= total_frames) {
    throw DataError(where.str() + " maps to frame " + std::to_string(frame) +
                    ", outside the predicted range [" + std::to_string(observed_len) + ", " +
                    std::to_string(total_frames) + ")");
  }
  return frame;
}

// ---- reports ------------------------------------------------------------------

double MetricsReport::value(const std::string& metric, double horizon_s) const {
  for (const auto& r : rows) {
    if (r.metric == metric && std::abs(r.horizon_s - horizon_s) < 1e-9) return r.value_mm;
  }
  throw DataError("report has no row for " + metric + " at " + fmt_horizon(horizon_s) + " s");
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << "\n";
  out << "metric,horizon_s,value_mm\n";
  for (const auto& r : rows) out << r.metric << "," << fmt_horizon(r.horizon_s) << "," << fmt(r.value_mm) << "\n";
  return out.str();
}

void MetricsReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << to_csv();
}

MetricsReport MetricsReport::read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read " + path.string());
  MetricsReport rep;
  std::string line;
  bool header = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos && line.size() > 2) {
        const size_t vstart = std::min(line.size(), colon + 2);
        rep.metadata[line.substr(2, colon - 2)] = line.substr(vstart);
      }
      continue;
    }
    if (!header) {
      if (line != "metric,horizon_s,value_mm") throw DataError(path.string() + ": unexpected header");
      header = true;
      continue;
    }
    std::istringstream ss(line);
    std::string m, h, v;
    if (!std::getline(ss, m, ',') || !std::getline(ss, h, ',') || !std::getline(ss, v)) {
      throw DataError(path.string() + ": malformed row '" + line + "'");
    }
    try {
      rep.rows.push_back({m, std::stod(h), std::stod(v)});
    } catch (const std::exception&) {
      throw DataError(path.string() + ": malformed row '" + line + "'");
    }
  }
  if (!header) throw DataError(path.string() + ": missing header");
  return rep;
}

// ---- evaluation -----------------------------------------------------------------

Forecaster model_forecaster(const EchoModel& model) {
  return [&model](const TrainingSample& s) { return model.predict(s).motions; };
}

Forecaster baseline_forecaster() {
  return [](const TrainingSample& s) { return zero_velocity_baseline(s); };
}

namespace {

bool all_xyz(const TrainingSample& s) {
  return s.target[0].representation() == Representation::euclidean_xyz &&
         s.target[1].representation() == Representation::euclidean_xyz;
}

// Metric values for one sample, [metric][horizon].
std::vector<std::vector<double>> score_sample(const Forecaster& f, const TrainingSample& s,
                                              const EvalOptions& opt, bool dyadic_xyz) {
  const auto pred = f(s);
  const std::vector<Motion> p(pred.begin(), pred.end());
  const std::vector<Motion> g(s.target.begin(), s.target.end());
  const double fps = s.target[0].fps();
  std::vector<std::vector<double>> out(dyadic_xyz ? 3 : 1, std::vector<double>(opt.horizons.size()));
  for (size_t h = 0; h < opt.horizons.size(); ++h) {
    const int t = horizon_frame(fps, s.observed_len, s.frames(), opt.horizons[h]);
    if (dyadic_xyz) {
      out[0][h] = jpe(p, g, t, opt.metric);
      out[1][h] = ajpe(p, g, t, opt.metric);
      out[2][h] = fde_at(p, g, t, opt.metric);
    } else {
      const int human = s.target[0].representation() == Representation::euclidean_xyz ? 0 : 1;
      out[0][h] = mpjpe(p[human], g[human], t, opt.metric);
    }
  }
  return out;
}

}  // namespace

PerSampleMetrics per_sample_metrics(const Forecaster& f, const std::vector<TrainingSample>& samples,
                                    const EvalOptions& opt) {
  if (samples.empty()) throw DataError("evaluation set is empty");
  if (opt.horizons.empty()) throw UsageError("no horizons requested");
  const bool dyadic = all_xyz(samples[0]);
  for (const auto& s : samples) {
    if (all_xyz(s) != dyadic) throw DataError("evaluation set mixes human-human and human-robot samples");
    if (!dyadic && s.target[0].representation() == s.target[1].representation()) {
      throw DataError("sample has no euclidean_xyz agent to score");
    }
    // Validate horizons up front so a bad horizon is reported before any work.
    for (double h : opt.horizons) horizon_frame(s.target[0].fps(), s.observed_len, s.frames(), h);
  }

  PerSampleMetrics r;
  r.metrics = dyadic ? std::vector<std::string>{"JPE", "AJPE", "FDE"} : std::vector<std::string>{"MPJPE"};
  r.horizons = opt.horizons;
  const int n = static_cast<int>(samples.size());
  std::vector<std::vector<std::vector<double>>> per(samples.size());
  if (opt.parallel) {
    std::vector<std::exception_ptr> errors(samples.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      try {
        per[i] = score_sample(f, samples[i], opt, dyadic);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (int i = 0; i < n; ++i) per[i] = score_sample(f, samples[i], opt, dyadic);
  }

  r.values.assign(r.metrics.size(), std::vector<std::vector<double>>(opt.horizons.size(), std::vector<double>(samples.size())));
  for (size_t i = 0; i < samples.size(); ++i) {
    for (size_t m = 0; m < r.metrics.size(); ++m) {
      for (size_t h = 0; h < opt.horizons.size(); ++h) r.values[m][h][i] = per[i][m][h];
    }
  }
  return r;
}

MetricsReport evaluate_model(const Forecaster& f, const std::vector<TrainingSample>& samples,
                             const EvalOptions& opt) {
  const auto ps = per_sample_metrics(f, samples, opt);
  MetricsReport rep;
  for (size_t m = 0; m < ps.metrics.size(); ++m) {
    for (size_t h = 0; h < ps.horizons.size(); ++h) {
      double acc = 0.0;
      for (double v : ps.values[m][h]) acc += v;
      rep.rows.push_back({ps.metrics[m], ps.horizons[h], acc / static_cast<double>(samples.size())});
    }
  }
  std::ostringstream mapping;
  const double fps = samples[0].target[0].fps();
  for (size_t h = 0; h < ps.horizons.size(); ++h) {
    if (h) mapping << ";";
    mapping << fmt_horizon(ps.horizons[h]) << "s->frame"
            << horizon_frame(fps, samples[0].observed_len, samples[0].frames(), ps.horizons[h]);
  }
  rep.metadata["fps"] = fmt(fps);
  rep.metadata["frame_mapping"] = mapping.str();
  rep.metadata["samples"] = std::to_string(samples.size());
  return rep;
}

}  // namespace echo
