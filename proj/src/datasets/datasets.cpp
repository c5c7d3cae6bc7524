#include "echo/datasets/datasets.hpp"

#include "echo/core/chain.hpp"
#include "echo/core/skeleton.hpp"
#include "echo/errors.hpp"
#include "echo/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace echo {

using nlohmann::json;

Motion pad_observation(const Motion& past, int T) {
  const int N = past.frames();
  if (N < 1) throw DataError("pad_observation: past motion is empty");
  if (N > T) {
    throw DataError("pad_observation: observed length " + std::to_string(N) +
                    " exceeds target length " + std::to_string(T));
  }
  Matrix out(T, past.width());
  out.topRows(N) = past.data();
  for (int t = N; t < T; ++t) out.row(t) = past.data().row(N - 1);
  return Motion(std::move(out), past.joints(), past.representation(), past.fps());
}

TrainingSample window_scene(const SocialScene& scene, int N, int T, int start) {
  if (start < 0 || scene.frames() < start + T) {
    throw DataError("scene has " + std::to_string(scene.frames()) + " frames, window needs " +
                    std::to_string(start + T));
  }
  if (N < 1 || N >= T) {
    throw DataError("observed frames N=" + std::to_string(N) + " must satisfy 1 <= N < T=" +
                    std::to_string(T));
  }
  TrainingSample s;
  s.intent = scene.intent();
  s.observed_len = N;
  for (int i = 0; i < SocialScene::kAgents; ++i) {
    const Motion window = scene.agent(i).slice(start, start + T);
    s.target[i] = window;
    s.x_ind[i] = pad_observation(window.slice(0, N), T);
    s.x_ref[i] = window.pose(N - 1);
  }
  return s;
}

std::vector<TrainingSample> sliding_windows(const SocialScene& scene, int N, int T, int stride) {
  if (stride < 1) throw DataError("window stride must be >= 1");
  std::vector<TrainingSample> out;
  for (int start = 0; start + T <= scene.frames(); start += stride) {
    out.push_back(window_scene(scene, N, T, start));
  }
  if (out.empty()) {
    throw DataError("scene has " + std::to_string(scene.frames()) + " frames, window needs " +
                    std::to_string(T));
  }
  return out;
}

WindowLengths window_lengths(double fps, double observed_s, double predicted_s) {
  auto frames = [fps](double seconds, const char* what) {
    const double raw = seconds * fps;
    const double r = std::round(raw);
    if (std::abs(raw - r) > 1e-9 || r < 1) {
      std::ostringstream msg;
      msg << what << " " << seconds << " s at " << fps << " fps is not a whole number of frames";
      throw DataError(msg.str());
    }
    return static_cast<int>(r);
  };
  const int n = frames(observed_s, "observation");
  return {n, n + frames(predicted_s, "prediction")};
}

// ---- synthetic --------------------------------------------------------------

namespace {

/// Random keyframes joined by cosine easing; smooth but not extrapolable.
class KeyframeCurve {
 public:
  KeyframeCurve(Rng& rng, int first_frame, int frames, int spacing, double amplitude)
      : first_(first_frame), spacing_(spacing) {
    const int keys = frames / spacing + 2;
    keys_.reserve(static_cast<size_t>(keys));
    for (int k = 0; k < keys; ++k) keys_.push_back(rng.uniform(-amplitude, amplitude));
  }

  double at(int t) const {
    const double u = static_cast<double>(t - first_) / spacing_;
    const int k = static_cast<int>(std::floor(u));
    const double f = u - k;
    const double s = 0.5 - 0.5 * std::cos(std::numbers::pi * f);
    return keys_[k] * (1.0 - s) + keys_[k + 1] * s;
  }

 private:
  int first_;
  int spacing_;
  std::vector<double> keys_;
};

Vec3 random_unit(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (v.norm() < 1e-6);
  return v.normalized();
}

uint64_t kind_stream(std::string_view kind) {
  for (size_t i = 0; i < kSyntheticKinds.size(); ++i) {
    if (kSyntheticKinds[i] == kind) return i;
  }
  throw DataError("unknown synthetic scene kind '" + std::string(kind) +
                  "' (expected handshake, mirror or circle)");
}

}  // namespace

int synthetic_delay(int T, const SyntheticOptions& options) {
  const int N = options.observed_len > 0 ? options.observed_len : T / 2;
  return options.delay >= 0 ? options.delay : T - N;
}

Motion reflect_x(const Motion& motion) {
  if (motion.representation() != Representation::euclidean_xyz) {
    throw DataError("reflect_x needs euclidean_xyz");
  }
  Matrix m = motion.data();
  for (int j = 0; j < motion.joints(); ++j) m.col(3 * j) *= -1.0;
  return Motion(std::move(m), motion.joints(), motion.representation(), motion.fps());
}

SocialScene synthesize_dyadic_scene(std::string_view kind, uint64_t seed, int T, double fps,
                                    const SkeletonSpec& skeleton,
                                    const SyntheticOptions& options) {
  const uint64_t stream = kind_stream(kind);
  if (T < 2) throw DataError("synthetic scene needs T >= 2");
  if (!(fps > 0)) throw DataError("synthetic scene needs fps > 0");
  const int N = options.observed_len > 0 ? options.observed_len : std::max(1, T / 2);
  const int d = synthetic_delay(T, options);
  const int spacing = std::max(1, options.keyframe_spacing);
  Rng rng(mix_seed(seed, stream));

  const int J = skeleton.joints();
  const int first = -d;
  const int span = T + d;

  // Agent 0 body animation over frames [-d, T).
  std::vector<Vec3> axes;
  std::vector<KeyframeCurve> angles;
  for (int j = 0; j < J; ++j) {
    axes.push_back(j == 0 ? Vec3::UnitY() : random_unit(rng));
    angles.emplace_back(rng, first, span, spacing,
                        j == 0 ? 0.5 * options.joint_amplitude_rad : options.joint_amplitude_rad);
  }
  const Vec3 rest_root = skeleton.rest_offsets().row(0).transpose();

  auto local_pose = [&](int t) {
    Matrix pos(J, 3);
    std::vector<Mat3> global(static_cast<size_t>(J));
    for (int j = 0; j < J; ++j) {
      const Mat3 local = axis_angle(axes[j], angles[j].at(t));
      const int p = skeleton.parents()[j];
      if (p < 0) {
        global[j] = local;
        pos.row(j).setZero();
      } else {
        global[j] = global[p] * local;
        pos.row(j) = pos.row(p) + (global[p] * skeleton.rest_offsets().row(j).transpose()).transpose();
      }
    }
    return pos;
  };

  KeyframeCurve wander_x(rng, first, span, spacing, options.root_wander_mm);
  KeyframeCurve wander_z(rng, first, span, spacing, 2.0 * options.root_wander_mm);
  const double x_start = options.separation_mm + rng.uniform(0.0, 300.0);
  const double x_end = rng.uniform(0.15, 0.4) * options.separation_mm;
  const double rate = rng.uniform(1.0, 3.0);
  const double phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double omega = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.03, 0.1);

  auto root_path = [&](int t) -> Vec3 {
    if (kind == "mirror") {
      return rest_root + Vec3(options.separation_mm + wander_x.at(t), 0.0, wander_z.at(t));
    }
    if (kind == "handshake") {
      const double u = static_cast<double>(t - first) / std::max(1, span - 1);
      const double x = x_end + (x_start - x_end) * std::exp(-rate * u);
      return rest_root + Vec3(x, 0.0, 0.25 * wander_z.at(t));
    }
    const double phi = phase0 + omega * t;
    return rest_root + Vec3(options.separation_mm * std::cos(phi), 0.0,
                            options.separation_mm * std::sin(phi));
  };

  // Maps an agent-0 point onto agent 1's side of the scene.
  Mat3 partner = Mat3::Identity();
  if (kind == "circle") {
    partner = axis_angle(Vec3::UnitY(), std::numbers::pi);
  } else {
    partner(0, 0) = -1.0;
  }

  Matrix a0(T, 3 * J), a1(T, 3 * J);
  for (int t = 0; t < T; ++t) {
    const Matrix l0 = local_pose(t);
    const Matrix l0_delayed = local_pose(t - d);
    const Vec3 r0 = root_path(t);
    const Vec3 r1 = kind == "mirror" ? partner * root_path(t - d) : partner * r0;
    for (int j = 0; j < J; ++j) {
      const Vec3 p0 = l0.row(j).transpose() + r0;
      const Vec3 p1 = partner * l0_delayed.row(j).transpose() + r1;
      a0.block<1, 3>(t, 3 * j) = p0.transpose();
      a1.block<1, 3>(t, 3 * j) = p1.transpose();
    }
  }
  return SocialScene(std::array<Motion, 2>{Motion(a0, J, Representation::euclidean_xyz, fps),
                                           Motion(a1, J, Representation::euclidean_xyz, fps)},
                     std::string(kind), N);
}

// ---- file adapters ----------------------------------------------------------

namespace {

Motion motion_from_json(const json& agent, double fps, int index) {
  const Representation rep =
      representation_from_string(agent.value("representation", std::string("euclidean_xyz")));
  const int n = coords_per_joint(rep);
  const auto& frames = agent.at("frames");
  if (!frames.is_array() || frames.empty()) {
    throw DataError("agent " + std::to_string(index) + " has no frames");
  }
  const int T = static_cast<int>(frames.size());
  const int J = static_cast<int>(frames[0].size());
  if (J == 0) throw DataError("agent " + std::to_string(index) + " has no joints");
  Matrix data(T, J * n);
  for (int t = 0; t < T; ++t) {
    const auto& frame = frames[t];
    if (static_cast<int>(frame.size()) != J) {
      throw DataError("agent " + std::to_string(index) + " frame " + std::to_string(t) +
                      " has " + std::to_string(frame.size()) + " joints, expected " +
                      std::to_string(J));
    }
    for (int j = 0; j < J; ++j) {
      const auto& joint = frame[j];
      if (n == 1 && joint.is_number()) {
        data(t, j) = joint.get<double>();
        continue;
      }
      if (static_cast<int>(joint.size()) != n) {
        throw DataError("agent " + std::to_string(index) + " frame " + std::to_string(t) +
                        " joint " + std::to_string(j) + " must have " + std::to_string(n) +
                        " coordinates");
      }
      for (int c = 0; c < n; ++c) data(t, j * n + c) = joint[c].get<double>();
    }
  }
  return Motion(std::move(data), J, rep, fps);
}

struct ParsedScene {
  std::vector<Motion> agents;
  std::string intent;
  int observed_len = 0;
};

ParsedScene parse_scene(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (!j.contains("fps")) throw DataError("scene file has no fps; an explicit fps is required");
    const double fps = j.at("fps").get<double>();
    if (!(fps > 0)) throw DataError("scene fps must be positive");
    ParsedScene out;
    out.intent = j.value("intent", std::string());
    out.observed_len = j.at("observed_len").get<int>();
    const auto& agents = j.at("agents");
    for (size_t i = 0; i < agents.size(); ++i) {
      out.agents.push_back(motion_from_json(agents[i], fps, static_cast<int>(i)));
    }
    return out;
  } catch (const json::exception& e) {
    throw DataError(std::string("scene parse failure: ") + e.what());
  }
}

void check_agents(const std::vector<Motion>& agents) {
  if (agents.size() != SocialScene::kAgents) {
    throw DataError("scene must be dyadic (2 agents), got " + std::to_string(agents.size()));
  }
  if (agents[0].frames() != agents[1].frames()) {
    throw DataError("agent frame counts differ: " + std::to_string(agents[0].frames()) + " vs " +
                    std::to_string(agents[1].frames()));
  }
  for (size_t i = 0; i < agents.size(); ++i) {
    const auto issues = validate_motion(agents[i]);
    if (!issues.empty()) {
      throw DataError("agent " + std::to_string(i) + ": " + issues.front().message);
    }
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SocialScene scene_from_json_text(const std::string& text) {
  ParsedScene p = parse_scene(text);
  check_agents(p.agents);
  if (p.agents[0].representation() != p.agents[1].representation() ||
      p.agents[0].joints() != p.agents[1].joints()) {
    throw DataError("scene agents differ in representation or joint count; use the CHICO adapter "
                    "for heterogeneous human/robot scenes");
  }
  return SocialScene(std::move(p.agents), std::move(p.intent), p.observed_len);
}

SocialScene load_scene_file(const std::filesystem::path& path) {
  return scene_from_json_text(read_text(path));
}

SocialScene chico_from_json_text(const std::string& text) {
  ParsedScene p = parse_scene(text);
  int humans = 0, robots = 0;
  for (const auto& a : p.agents) {
    (a.representation() == Representation::euclidean_xyz ? humans : robots) += 1;
  }
  if (robots == 0) throw DataError("CHICO sequence has no robot (joint_angle) stream");
  if (humans == 0) throw DataError("CHICO sequence has no human (euclidean_xyz) stream");
  check_agents(p.agents);
  return SocialScene(std::move(p.agents), std::move(p.intent), p.observed_len);
}

SocialScene load_chico_sequence(const std::filesystem::path& path) {
  return chico_from_json_text(read_text(path));
}

std::string scene_to_json_text(const SocialScene& scene) {
  json j;
  j["fps"] = scene.fps();
  j["intent"] = scene.intent();
  j["observed_len"] = scene.observed_len();
  json agents = json::array();
  for (int i = 0; i < SocialScene::kAgents; ++i) {
    const Motion& m = scene.agent(i);
    json frames = json::array();
    const int n = m.coords();
    for (int t = 0; t < m.frames(); ++t) {
      json frame = json::array();
      for (int jj = 0; jj < m.joints(); ++jj) {
        json joint = json::array();
        for (int c = 0; c < n; ++c) joint.push_back(m.data()(t, jj * n + c));
        frame.push_back(std::move(joint));
      }
      frames.push_back(std::move(frame));
    }
    agents.push_back(
        {{"id", i}, {"representation", std::string(to_string(m.representation()))}, {"frames", frames}});
  }
  j["agents"] = std::move(agents);
  return j.dump() + "\n";
}

void save_scene_file(const SocialScene& scene, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << scene_to_json_text(scene);
}

}  // namespace echo
