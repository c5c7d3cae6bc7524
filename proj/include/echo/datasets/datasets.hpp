#pragma once

#include "echo/core/types.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace echo {

/// One windowed training/evaluation example. Per agent: the padded input
/// x_ind, the reference pose x_ref (last observed frame), and the ground truth.
struct TrainingSample {
  std::array<Motion, 2> x_ind;
  std::array<Pose, 2> x_ref;
  std::array<Motion, 2> target;
  std::string intent;
  int observed_len = 0;

  int frames() const { return target[0].frames(); }
};

/// Copies `past` and repeats its last frame until the motion has T frames.
Motion pad_observation(const Motion& past, int T);

/// Frames [start, start+T) of the scene, with the first N observed.
TrainingSample window_scene(const SocialScene& scene, int N, int T, int start = 0);

/// All windows of length T with stride `stride` (at least one).
std::vector<TrainingSample> sliding_windows(const SocialScene& scene, int N, int T, int stride);

/// Observed and total frame counts for a (observed seconds, predicted seconds)
/// protocol; both products with fps must be integers.
struct WindowLengths {
  int observed = 0;
  int total = 0;
};
WindowLengths window_lengths(double fps, double observed_s, double predicted_s);

// ---- synthetic dyadic scenes ------------------------------------------------

inline constexpr std::array<std::string_view, 3> kSyntheticKinds{"handshake", "mirror", "circle"};

struct SyntheticOptions {
  /// Observed frames; <= 0 means T/2.
  int observed_len = 0;
  /// Agent 1 replays agent 0's local pose this many frames later; < 0 means
  /// T - observed_len, so agent 1's future is a function of agent 0's past.
  int delay = -1;
  /// Frames between random joint-angle keyframes.
  int keyframe_spacing = 4;
  double joint_amplitude_rad = 0.5;
  double root_wander_mm = 150.0;
  double separation_mm = 700.0;
};

/// Deterministic in (kind, seed). Joint rotations are animated on the given
/// skeleton so bone lengths stay rigid. Intent is set to `kind`.
SocialScene synthesize_dyadic_scene(std::string_view kind, uint64_t seed, int T, double fps,
                                    const SkeletonSpec& skeleton,
                                    const SyntheticOptions& options = {});

/// Resolved delay used by the generator for these options and length.
int synthetic_delay(int T, const SyntheticOptions& options);

/// Reflection across the x = 0 plane applied to every joint.
Motion reflect_x(const Motion& motion);

// ---- file adapters -------------------------------------------------------------

/// Homogeneous dyadic scene (both agents same representation and J).
SocialScene load_scene_file(const std::filesystem::path& path);
SocialScene scene_from_json_text(const std::string& text);

/// Human operator (euclidean_xyz) plus robot joint-angle stream; the two may
/// differ in J. Explicit fps is required.
SocialScene load_chico_sequence(const std::filesystem::path& path);
SocialScene chico_from_json_text(const std::string& text);

std::string scene_to_json_text(const SocialScene& scene);
void save_scene_file(const SocialScene& scene, const std::filesystem::path& path);

}  // namespace echo
