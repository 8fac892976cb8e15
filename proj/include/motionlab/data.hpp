#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "motionlab/tensor.hpp"

namespace motionlab {

enum class Units { mm, m };

std::string to_string(Units units);
Units units_from_string(const std::string& text);
/// 1e-3 for mm, 1 for m.
double meters_per_unit(Units units);

struct MotionSequence {
  double fps = 25.0;
  Units units = Units::mm;
  std::vector<std::string> joint_names;
  Tensor frames;  // [T, N, 3]

  std::size_t n_frames() const { return frames.dim(0); }
  std::size_t n_joints() const { return frames.dim(1); }

  /// Throws Error(data) if the fields are inconsistent.
  void validate() const;
};

/// Default joint names "j0", "j1", ...
std::vector<std::string> default_joint_names(std::size_t n);

/// Builds a validated sequence from row-major [T, N, 3] values.
MotionSequence make_sequence(std::vector<double> values, std::size_t n_frames, std::size_t n_joints, double fps,
                             Units units = Units::mm, std::vector<std::string> joint_names = {});

// On-disk format: `name.csv` holds one row per frame with 3N comma-separated
// values ordered j0x,j0y,j0z,j1x,... rendered with 17 significant digits
// (printf "%.17g"), '\n' line endings and no header. The sidecar `name.json`
// manifest is {"fps", "units", "joint_names", "n_frames"}.

/// Manifest path for a CSV path (same stem, .json extension).
std::filesystem::path manifest_path(const std::filesystem::path& csv_path);

MotionSequence load_sequence(const std::filesystem::path& csv_path);
void save_sequence(const MotionSequence& seq, const std::filesystem::path& csv_path);

/// Dataset index: {"sequences": [{"path": "...", "action": "..."}]}, paths
/// relative to the index file's directory.
struct IndexEntry {
  std::filesystem::path path;
  std::string action;
};
std::vector<IndexEntry> load_index(const std::filesystem::path& index_path);

/// Shifts every frame so the root joint sits at the origin.
MotionSequence remove_global_translation(const MotionSequence& seq, std::size_t root_joint);

/// Keeps every r-th frame where r = fps / target_fps must be an integer.
MotionSequence downsample(const MotionSequence& seq, double target_fps);

struct WindowPair {
  Tensor obs;     // [T_in, N, 3]
  Tensor target;  // [T_out, N, 3]
  std::string source_id;
  std::size_t start_frame = 0;
};

/// Contiguous (observed, future) windows starting every `stride` frames.
std::vector<WindowPair> window_split(const MotionSequence& seq, std::size_t in_frames, std::size_t out_frames,
                                     std::size_t stride, const std::string& source_id = "");

enum class MotionFamily { sinusoid, lissajous, piecewise_linear };

std::string to_string(MotionFamily family);
MotionFamily motion_family_from_string(const std::string& text);

struct SynthSpec {
  std::size_t n_joints = 8;
  std::size_t n_frames = 100;
  double fps = 25.0;
  MotionFamily motion_family = MotionFamily::sinusoid;
  std::pair<double, double> amplitude_range{20.0, 80.0};  // mm
  std::pair<double, double> frequency_range{0.5, 1.5};    // Hz

  void validate() const;
  bool operator==(const SynthSpec&) const = default;
};

/// Per-joint frequencies drawn for (spec, seed), in Hz. Exposed so spectral
/// tests can check the generated trajectories against them.
std::vector<double> synth_joint_frequencies(const SynthSpec& spec, std::uint64_t seed);

/// Smooth bounded trajectories around a fixed skeleton, in mm.
MotionSequence synth_generate(const SynthSpec& spec, std::uint64_t seed);

/// Seeded shuffle, then the first round(fraction * n) go to training.
std::pair<std::vector<WindowPair>, std::vector<WindowPair>> split_train_val(std::vector<WindowPair> pairs,
                                                                            double fraction, std::uint64_t seed);

}  // namespace motionlab
