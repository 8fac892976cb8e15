#include "motionlab/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "motionlab/error.hpp"
#include "motionlab/ops.hpp"
#include "motionlab/rng.hpp"

namespace motionlab {

namespace fs = std::filesystem;

std::string to_string(Units units) { return units == Units::mm ? "mm" : "m"; }

Units units_from_string(const std::string& text) {
  if (text == "mm") return Units::mm;
  if (text == "m") return Units::m;
  throw Error(ErrorKind::data, "unknown units '" + text + "' (expected mm or m)");
}

double meters_per_unit(Units units) { return units == Units::mm ? 1e-3 : 1.0; }

void MotionSequence::validate() const {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw Error(ErrorKind::data, "fps must be positive");
  if (frames.rank() != 3 || frames.dim(2) != 3) {
    throw Error(ErrorKind::data, "frames must be [T, N, 3], got " + shape_to_string(frames.shape()));
  }
  if (joint_names.size() != frames.dim(1)) {
    throw Error(ErrorKind::data, std::to_string(joint_names.size()) + " joint names for " +
                                     std::to_string(frames.dim(1)) + " joints");
  }
  for (double v : frames.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::data, "sequence holds a non-finite coordinate");
  }
}

std::vector<std::string> default_joint_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("j" + std::to_string(i));
  return names;
}

MotionSequence make_sequence(std::vector<double> values, std::size_t n_frames, std::size_t n_joints, double fps,
                             Units units, std::vector<std::string> joint_names) {
  MotionSequence seq;
  seq.fps = fps;
  seq.units = units;
  seq.joint_names = joint_names.empty() ? default_joint_names(n_joints) : std::move(joint_names);
  seq.frames = Tensor::create({n_frames, n_joints, 3}, std::move(values));
  seq.validate();
  return seq;
}

fs::path manifest_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json parse_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data, path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

MotionSequence load_sequence(const fs::path& csv_path) {
  const fs::path mpath = manifest_path(csv_path);
  if (!fs::exists(mpath)) throw Error(ErrorKind::data, "missing manifest " + mpath.string());
  const auto manifest = parse_json_file(mpath);

  MotionSequence seq;
  std::size_t n_frames = 0;
  try {
    seq.fps = manifest.at("fps").get<double>();
    seq.units = units_from_string(manifest.at("units").get<std::string>());
    seq.joint_names = manifest.at("joint_names").get<std::vector<std::string>>();
    n_frames = manifest.at("n_frames").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data, mpath.string() + ": bad manifest (" + e.what() + ")");
  }
  if (!(seq.fps > 0.0)) throw Error(ErrorKind::data, mpath.string() + ": fps must be positive");
  const std::size_t n_joints = seq.joint_names.size();
  if (n_joints == 0) throw Error(ErrorKind::data, mpath.string() + ": joint_names is empty");

  const std::string text = read_file(csv_path);
  std::vector<double> values;
  values.reserve(n_frames * n_joints * 3);
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) {
      if (pos >= text.size()) break;
      throw Error(ErrorKind::data, csv_path.string() + ":" + std::to_string(line_no) + ": empty row");
    }
    std::size_t cells = 0;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      const std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw Error(ErrorKind::data, csv_path.string() + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                                         std::string(cell) + "'");
      }
      values.push_back(v);
      ++cells;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells != 3 * n_joints) {
      throw Error(ErrorKind::data, csv_path.string() + ":" + std::to_string(line_no) + ": expected " +
                                       std::to_string(3 * n_joints) + " values, got " + std::to_string(cells));
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::data, csv_path.string() + ": no frames");
  if (rows != n_frames) {
    throw Error(ErrorKind::data, csv_path.string() + ": manifest says " + std::to_string(n_frames) + " frames, file has " +
                                     std::to_string(rows));
  }
  seq.frames = Tensor::create({rows, n_joints, 3}, std::move(values));
  seq.validate();
  return seq;
}

void save_sequence(const MotionSequence& seq, const fs::path& csv_path) {
  seq.validate();
  std::string csv;
  const auto data = seq.frames.data();
  const std::size_t row = seq.n_joints() * 3;
  for (std::size_t t = 0; t < seq.n_frames(); ++t) {
    for (std::size_t i = 0; i < row; ++i) {
      if (i) csv += ',';
      csv += format_double(data[t * row + i]);
    }
    csv += '\n';
  }
  nlohmann::ordered_json manifest;
  manifest["fps"] = seq.fps;
  manifest["units"] = to_string(seq.units);
  manifest["joint_names"] = seq.joint_names;
  manifest["n_frames"] = seq.n_frames();

  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + csv_path.string());
  out << csv;
  std::ofstream mout(manifest_path(csv_path), std::ios::binary);
  if (!mout) throw Error(ErrorKind::io, "cannot write " + manifest_path(csv_path).string());
  mout << manifest.dump(2) << '\n';
  if (!out || !mout) throw Error(ErrorKind::io, "write failed for " + csv_path.string());
}

std::vector<IndexEntry> load_index(const fs::path& index_path) {
  const auto j = parse_json_file(index_path);
  std::vector<IndexEntry> entries;
  try {
    for (const auto& e : j.at("sequences")) {
      IndexEntry entry;
      entry.path = index_path.parent_path() / e.at("path").get<std::string>();
      entry.action = e.value("action", std::string{});
      entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data, index_path.string() + ": bad index (" + e.what() + ")");
  }
  return entries;
}

MotionSequence remove_global_translation(const MotionSequence& seq, std::size_t root_joint) {
  if (root_joint >= seq.n_joints()) {
    throw Error(ErrorKind::data, "root joint " + std::to_string(root_joint) + " out of range for " +
                                     std::to_string(seq.n_joints()) + " joints");
  }
  MotionSequence out = seq;
  std::vector<double> values = seq.frames.to_vector();
  const std::size_t N = seq.n_joints();
  for (std::size_t t = 0; t < seq.n_frames(); ++t) {
    double* frame = values.data() + t * N * 3;
    const double root[3] = {frame[root_joint * 3], frame[root_joint * 3 + 1], frame[root_joint * 3 + 2]};
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t c = 0; c < 3; ++c) frame[n * 3 + c] -= root[c];
    }
  }
  out.frames = Tensor::create(seq.frames.shape(), std::move(values));
  return out;
}

MotionSequence downsample(const MotionSequence& seq, double target_fps) {
  if (!(target_fps > 0.0)) throw Error(ErrorKind::data, "target fps must be positive");
  const double ratio = seq.fps / target_fps;
  const double r = std::round(ratio);
  if (r < 1.0 || std::abs(ratio - r) > 1e-9) {
    throw Error(ErrorKind::data, "cannot downsample " + format_double(seq.fps) + " fps to " + format_double(target_fps) +
                                     " fps: ratio " + format_double(ratio) + " is not a positive integer");
  }
  const auto step = static_cast<std::size_t>(r);
  const std::size_t N = seq.n_joints();
  const auto src = seq.frames.data();
  std::vector<double> values;
  std::size_t kept = 0;
  for (std::size_t t = 0; t < seq.n_frames(); t += step) {
    values.insert(values.end(), src.begin() + static_cast<std::ptrdiff_t>(t * N * 3),
                  src.begin() + static_cast<std::ptrdiff_t>((t + 1) * N * 3));
    ++kept;
  }
  MotionSequence out = seq;
  out.fps = target_fps;
  out.frames = Tensor::create({kept, N, 3}, std::move(values));
  return out;
}

std::vector<WindowPair> window_split(const MotionSequence& seq, std::size_t in_frames, std::size_t out_frames,
                                     std::size_t stride, const std::string& source_id) {
  if (stride == 0) throw Error(ErrorKind::config, "window stride must be at least 1");
  if (in_frames == 0 || out_frames == 0) throw Error(ErrorKind::config, "window lengths must be positive");
  std::vector<WindowPair> pairs;
  const std::size_t span = in_frames + out_frames;
  const std::size_t T = seq.n_frames();
  if (T < span) return pairs;
  const Tensor frames = seq.frames.detach();
  for (std::size_t start = 0; start + span <= T; start += stride) {
    pairs.push_back({slice(frames, 0, start, in_frames), slice(frames, 0, start + in_frames, out_frames), source_id, start});
  }
  return pairs;
}

std::string to_string(MotionFamily family) {
  switch (family) {
    case MotionFamily::sinusoid: return "sinusoid";
    case MotionFamily::lissajous: return "lissajous";
    case MotionFamily::piecewise_linear: return "piecewise-linear";
  }
  return "sinusoid";
}

MotionFamily motion_family_from_string(const std::string& text) {
  if (text == "sinusoid") return MotionFamily::sinusoid;
  if (text == "lissajous") return MotionFamily::lissajous;
  if (text == "piecewise-linear") return MotionFamily::piecewise_linear;
  throw Error(ErrorKind::config, "unknown motion family '" + text + "'");
}

namespace {

// Per-axis frequency multipliers for the Lissajous family.
constexpr double kLissajous[3] = {1.0, 2.0, 3.0};

double max_multiplier(MotionFamily family) { return family == MotionFamily::lissajous ? kLissajous[2] : 1.0; }

// Fixed rest pose: a loose vertical chain, independent of the seed.
double skeleton_offset(std::size_t joint, std::size_t axis) {
  const double n = static_cast<double>(joint);
  switch (axis) {
    case 0: return 80.0 * std::sin(1.3 * n);
    case 1: return 100.0 * n;
    default: return 50.0 * std::cos(0.7 * n);
  }
}

double triangle(double u) {
  const double frac = u - std::floor(u);
  return 4.0 * std::abs(frac - 0.5) - 1.0;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_joints == 0) throw Error(ErrorKind::config, "synthetic.n_joints must be positive");
  if (n_frames == 0) throw Error(ErrorKind::config, "synthetic.n_frames must be positive");
  if (!(fps > 0.0)) throw Error(ErrorKind::config, "synthetic.fps must be positive");
  if (!(amplitude_range.first >= 0.0) || !(amplitude_range.first <= amplitude_range.second)) {
    throw Error(ErrorKind::config, "synthetic.amplitude_range must be a non-empty interval of non-negative values");
  }
  if (!(frequency_range.first >= 0.0) || !(frequency_range.first <= frequency_range.second)) {
    throw Error(ErrorKind::config, "synthetic.frequency_range must be a non-empty interval of non-negative values");
  }
  if (!(frequency_range.second * max_multiplier(motion_family) < fps / 2.0)) {
    throw Error(ErrorKind::config, "synthetic.frequency_range exceeds the Nyquist limit fps/2");
  }
}

std::vector<double> synth_joint_frequencies(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<double> f(spec.n_joints);
  for (auto& v : f) v = rng.uniform(spec.frequency_range.first, spec.frequency_range.second);
  return f;
}

MotionSequence synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t N = spec.n_joints;
  Rng rng(seed);
  std::vector<double> freq(N);
  for (auto& v : freq) v = rng.uniform(spec.frequency_range.first, spec.frequency_range.second);
  std::vector<double> amp(N * 3), phase(N * 3);
  for (std::size_t i = 0; i < N * 3; ++i) {
    amp[i] = rng.uniform(spec.amplitude_range.first, spec.amplitude_range.second);
    phase[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }

  std::vector<double> values(spec.n_frames * N * 3);
  for (std::size_t t = 0; t < spec.n_frames; ++t) {
    const double time = static_cast<double>(t) / spec.fps;
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t i = n * 3 + c;
        double wave = 0.0;
        switch (spec.motion_family) {
          case MotionFamily::sinusoid:
            wave = std::sin(2.0 * std::numbers::pi * freq[n] * time + phase[i]);
            break;
          case MotionFamily::lissajous:
            wave = std::sin(2.0 * std::numbers::pi * kLissajous[c] * freq[n] * time + phase[i]);
            break;
          case MotionFamily::piecewise_linear:
            wave = triangle(freq[n] * time + phase[i] / (2.0 * std::numbers::pi));
            break;
        }
        values[(t * N + n) * 3 + c] = skeleton_offset(n, c) + amp[i] * wave;
      }
    }
  }
  return make_sequence(std::move(values), spec.n_frames, N, spec.fps, Units::mm);
}

std::pair<std::vector<WindowPair>, std::vector<WindowPair>> split_train_val(std::vector<WindowPair> pairs,
                                                                            double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::config, "train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pairs.size())));
  std::pair<std::vector<WindowPair>, std::vector<WindowPair>> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_train ? out.first : out.second).push_back(std::move(pairs[order[k]]));
  }
  return out;
}

}  // namespace motionlab
