// Shared fixtures and independent oracles for the test binaries.
#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "scenenoise/acoustics.hpp"
#include "scenenoise/audio.hpp"
#include "scenenoise/scene.hpp"
#include "scenenoise/seeding.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using scenenoise::Vec3;

inline constexpr double kPi = 3.14159265358979323846;

// Balcony scene with the well-known coordinates. A second noise source is
// added so the default two-type target is met.
inline const char* kBalconyResponse =
    "dimensions: (4, 2.5, 4)\n"
    "scene: balcony\n"
    "microphone: (3.5, 0.5, 1.2)\n"
    "speaker: (2, 1.5, 1.6)\n"
    "noise: type=the sound of footsteps location=(0.5, 0.5, 1.2)\n"
    "noise: type=wind blowing location=(1, 2, 3)\n";

// Same scene with only the footsteps source.
inline const char* kBalconySingleNoise =
    "dimensions: (4, 2.5, 4)\n"
    "scene: balcony\n"
    "microphone: (3.5, 0.5, 1.2)\n"
    "speaker: (2, 1.5, 1.6)\n"
    "noise: type=the sound of footsteps location=(0.5, 0.5, 1.2)\n";

inline std::string scene_text(const Vec3& dims, const Vec3& mic, const Vec3& spk, const Vec3& n1, const Vec3& n2) {
  auto tup = [](const Vec3& v) {
    return "(" + scenenoise::format_number(v.x) + ", " + scenenoise::format_number(v.y) + ", " +
           scenenoise::format_number(v.z) + ")";
  };
  return "dimensions: " + tup(dims) + "\nscene: office\nmicrophone: " + tup(mic) + "\nspeaker: " + tup(spk) +
         "\nnoise: type=keyboard typing location=" + tup(n1) + "\nnoise: type=a phone ringing location=" + tup(n2) +
         "\n";
}

// 40 responses: 4 unparseable, 2 mic overlaps, 8 out of bounds, none short
// of noise types, 26 clean.
inline std::vector<std::string> engineered_corpus() {
  std::vector<std::string> out;
  out.push_back("");
  out.push_back("I am sorry, I cannot describe a room for you. It would be a lovely balcony though.");
  out.push_back("dimensions: (4, 2.5, 4)\nscene: balcony\nspeaker: (2, 1.5, 1.6)\n"
                "noise: type=a dog barking location=(1, 1, 1)\nnoise: type=wind location=(2, 2, 2)\n");
  out.push_back("dimensions: (4, 2.5)\nscene: balcony\nmicrophone: (3.5, 0.5, 1.2)\nspeaker: (2, 1.5, 1.6)\n"
                "noise: type=a dog barking location=(1, 1, 1)\nnoise: type=wind location=(2, 2, 2)\n");
  const Vec3 dims{6, 5, 3};
  for (int i = 0; i < 2; ++i) {
    const Vec3 mic{2.0 + i, 2, 1.2};
    out.push_back(scene_text(dims, mic, {4, 4, 1.6}, mic + Vec3{0.03, 0, 0}, {1, 4, 1}));
  }
  for (int i = 0; i < 8; ++i) {
    const Vec3 far{6.0 + 0.5 * i, 1, 1};  // on or past the x wall
    out.push_back(scene_text(dims, {2, 2, 1.2}, {4, 4, 1.6}, {1, 1, 1}, far));
  }
  for (int i = 0; i < 26; ++i) {
    const double dx = 0.1 * (i % 10);
    out.push_back(scene_text(dims, {2 + dx, 2, 1.2}, {4, 4, 1.6}, {1, 1, 1}, {5, 1 + 0.1 * (i % 5), 2}));
  }
  return out;
}

struct OracleImage {
  Vec3 location;
  int order;
};

// First-order images by reflecting the source in each of the six walls.
inline std::vector<OracleImage> oracle_images(const Vec3& room, const Vec3& src) {
  std::vector<OracleImage> out{{src, 0}};
  for (int axis = 0; axis < 3; ++axis) {
    Vec3 low = src, high = src;
    double* lo = axis == 0 ? &low.x : axis == 1 ? &low.y : &low.z;
    double* hi = axis == 0 ? &high.x : axis == 1 ? &high.y : &high.z;
    const double s = *lo;
    const double len = axis == 0 ? room.x : axis == 1 ? room.y : room.z;
    *lo = -s;
    *hi = 2.0 * len - s;
    out.push_back({low, 1});
    out.push_back({high, 1});
  }
  return out;
}

struct OracleTap {
  double delay;
  double gain;
};

inline std::vector<OracleTap> oracle_taps(const Vec3& room, const Vec3& src, const Vec3& mic, double alpha, int fs,
                                          double c) {
  std::vector<OracleTap> out;
  for (const auto& img : oracle_images(room, src)) {
    const double dx = img.location.x - mic.x, dy = img.location.y - mic.y, dz = img.location.z - mic.z;
    const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
    out.push_back({fs * d / c, std::pow(1.0 - alpha, img.order) / (4.0 * kPi * d)});
  }
  return out;
}

// Raised-cosine kernel RIR assembled tap by tap from the oracle delays.
inline std::vector<double> oracle_rir(const std::vector<OracleTap>& taps, int width) {
  double max_delay = 0.0;
  for (const auto& t : taps) max_delay = std::max(max_delay, t.delay);
  const double half = width / 2.0;
  std::vector<double> h(static_cast<std::size_t>(std::floor(max_delay + half)) + 1, 0.0);
  for (std::size_t n = 0; n < h.size(); ++n) {
    for (const auto& t : taps) {
      const double u = static_cast<double>(n) - t.delay;
      if (std::abs(u) <= half) h[n] += t.gain * 0.5 * (1.0 + std::cos(2.0 * kPi * u / width));
    }
  }
  return h;
}

inline std::vector<double> naive_convolve(const std::vector<double>& x, const std::vector<double>& h) {
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) y[i + j] += x[i] * h[j];
  return y;
}

inline std::vector<double> random_signal(std::uint64_t seed, std::size_t n) {
  scenenoise::Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = fs::temp_directory_path() /
            ("scenenoise_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Writes `count` short speech-like WAVs and a manifest; returns the manifest.
inline fs::path make_dataset(const fs::path& dir, std::size_t count, double seconds = 0.5) {
  fs::create_directories(dir / "wav");
  std::ofstream manifest(dir / "input.jsonl");
  for (std::size_t i = 0; i < count; ++i) {
    scenenoise::AudioClip clip;
    const std::size_t n = scenenoise::sample_count(seconds, clip.sample_rate);
    scenenoise::Rng rng(1000 + i);
    clip.samples.resize(n);
    const double f0 = 120.0 + 20.0 * static_cast<double>(i);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / clip.sample_rate;
      clip.samples[k] = 0.4 * std::sin(2 * kPi * f0 * t) + 0.2 * std::sin(2 * kPi * 3 * f0 * t) +
                        0.05 * rng.uniform(-1.0, 1.0);
    }
    const std::string id = "utt" + std::to_string(i);
    scenenoise::write_wav(dir / "wav" / (id + ".wav"), clip);
    manifest << "{\"utterance_id\": \"" << id << "\", \"path\": \"wav/" << id << ".wav\", \"transcript\": \"word "
             << i << "\"}\n";
  }
  return dir / "input.jsonl";
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testsupport
