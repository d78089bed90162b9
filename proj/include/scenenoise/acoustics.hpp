#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "scenenoise/audio.hpp"
#include "scenenoise/scene.hpp"
#include "scenenoise/vec3.hpp"

namespace scenenoise {

inline constexpr double kSpeedOfSound = 343.0;  // m/s, dry air at 20 degC

enum class Environment { indoor, outdoor };

// Shoebox room with one absorption coefficient shared by all six walls.
struct RoomModel {
  Vec3 dimensions;
  double absorption = 0.0;
  int max_order = 1;
  int sample_rate = kDefaultSampleRate;
  double speed_of_sound = kSpeedOfSound;
  Environment environment = Environment::indoor;

  void check() const;
  // Outdoor scenes keep only first-order images.
  int effective_max_order() const;
};

struct ImageSource {
  Vec3 location;
  int order = 0;  // number of wall reflections; 0 is the real source
};

enum class KernelMode {
  raised_cosine,  // 0.5 * (1 + cos(2 pi t / Tw)) on |t| <= Tw / 2
  windowed_sinc,  // the same window multiplied by sinc(Fs t)
};

struct KernelConfig {
  int window_width_taps = 81;
  KernelMode mode = KernelMode::raised_cosine;

  // Tw = window_width_taps / Fs.
  double window_seconds(int sample_rate) const { return window_width_taps / static_cast<double>(sample_rate); }
  void check() const;
};

struct Rir {
  std::vector<double> taps;
  int sample_rate = kDefaultSampleRate;
};

// One term of the image-source sum, for inspection and debug listings.
struct ImageContribution {
  ImageSource image;
  double distance = 0.0;       // meters, image to microphone
  double gain = 0.0;           // (1 - alpha)^order / (4 pi distance)
  double delay_samples = 0.0;  // Fs * distance / c
};

// Sabine: alpha = 0.1611 V / (S rt60), clamped to [0, 1]. Throws DegenerateRoom.
double absorption_from_rt60(double rt60, const Vec3& dims);

// Real source followed by its images up to the room's effective order, sorted
// by order. Throws SourceOutsideRoom unless the source is strictly inside.
std::vector<ImageSource> enumerate_image_sources(const RoomModel& room, const Vec3& source);

// Fractional-delay kernel at time offset t (seconds); zero outside the window.
double kernel(double t, const KernelConfig& cfg, int sample_rate);

std::vector<ImageContribution> image_contributions(const RoomModel& room, const Vec3& source, const Vec3& mic);

// Sum over all images (a convex room makes every image visible) of the image
// gain times the kernel centred on the image delay, sampled at integer taps.
// Time starts at emission; kernel samples at negative taps are dropped.
// Throws CoincidentMicSource, SourceOutsideRoom.
Rir compute_rir(const RoomModel& room, const Vec3& source, const Vec3& mic, const KernelConfig& cfg = {});

// Full linear convolution, length len(x) + len(h) - 1. Large inputs go through
// an FFT; small ones use the direct sum.
std::vector<double> convolve(std::span<const double> x, std::span<const double> h);
std::vector<double> convolve_direct(std::span<const double> x, std::span<const double> h);
// Throws SampleRateMismatch.
AudioClip convolve(const AudioClip& clip, const Rir& rir);

// Parameters for turning a scene description into a room.
struct RoomParams {
  double rt60 = 0.5;          // seconds; converted with absorption_from_rt60
  double absorption = -1.0;   // used directly when in [0, 1]
  int max_order = 1;
  double speed_of_sound = kSpeedOfSound;
  Environment environment = Environment::indoor;
  KernelConfig kernel;
  std::uint64_t seed = 0;     // noise alignment offsets
  double peak_limit = 0.95;   // mixtures louder than this are scaled down
};

RoomModel make_room(const SceneInfo& scene, const RoomParams& params, int sample_rate);

// Loops or crops `noise` to exactly `length` samples from a seeded offset.
// An empty clip yields silence.
AudioClip fit_to_length(const AudioClip& noise, std::size_t length, std::uint64_t seed);

// Seed used to align noise clip `index` inside simulate_scene.
std::uint64_t noise_alignment_seed(std::uint64_t seed, std::size_t index);

// One source convolved with its RIR to the microphone, trimmed to `length`.
AudioClip simulate_source(const RoomModel& room, const Vec3& source, const Vec3& mic, const AudioClip& signal,
                          std::size_t length, const KernelConfig& cfg);

struct SimulationResult {
  AudioClip audio;             // after peak limiting
  AudioClip unnormalized;      // plain sum of all sources
  double normalization_gain = 1.0;
};

// Speaker at the scene's speaker location plus noise_clips[i] at noise source
// i, all heard at the microphone, summed and trimmed to the speech length.
// Throws MissingNoiseClip, SampleRateMismatch and the compute_rir errors.
SimulationResult simulate_scene(const SceneInfo& scene, const AudioClip& speech,
                                std::span<const AudioClip> noise_clips, const RoomParams& params);

// Debug exports: image listing per source and the geometry for plotting.
nlohmann::json contributions_json(std::span<const ImageContribution> contributions);
nlohmann::json geometry_json(const RoomModel& room, const Vec3& mic, std::span<const Vec3> sources);

}  // namespace scenenoise
