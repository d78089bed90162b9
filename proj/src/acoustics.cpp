#include "scenenoise/acoustics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "scenenoise/error.hpp"
#include "scenenoise/seeding.hpp"

namespace scenenoise {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

bool strictly_inside(const Vec3& p, const Vec3& dims) {
  for (int a = 0; a < 3; ++a) {
    if (!(p[a] > 0.0 && p[a] < dims[a])) return false;
  }
  return true;
}

std::string describe(const Vec3& v) {
  return "(" + format_number(v.x) + ", " + format_number(v.y) + ", " + format_number(v.z) + ")";
}

struct AxisImage {
  double coord;
  int order;
};

// Image coordinates along one axis: 2nL + (1 - 2p)s with |n - p| + |n|
// reflections, limited to `max_order`.
std::vector<AxisImage> axis_images(double s, double length, int max_order) {
  std::vector<AxisImage> out;
  for (int n = -max_order; n <= max_order; ++n) {
    for (int p = 0; p <= 1; ++p) {
      const int order = std::abs(n - p) + std::abs(n);
      if (order > max_order) continue;
      out.push_back({2.0 * n * length + (1 - 2 * p) * s, order});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const AxisImage& a, const AxisImage& b) { return a.order < b.order; });
  return out;
}

// FFTW's planner is not thread-safe; execution on distinct buffers is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> convolve_fft(std::span<const double> x, std::span<const double> h) {
  const std::size_t out_len = x.size() + h.size() - 1;
  const std::size_t n = next_pow2(out_len);
  const std::size_t bins = n / 2 + 1;

  auto* a = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  auto* b = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  auto* fa = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
  auto* fb = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
  if (!a || !b || !fa || !fb) {
    fftw_free(a);
    fftw_free(b);
    fftw_free(fa);
    fftw_free(fb);
    throw std::bad_alloc();
  }

  fftw_plan fwd_a, fwd_b, inv;
  {
    std::lock_guard lock(fftw_planner_mutex());
    fwd_a = fftw_plan_dft_r2c_1d(static_cast<int>(n), a, fa, FFTW_ESTIMATE);
    fwd_b = fftw_plan_dft_r2c_1d(static_cast<int>(n), b, fb, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), fa, a, FFTW_ESTIMATE);
  }

  std::fill(a, a + n, 0.0);
  std::fill(b, b + n, 0.0);
  std::copy(x.begin(), x.end(), a);
  std::copy(h.begin(), h.end(), b);
  fftw_execute(fwd_a);
  fftw_execute(fwd_b);
  for (std::size_t k = 0; k < bins; ++k) {
    const double re = fa[k][0] * fb[k][0] - fa[k][1] * fb[k][1];
    const double im = fa[k][0] * fb[k][1] + fa[k][1] * fb[k][0];
    fa[k][0] = re;
    fa[k][1] = im;
  }
  fftw_execute(inv);

  std::vector<double> out(out_len);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = a[i] * scale;

  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_a);
    fftw_destroy_plan(fwd_b);
    fftw_destroy_plan(inv);
  }
  fftw_free(a);
  fftw_free(b);
  fftw_free(fa);
  fftw_free(fb);
  return out;
}

}  // namespace

void RoomModel::check() const {
  if (!dimensions.is_finite() || !(dimensions.x > 0.0 && dimensions.y > 0.0 && dimensions.z > 0.0)) {
    throw DegenerateRoom("room dimensions must be strictly positive: " + describe(dimensions));
  }
  if (!(absorption >= 0.0 && absorption <= 1.0)) throw InvalidArgument("absorption must be in [0, 1]");
  if (max_order < 0) throw InvalidArgument("max_order must be >= 0");
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  if (!(speed_of_sound > 0.0)) throw InvalidArgument("speed of sound must be positive");
}

int RoomModel::effective_max_order() const {
  return environment == Environment::outdoor ? std::min(max_order, 1) : max_order;
}

void KernelConfig::check() const {
  if (window_width_taps < 3 || window_width_taps % 2 == 0) {
    throw InvalidArgument("kernel window width must be an odd tap count >= 3");
  }
}

double absorption_from_rt60(double rt60, const Vec3& dims) {
  if (!(rt60 > 0.0)) throw InvalidArgument("rt60 must be positive");
  const double volume = dims.x * dims.y * dims.z;
  const double surface = 2.0 * (dims.x * dims.y + dims.x * dims.z + dims.y * dims.z);
  if (!(surface > 0.0) || !(volume > 0.0) || !std::isfinite(surface)) {
    throw DegenerateRoom("room " + describe(dims) + " has no volume or wall area");
  }
  return std::clamp(0.1611 * volume / (surface * rt60), 0.0, 1.0);
}

std::vector<ImageSource> enumerate_image_sources(const RoomModel& room, const Vec3& source) {
  room.check();
  if (!source.is_finite() || !strictly_inside(source, room.dimensions)) {
    throw SourceOutsideRoom("source " + describe(source) + " is not strictly inside room " +
                            describe(room.dimensions));
  }
  const int max_order = room.effective_max_order();
  const auto xs = axis_images(source.x, room.dimensions.x, max_order);
  const auto ys = axis_images(source.y, room.dimensions.y, max_order);
  const auto zs = axis_images(source.z, room.dimensions.z, max_order);

  std::vector<ImageSource> out;
  for (const auto& z : zs) {
    for (const auto& y : ys) {
      for (const auto& x : xs) {
        const int order = x.order + y.order + z.order;
        if (order <= max_order) out.push_back({{x.coord, y.coord, z.coord}, order});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ImageSource& a, const ImageSource& b) { return a.order < b.order; });
  return out;
}

double kernel(double t, const KernelConfig& cfg, int sample_rate) {
  const double tw = cfg.window_seconds(sample_rate);
  if (std::abs(t) > tw / 2.0) return 0.0;
  const double window = 0.5 * (1.0 + std::cos(2.0 * kPi * t / tw));
  if (cfg.mode == KernelMode::raised_cosine || t == 0.0) return window;
  const double arg = kPi * sample_rate * t;
  return window * std::sin(arg) / arg;
}

std::vector<ImageContribution> image_contributions(const RoomModel& room, const Vec3& source, const Vec3& mic) {
  room.check();
  if (!mic.is_finite() || !strictly_inside(mic, room.dimensions)) {
    throw SourceOutsideRoom("microphone " + describe(mic) + " is not strictly inside room " +
                            describe(room.dimensions));
  }
  if (distance(mic, source) < 1e-9) {
    throw CoincidentMicSource("microphone coincides with source at " + describe(source));
  }
  std::vector<ImageContribution> out;
  for (const auto& img : enumerate_image_sources(room, source)) {
    ImageContribution c;
    c.image = img;
    c.distance = distance(mic, img.location);
    c.gain = std::pow(1.0 - room.absorption, img.order) / (4.0 * kPi * c.distance);
    c.delay_samples = room.sample_rate * c.distance / room.speed_of_sound;
    out.push_back(c);
  }
  return out;
}

Rir compute_rir(const RoomModel& room, const Vec3& source, const Vec3& mic, const KernelConfig& cfg) {
  cfg.check();
  const auto contributions = image_contributions(room, source, mic);
  const double half_width = cfg.window_width_taps / 2.0;
  double max_delay = 0.0;
  for (const auto& c : contributions) max_delay = std::max(max_delay, c.delay_samples);

  Rir rir;
  rir.sample_rate = room.sample_rate;
  rir.taps.assign(static_cast<std::size_t>(std::floor(max_delay + half_width)) + 1, 0.0);
  for (const auto& c : contributions) {
    const auto first = static_cast<long>(std::max(0.0, std::ceil(c.delay_samples - half_width)));
    const auto last = static_cast<long>(std::floor(c.delay_samples + half_width));
    for (long n = first; n <= last; ++n) {
      const double t = (static_cast<double>(n) - c.delay_samples) / room.sample_rate;
      rir.taps[static_cast<std::size_t>(n)] += c.gain * kernel(t, cfg, room.sample_rate);
    }
  }
  return rir;
}

std::vector<double> convolve_direct(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) return {};
  std::vector<double> out(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < h.size(); ++j) out[i + j] += xi * h[j];
  }
  return out;
}

std::vector<double> convolve(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) return {};
  if (std::min(x.size(), h.size()) <= 64) return convolve_direct(x, h);
  return convolve_fft(x, h);
}

AudioClip convolve(const AudioClip& clip, const Rir& rir) {
  if (clip.sample_rate != rir.sample_rate) {
    throw SampleRateMismatch("clip at " + std::to_string(clip.sample_rate) + " Hz, RIR at " +
                             std::to_string(rir.sample_rate) + " Hz");
  }
  return AudioClip{convolve(clip.samples, rir.taps), clip.sample_rate};
}

RoomModel make_room(const SceneInfo& scene, const RoomParams& params, int sample_rate) {
  RoomModel room;
  room.dimensions = scene.dimensions;
  room.absorption = (params.absorption >= 0.0 && params.absorption <= 1.0)
                        ? params.absorption
                        : absorption_from_rt60(params.rt60, scene.dimensions);
  room.max_order = params.max_order;
  room.sample_rate = sample_rate;
  room.speed_of_sound = params.speed_of_sound;
  room.environment = params.environment;
  room.check();
  return room;
}

AudioClip fit_to_length(const AudioClip& noise, std::size_t length, std::uint64_t seed) {
  AudioClip out{std::vector<double>(length, 0.0), noise.sample_rate};
  const std::size_t n = noise.samples.size();
  if (n == 0 || length == 0) return out;
  Rng rng(seed);
  if (n >= length) {
    const std::size_t offset = static_cast<std::size_t>(rng.below(n - length + 1));
    std::copy_n(noise.samples.begin() + static_cast<std::ptrdiff_t>(offset), length, out.samples.begin());
  } else {
    const std::size_t offset = static_cast<std::size_t>(rng.below(n));
    for (std::size_t i = 0; i < length; ++i) out.samples[i] = noise.samples[(offset + i) % n];
  }
  return out;
}

std::uint64_t noise_alignment_seed(std::uint64_t seed, std::size_t index) {
  return derive_seed(derive_seed(seed, "noise-alignment"), {index});
}

AudioClip simulate_source(const RoomModel& room, const Vec3& source, const Vec3& mic, const AudioClip& signal,
                          std::size_t length, const KernelConfig& cfg) {
  const Rir rir = compute_rir(room, source, mic, cfg);
  AudioClip wet = convolve(signal, rir);
  wet.samples.resize(length, 0.0);
  return wet;
}

SimulationResult simulate_scene(const SceneInfo& scene, const AudioClip& speech,
                                std::span<const AudioClip> noise_clips, const RoomParams& params) {
  if (noise_clips.size() < scene.noise_sources.size()) {
    throw MissingNoiseClip("scene has " + std::to_string(scene.noise_sources.size()) + " noise sources but " +
                           std::to_string(noise_clips.size()) + " clips were supplied");
  }
  speech.check();
  const RoomModel room = make_room(scene, params, speech.sample_rate);
  const std::size_t length = speech.samples.size();

  SimulationResult result;
  result.unnormalized =
      simulate_source(room, scene.speaker_location, scene.mic_location, speech, length, params.kernel);
  for (std::size_t i = 0; i < scene.noise_sources.size(); ++i) {
    const AudioClip& clip = noise_clips[i];
    if (!clip.samples.empty() && clip.sample_rate != speech.sample_rate) {
      throw SampleRateMismatch("noise clip " + std::to_string(i) + " at " + std::to_string(clip.sample_rate) +
                               " Hz, speech at " + std::to_string(speech.sample_rate) + " Hz");
    }
    AudioClip fitted = fit_to_length(clip, length, noise_alignment_seed(params.seed, i));
    fitted.sample_rate = speech.sample_rate;
    const AudioClip wet =
        simulate_source(room, scene.noise_sources[i].location, scene.mic_location, fitted, length, params.kernel);
    for (std::size_t k = 0; k < length; ++k) result.unnormalized.samples[k] += wet.samples[k];
  }

  result.audio = result.unnormalized;
  const double p = peak(result.unnormalized.samples);
  if (p > params.peak_limit) {
    result.normalization_gain = params.peak_limit / p;
    for (double& s : result.audio.samples) s *= result.normalization_gain;
  }
  return result;
}

nlohmann::json contributions_json(std::span<const ImageContribution> contributions) {
  json arr = json::array();
  for (const auto& c : contributions) {
    arr.push_back({{"location", to_json(c.image.location)},
                   {"order", c.image.order},
                   {"distance", c.distance},
                   {"gain", c.gain},
                   {"delay_samples", c.delay_samples}});
  }
  return arr;
}

nlohmann::json geometry_json(const RoomModel& room, const Vec3& mic, std::span<const Vec3> sources) {
  json srcs = json::array();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    json images = json::array();
    for (const auto& img : enumerate_image_sources(room, sources[i])) {
      if (img.order == 0) continue;
      images.push_back({{"location", to_json(img.location)}, {"order", img.order}});
    }
    srcs.push_back({{"index", i}, {"location", to_json(sources[i])}, {"images", std::move(images)}});
  }
  return {{"dimensions", to_json(room.dimensions)},
          {"absorption", room.absorption},
          {"max_order", room.effective_max_order()},
          {"microphone", to_json(mic)},
          {"sources", std::move(srcs)}};
}

}  // namespace scenenoise
