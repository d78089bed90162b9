#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "scenenoise/audio.hpp"

namespace scenenoise {

// Text-to-audio generation request. Generation options are forwarded to the
// service untouched.
struct TtaRequest {
  std::string prompt_text;
  int ddim_steps = 200;
  double guidance_scale = 2.5;
  double duration = 5.0;  // seconds
  std::uint64_t seed = 0;

  void check() const;
};

class TtaBackend {
 public:
  virtual ~TtaBackend() = default;
  // Audio for the request; the backend is asked for `sample_rate` but may
  // return something else, which synthesize_noise then flags.
  virtual AudioClip generate(const TtaRequest& req, int sample_rate) = 0;
};

// Offline stand-in: seeded noise with a 1/f tilt and slow amplitude
// modulation, both shaped by a hash of the prompt. Deterministic in
// (prompt_text, seed, duration, sample_rate).
class FixtureTta final : public TtaBackend {
 public:
  AudioClip generate(const TtaRequest& req, int sample_rate) override;
};

// POSTs {"prompt", "ddim_steps", "guidance_scale", "duration", "seed",
// "sample_rate"} as JSON and expects a WAV file in the response body.
class HttpTta final : public TtaBackend {
 public:
  explicit HttpTta(std::string endpoint, double timeout_seconds = 120.0);
  AudioClip generate(const TtaRequest& req, int sample_rate) override;

 private:
  std::string endpoint_;
  double timeout_;
};

struct SynthesisOptions {
  int sample_rate = kDefaultSampleRate;
  // Repair service audio with the wrong rate or length instead of failing.
  bool resample = false;
};

// Returns exactly round(duration * sample_rate) samples at the configured
// rate. Throws BadAudio on a mismatch unless options.resample is set.
AudioClip synthesize_noise(const TtaRequest& req, TtaBackend& backend, const SynthesisOptions& options = {});

// Linear amplitude gain: level percent / 100.
struct VolumeLevel {
  int percent = 100;
  double gain() const { return percent / 100.0; }
  friend bool operator==(const VolumeLevel&, const VolumeLevel&) = default;
};

inline constexpr std::array<VolumeLevel, 5> kVolumeLevels{{{0}, {25}, {50}, {75}, {100}}};

AudioClip apply_volume(const AudioClip& clip, VolumeLevel level);
// Variants in kVolumeLevels order, 0% first.
std::array<AudioClip, 5> volume_variants(const AudioClip& clip);

// On-disk cache of generated noise, one 16-bit WAV per key plus index.json.
// Clips are returned as stored (16-bit quantized), so a hit and the miss that
// filled it yield identical samples.
class NoiseBank {
 public:
  NoiseBank(std::filesystem::path dir, std::shared_ptr<TtaBackend> backend, TtaRequest defaults = {},
            SynthesisOptions options = {});

  // Throws IoError when the directory cannot be written.
  AudioClip get(const std::string& noise_type, std::uint64_t seed);

  // Removes all cached clips and the index.
  void clear();

  std::size_t backend_calls() const { return backend_calls_.load(); }
  const std::filesystem::path& directory() const { return dir_; }

  // 16 hex digits of a stable hash over (noise_type, seed, duration, sample_rate).
  static std::string cache_key(const std::string& noise_type, std::uint64_t seed, double duration, int sample_rate);

 private:
  std::mutex& key_mutex(const std::string& key);
  void record(const std::string& key, const std::string& noise_type, std::uint64_t seed);

  std::filesystem::path dir_;
  std::shared_ptr<TtaBackend> backend_;
  TtaRequest defaults_;
  SynthesisOptions options_;
  std::atomic<std::size_t> backend_calls_{0};
  std::mutex map_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> key_mutexes_;
  std::mutex index_mutex_;
};

}  // namespace scenenoise
