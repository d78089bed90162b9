#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace scenenoise {

inline constexpr int kDefaultSampleRate = 16000;

// Mono audio. Samples are nominally in [-1, 1]; the library does not clip
// intermediate results, only the 16-bit writer does.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

  // Throws BadAudio on a non-positive rate or non-finite samples.
  void check() const;

  friend bool operator==(const AudioClip&, const AudioClip&) = default;
};

double peak(std::span<const double> x);
double energy(std::span<const double> x);

// Samples for `duration` seconds at `rate`: round(duration * rate).
std::size_t sample_count(double duration, int rate);

// Linear-interpolation resampler.
AudioClip resample_linear(const AudioClip& clip, int target_rate);

// Round-trips through 16-bit PCM so in-memory audio matches what a WAV holds.
AudioClip quantize_pcm16(const AudioClip& clip);

// 16-bit PCM mono RIFF/WAVE.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
// Accepts 16-bit PCM and 32-bit float; multi-channel input is averaged to mono.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);

void write_wav(const std::filesystem::path& path, const AudioClip& clip);
AudioClip read_wav(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
// Writes to a sibling temporary and renames, so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace scenenoise
