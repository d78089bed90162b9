#include "scenenoise/audio.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include "scenenoise/error.hpp"

namespace scenenoise {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::int16_t to_pcm16(double x) {
  const double scaled = std::nearbyint(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

}  // namespace

void AudioClip::check() const {
  if (sample_rate <= 0) throw BadAudio("sample rate must be positive");
  for (double s : samples) {
    if (!std::isfinite(s)) throw BadAudio("audio contains non-finite samples");
  }
}

double peak(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

std::size_t sample_count(double duration, int rate) {
  return static_cast<std::size_t>(std::llround(duration * rate));
}

AudioClip resample_linear(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw InvalidArgument("target sample rate must be positive");
  if (clip.sample_rate == target_rate || clip.samples.empty()) {
    return AudioClip{clip.samples, target_rate};
  }
  const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
  const auto n = static_cast<std::size_t>(
      std::llround(static_cast<double>(clip.samples.size()) * target_rate / clip.sample_rate));
  AudioClip out{std::vector<double>(n), target_rate};
  const std::size_t last = clip.samples.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto i0 = std::min(static_cast<std::size_t>(pos), last);
    const auto i1 = std::min(i0 + 1, last);
    const double frac = pos - static_cast<double>(i0);
    out.samples[i] = clip.samples[i0] + (clip.samples[i1] - clip.samples[i0]) * frac;
  }
  return out;
}

AudioClip quantize_pcm16(const AudioClip& clip) {
  AudioClip out{std::vector<double>(clip.samples.size()), clip.sample_rate};
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    out.samples[i] = to_pcm16(clip.samples[i]) / 32768.0;
  }
  return out;
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  if (clip.sample_rate <= 0) throw BadAudio("sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (double s : clip.samples) put_u16(out, static_cast<std::uint16_t>(to_pcm16(s)));
  return out;
}

AudioClip decode_wav(std::span<const std::uint8_t> b) {
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
    throw BadAudio("not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t at = 12;
  while (at + 8 <= b.size()) {
    const std::uint32_t size = get_u32(b, at + 4);
    const std::size_t body = at + 8;
    if (body + size > b.size() && std::memcmp(b.data() + at, "data", 4) != 0) {
      throw BadAudio("truncated WAV chunk");
    }
    if (std::memcmp(b.data() + at, "fmt ", 4) == 0) {
      if (size < 16) throw BadAudio("short fmt chunk");
      format = get_u16(b, body);
      channels = get_u16(b, body + 2);
      rate = get_u32(b, body + 4);
      bits = get_u16(b, body + 14);
      if (format == 0xFFFE && size >= 26) format = get_u16(b, body + 24);  // WAVE_FORMAT_EXTENSIBLE
      have_fmt = true;
    } else if (std::memcmp(b.data() + at, "data", 4) == 0) {
      if (!have_fmt) throw BadAudio("data chunk before fmt chunk");
      if (channels == 0 || rate == 0) throw BadAudio("invalid WAV format fields");
      const std::size_t avail = std::min<std::size_t>(size, b.size() - body);
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      if (format == 1 && bits == 16) {
        const std::size_t frames = avail / (2 * channels);
        clip.samples.resize(frames);
        for (std::size_t f = 0; f < frames; ++f) {
          double acc = 0.0;
          for (std::size_t c = 0; c < channels; ++c) {
            acc += static_cast<std::int16_t>(get_u16(b, body + 2 * (f * channels + c))) / 32768.0;
          }
          clip.samples[f] = acc / channels;
        }
      } else if (format == 3 && bits == 32) {
        const std::size_t frames = avail / (4 * channels);
        clip.samples.resize(frames);
        for (std::size_t f = 0; f < frames; ++f) {
          double acc = 0.0;
          for (std::size_t c = 0; c < channels; ++c) {
            const std::uint32_t raw = get_u32(b, body + 4 * (f * channels + c));
            float v;
            std::memcpy(&v, &raw, sizeof v);
            acc += v;
          }
          clip.samples[f] = acc / channels;
        }
      } else {
        throw BadAudio("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                       std::to_string(bits) + " bits)");
      }
      return clip;
    }
    at = body + size + (size & 1);
  }
  throw BadAudio("WAV file has no data chunk");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) + "_" +
         std::to_string(counter.fetch_add(1));
  write_file_bytes(tmp, bytes);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move file into place: " + path.string());
  }
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  write_file_atomic(path, encode_wav(clip));
}

AudioClip read_wav(const std::filesystem::path& path) { return decode_wav(read_file_bytes(path)); }

}  // namespace scenenoise
