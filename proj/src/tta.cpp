#include "scenenoise/tta.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "http_util.hpp"
#include "scenenoise/error.hpp"
#include "scenenoise/scene.hpp"
#include "scenenoise/seeding.hpp"

namespace scenenoise {

using nlohmann::json;

void TtaRequest::check() const {
  if (prompt_text.empty()) throw InvalidArgument("TTA prompt text is empty");
  if (!(duration > 0.0)) throw InvalidArgument("TTA duration must be positive");
  if (ddim_steps <= 0) throw InvalidArgument("ddim_steps must be positive");
}

AudioClip FixtureTta::generate(const TtaRequest& req, int sample_rate) {
  req.check();
  const std::uint64_t prompt_hash = fnv1a64(req.prompt_text);
  Rng shape(derive_seed(prompt_hash, "shape"));
  // Blend between white (0) and pink (1) noise, plus a slow tremolo.
  const double tilt = shape.uniform(0.3, 1.0);
  const double am_rate = shape.uniform(0.5, 4.0);
  const double am_depth = shape.uniform(0.0, 0.6);
  const double am_phase = shape.uniform(0.0, 2.0 * std::numbers::pi);

  Rng rng(derive_seed(prompt_hash, {req.seed}));
  AudioClip clip{std::vector<double>(sample_count(req.duration, sample_rate)), sample_rate};
  // Paul Kellet's economy pinking filter.
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const double white = rng.uniform(-1.0, 1.0);
    b0 = 0.99765 * b0 + white * 0.0990460;
    b1 = 0.96300 * b1 + white * 0.2965164;
    b2 = 0.57000 * b2 + white * 1.0526913;
    const double pink = (b0 + b1 + b2 + white * 0.1848) * 0.2;
    const double t = static_cast<double>(i) / sample_rate;
    const double envelope = 1.0 - am_depth * 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * am_rate * t + am_phase));
    clip.samples[i] = envelope * (tilt * pink + (1.0 - tilt) * white);
  }
  const double p = peak(clip.samples);
  if (p > 0.0) {
    for (double& s : clip.samples) s *= 0.8 / p;
  }
  return clip;
}

HttpTta::HttpTta(std::string endpoint, double timeout_seconds)
    : endpoint_(std::move(endpoint)), timeout_(timeout_seconds) {
  if (!(timeout_ > 0.0)) throw InvalidArgument("timeout must be positive");
}

AudioClip HttpTta::generate(const TtaRequest& req, int sample_rate) {
  req.check();
  const json body = {{"prompt", req.prompt_text},   {"ddim_steps", req.ddim_steps},
                     {"guidance_scale", req.guidance_scale}, {"duration", req.duration},
                     {"seed", req.seed},             {"sample_rate", sample_rate}};
  const std::string wav = detail::http_post(endpoint_, body.dump(), "application/json", timeout_);
  return decode_wav(std::span(reinterpret_cast<const std::uint8_t*>(wav.data()), wav.size()));
}

AudioClip synthesize_noise(const TtaRequest& req, TtaBackend& backend, const SynthesisOptions& options) {
  req.check();
  AudioClip clip = backend.generate(req, options.sample_rate);
  clip.check();
  const std::size_t expected = sample_count(req.duration, options.sample_rate);
  if (clip.sample_rate != options.sample_rate) {
    if (!options.resample) {
      throw BadAudio("service returned " + std::to_string(clip.sample_rate) + " Hz audio, expected " +
                     std::to_string(options.sample_rate) + " Hz");
    }
    clip = resample_linear(clip, options.sample_rate);
  }
  if (clip.samples.size() != expected) {
    if (!options.resample) {
      throw BadAudio("service returned " + std::to_string(clip.samples.size()) + " samples, expected " +
                     std::to_string(expected));
    }
    clip.samples.resize(expected, 0.0);
  }
  return clip;
}

AudioClip apply_volume(const AudioClip& clip, VolumeLevel level) {
  AudioClip out = clip;
  const double g = level.gain();
  for (double& s : out.samples) s *= g;
  return out;
}

std::array<AudioClip, 5> volume_variants(const AudioClip& clip) {
  clip.check();
  std::array<AudioClip, 5> out;
  for (std::size_t i = 0; i < kVolumeLevels.size(); ++i) out[i] = apply_volume(clip, kVolumeLevels[i]);
  return out;
}

NoiseBank::NoiseBank(std::filesystem::path dir, std::shared_ptr<TtaBackend> backend, TtaRequest defaults,
                     SynthesisOptions options)
    : dir_(std::move(dir)), backend_(std::move(backend)), defaults_(std::move(defaults)), options_(options) {
  if (!backend_) throw InvalidArgument("noise bank needs a backend");
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create noise bank directory " + dir_.string() + ": " + ec.message());
}

std::string NoiseBank::cache_key(const std::string& noise_type, std::uint64_t seed, double duration,
                                 int sample_rate) {
  const std::string material = noise_type + '\x1f' + std::to_string(seed) + '\x1f' + format_number(duration) +
                               '\x1f' + std::to_string(sample_rate);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(material)));
  return buf;
}

std::mutex& NoiseBank::key_mutex(const std::string& key) {
  std::lock_guard lock(map_mutex_);
  auto& slot = key_mutexes_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

void NoiseBank::record(const std::string& key, const std::string& noise_type, std::uint64_t seed) {
  std::lock_guard lock(index_mutex_);
  const auto index_path = dir_ / "index.json";
  json index = json::object();
  if (std::filesystem::exists(index_path)) {
    std::ifstream in(index_path);
    index = json::parse(in, nullptr, false);
    if (index.is_discarded() || !index.is_object()) index = json::object();
  }
  index[key] = {{"file", key + ".wav"},
                {"noise_type", noise_type},
                {"seed", seed},
                {"duration", defaults_.duration},
                {"sample_rate", options_.sample_rate}};
  const std::string text = index.dump(2) + "\n";
  write_file_atomic(index_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

AudioClip NoiseBank::get(const std::string& noise_type, std::uint64_t seed) {
  const std::string key = cache_key(noise_type, seed, defaults_.duration, options_.sample_rate);
  const auto path = dir_ / (key + ".wav");
  std::lock_guard lock(key_mutex(key));

  if (std::filesystem::exists(path)) {
    AudioClip cached = read_wav(path);
    if (cached.sample_rate == options_.sample_rate &&
        cached.samples.size() == sample_count(defaults_.duration, options_.sample_rate)) {
      return cached;
    }
    // Stale or foreign file under our key: regenerate below.
  }

  TtaRequest req = defaults_;
  req.prompt_text = noise_type;
  req.seed = seed;
  ++backend_calls_;
  const AudioClip clip = quantize_pcm16(synthesize_noise(req, *backend_, options_));
  try {
    write_wav(path, clip);
    record(key, noise_type, seed);
  } catch (const IoError& e) {
    throw IoError(std::string("noise bank is not writable: ") + e.what());
  }
  return clip;
}

void NoiseBank::clear() {
  std::lock_guard lock(index_mutex_);
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
    const auto ext = entry.path().extension();
    if (ext == ".wav" || entry.path().filename() == "index.json") std::filesystem::remove(entry.path(), ec);
  }
}

}  // namespace scenenoise
