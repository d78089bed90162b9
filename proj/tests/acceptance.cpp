// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures (capped at 1).
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "scenenoise/acoustics.hpp"
#include "scenenoise/augment.hpp"
#include "scenenoise/scene.hpp"
#include "scenenoise/seeding.hpp"
#include "scenenoise/tta.hpp"
#include "support.hpp"

using namespace scenenoise;
using namespace testsupport;

namespace {

struct Outcome {
  bool ok;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void criterion(int id, const std::string& name, double budget_ms, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  if (r.ok && ms > budget_ms) r = {false, r.detail + "; over time budget"};
  if (!r.ok) ++failures;
  std::printf("%s %2d %-34s %9.2f ms  %s\n", r.ok ? "PASS" : "FAIL", id, name.c_str(), ms, r.detail.c_str());
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

RoomModel room_of(const Vec3& dims, double alpha) {
  RoomModel room;
  room.dimensions = dims;
  room.absorption = alpha;
  room.max_order = 1;
  return room;
}

}  // namespace

int main() {
  criterion(1, "image-source accounting", 1.0, [] {
    const RoomModel room = room_of({4, 2.5, 4}, 0.2);
    const std::vector<Vec3> sources{{2, 1.5, 1.6}, {0.5, 0.5, 1.2}, {1, 2, 3}};
    std::size_t images = 0, total = 0;
    for (const auto& s : sources) {
      for (const auto& img : enumerate_image_sources(room, s)) {
        ++total;
        images += img.order > 0;
      }
    }
    return Outcome{images == 18 && total == 21, "images=" + std::to_string(images) + " total=" + std::to_string(total)};
  });

  criterion(2, "direct-path delay and gain", 10.0, [] {
    RoomModel room = room_of({20, 20, 20}, 0.3);
    room.max_order = 0;
    const Vec3 mic{10, 10, 10}, src{13.43, 10, 10};
    const auto c = image_contributions(room, src, mic);
    const Rir rir = compute_rir(room, src, mic);
    const double expected = 1.0 / (4.0 * kPi * 3.43);
    const double centre_tap = rir.taps.at(160);
    const bool ok = c.size() == 1 && std::abs(c[0].delay_samples - 160.0) < 1e-9 &&
                    std::abs(c[0].gain - expected) < 1e-6 && std::abs(centre_tap - expected) < 1e-6;
    return Outcome{ok, "delay=" + fmt(c.at(0).delay_samples) + " peak=" + fmt(centre_tap) + " expected=" + fmt(expected)};
  });

  criterion(3, "image-source oracle, 10 rooms", 1000.0, [] {
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 10; ++k) {
      Rng rng(derive_seed(42, {k}));
      const Vec3 dims{rng.uniform(3, 10), rng.uniform(3, 8), rng.uniform(2.5, 4)};
      auto inside = [&] {
        return Vec3{rng.uniform(0.2, dims.x - 0.2), rng.uniform(0.2, dims.y - 0.2), rng.uniform(0.2, dims.z - 0.2)};
      };
      const Vec3 src = inside(), mic = inside();
      const double alpha = rng.uniform(0.05, 0.9);
      const RoomModel room = room_of(dims, alpha);
      auto got = image_contributions(room, src, mic);
      auto want = oracle_taps(dims, src, mic, alpha, room.sample_rate, room.speed_of_sound);
      if (got.size() != want.size()) return Outcome{false, "room " + std::to_string(k) + ": image count differs"};
      // Match each oracle image to the closest enumerated one.
      for (const auto& w : want) {
        double best = 1e300;
        for (const auto& g : got) best = std::min(best, std::abs(g.delay_samples - w.delay) + std::abs(g.gain - w.gain));
        worst = std::max(worst, best);
      }
      const Rir rir = compute_rir(room, src, mic);
      const auto ref = oracle_rir(want, KernelConfig{}.window_width_taps);
      if (ref.size() != rir.taps.size()) return Outcome{false, "room " + std::to_string(k) + ": RIR length differs"};
      for (std::size_t n = 0; n < ref.size(); ++n) worst = std::max(worst, std::abs(ref[n] - rir.taps[n]));
    }
    return Outcome{worst < 1e-9, "max deviation " + fmt(worst)};
  });

  criterion(4, "FFT convolution vs direct sum", 1000.0, [] {
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
      const auto x = random_signal(derive_seed(7, {k, 0}), 1000);
      const auto h = random_signal(derive_seed(7, {k, 1}), 1000);
      const auto fast = convolve(x, h);
      const auto slow = naive_convolve(x, h);
      if (fast.size() != slow.size()) return Outcome{false, "length mismatch"};
      for (std::size_t i = 0; i < fast.size(); ++i) worst = std::max(worst, std::abs(fast[i] - slow[i]));
    }
    return Outcome{worst < 1e-6, "max abs diff " + fmt(worst)};
  });

  criterion(5, "kernel identities", 1000.0, [] {
    const KernelConfig cfg;
    const int fs = kDefaultSampleRate;
    const double tw = cfg.window_seconds(fs);
    double err = std::abs(kernel(0.0, cfg, fs) - 1.0);
    err = std::max({err, std::abs(kernel(tw / 2, cfg, fs)), std::abs(kernel(-tw / 2, cfg, fs)),
                    std::abs(kernel(tw / 4, cfg, fs) - 0.5), std::abs(kernel(-tw / 4, cfg, fs) - 0.5)});
    for (int i = 0; i <= 1000; ++i) {
      const double t = -tw / 2 + tw * i / 1000.0;
      err = std::max(err, std::abs(kernel(t, cfg, fs) - kernel(-t, cfg, fs)));
    }
    return Outcome{err <= 1e-12, "max error " + fmt(err)};
  });

  criterion(6, "filter metrics on engineered corpus", 1000.0, [] {
    const auto corpus = engineered_corpus();
    const CorpusMetrics m = corpus_metrics(corpus);
    const bool pct = m.total == 40 && m.response_error.percent == 10.0 && m.mic_overlaps_source.percent == 5.0 &&
                     m.location_exceeds_dimensions.percent == 20.0 && m.types_less_than_target.percent == 0.0;
    const bool clean = validate(kBalconyResponse).passed;
    return Outcome{pct && clean, fmt(m.response_error.percent) + "/" + fmt(m.mic_overlaps_source.percent) + "/" +
                                     fmt(m.location_exceeds_dimensions.percent) + "/" +
                                     fmt(m.types_less_than_target.percent) +
                                     (clean ? ", balcony scene passes" : ", balcony scene rejected")};
  });

  criterion(7, "volume level energies", 1000.0, [] {
    AudioClip clip{random_signal(99, 16000), kDefaultSampleRate};
    const double e0 = energy(clip.samples);
    const auto variants = volume_variants(clip);
    double worst = 0.0;
    for (std::size_t i = 0; i < variants.size(); ++i) {
      const double g = kVolumeLevels[i].gain();
      const double want = g * g * e0;
      const double got = energy(variants[i].samples);
      worst = std::max(worst, want == 0.0 ? std::abs(got) : std::abs(got - want) / want);
    }
    return Outcome{worst <= 1e-9, "max relative error " + fmt(worst)};
  });

  criterion(8, "add-noise rate concentration", 5000.0, [] {
    auto fraction = [](double anr) {
      AugmentConfig cfg;
      cfg.anr = anr;
      cfg.seed = 2024;
      std::size_t hits = 0;
      for (std::size_t i = 0; i < 10000; ++i) hits += should_augment(i, cfg);
      return static_cast<double>(hits) / 10000.0;
    };
    const double f = fraction(0.2), f0 = fraction(0.0), f1 = fraction(1.0);
    return Outcome{f >= 0.188 && f <= 0.212 && f0 == 0.0 && f1 == 1.0,
                   "anr 0.2 -> " + fmt(f) + ", 0 -> " + fmt(f0) + ", 1 -> " + fmt(f1)};
  });

  criterion(9, "end-to-end determinism", 30000.0, [] {
    TempDir tmp("acceptance_e2e");
    const auto manifest = make_dataset(tmp.path() / "in", 5);
    AugmentConfig cfg;
    cfg.anr = 1.0;
    cfg.seed = 77;
    SceneSource scenes;
    scenes.transport = make_transport(scenes.backend);
    TtaRequest req;
    req.duration = 1.0;
    for (const char* run : {"a", "b"}) {
      NoiseBank bank(tmp.path() / (std::string("bank_") + run), std::make_shared<FixtureTta>(), req);
      const auto r = augment_dataset(manifest, tmp.path() / run, cfg, scenes, bank);
      if (r.errors != 0 || r.augmented != 5) return Outcome{false, std::string("run ") + run + " had errors"};
    }
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(tmp.path() / "a")) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), tmp.path() / "a");
      if (slurp(e.path()) != slurp(tmp.path() / "b" / rel)) return Outcome{false, rel.string() + " differs"};
      ++files;
    }
    return Outcome{files == 6, std::to_string(files) + " files byte-identical"};
  });

  criterion(10, "superposition on balcony scene", 1000.0, [] {
    const SceneInfo scene = parse_scene_info(kBalconyResponse);
    RoomParams params;
    params.seed = 5;
    AudioClip speech{random_signal(1, 8000), kDefaultSampleRate};
    std::vector<AudioClip> noises{{random_signal(2, 12000), kDefaultSampleRate},
                                  {random_signal(3, 5000), kDefaultSampleRate}};
    const auto mix = simulate_scene(scene, speech, noises, params);
    const RoomModel room = make_room(scene, params, speech.sample_rate);
    std::vector<double> sum =
        simulate_source(room, scene.speaker_location, scene.mic_location, speech, speech.size(), params.kernel).samples;
    for (std::size_t i = 0; i < noises.size(); ++i) {
      const AudioClip fitted = fit_to_length(noises[i], speech.size(), noise_alignment_seed(params.seed, i));
      const auto wet = simulate_source(room, scene.noise_sources[i].location, scene.mic_location, fitted,
                                       speech.size(), params.kernel);
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += wet.samples[k];
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < sum.size(); ++k) worst = std::max(worst, std::abs(sum[k] - mix.unnormalized.samples[k]));
    return Outcome{worst <= 1e-9, "max deviation " + fmt(worst)};
  });

  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
