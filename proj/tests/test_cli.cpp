#include <doctest.h>

#include <sstream>

#include "cli.hpp"
#include "scenenoise/acoustics.hpp"
#include "scenenoise/augment.hpp"
#include "scenenoise/prompt.hpp"
#include "support.hpp"

using namespace scenenoise;
using namespace testsupport;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"no-such-command"}).code == 2);
    CHECK(run({"rir-compute", "--room", "4,4"}).code == 2);
    CHECK(run({"rir-compute", "--room", "4,4", "--source", "1,1,1", "--mic", "2,2,2"}).code == 2);
    CHECK(run({"scene-generate", "--task", "Noisy balcony"}).code == 2);  // no seed
    CHECK(run({"--help"}).code == 0);
  }

  TEST_CASE("prompt-build matches the library") {
    const auto r = run({"prompt-build", "--task", "Noisy balcony"});
    CHECK(r.code == 0);
    CHECK(r.out == build_single(default_template(ScenePrompt("Noisy", "balcony"))));
    const auto d = run({"prompt-build", "--task", "Noisy balcony", "--mode", "dual"});
    CHECK(json::parse(d.out)["history"].size() == 7);
  }

  TEST_CASE("scene-validate and corpus-metrics") {
    TempDir tmp("cli_validate");
    write(tmp.path() / "good.txt", kBalconyResponse);
    write(tmp.path() / "bad.txt", kBalconySingleNoise);
    const auto good = run({"scene-validate", "--in", (tmp.path() / "good.txt").string()});
    CHECK(good.code == 0);
    CHECK(json::parse(good.out)["passed"] == true);
    const auto bad = run({"scene-validate", "--in", (tmp.path() / "bad.txt").string()});
    CHECK(bad.code == 1);
    CHECK(json::parse(bad.out)["types_less_than_target"] == true);
    CHECK(run({"scene-validate", "--in", (tmp.path() / "bad.txt").string(), "--min-noise-types", "1"}).code == 0);

    fs::create_directories(tmp.path() / "corpus");
    const auto corpus = engineered_corpus();
    for (std::size_t i = 0; i < corpus.size(); ++i) write(tmp.path() / "corpus" / (std::to_string(100 + i) + ".txt"), corpus[i]);
    const auto m = run({"corpus-metrics", "--dir", (tmp.path() / "corpus").string(), "--json"});
    REQUIRE(m.code == 0);
    CHECK(json::parse(m.out) == to_json(corpus_metrics(corpus)));
    const auto table = run({"corpus-metrics", "--dir", (tmp.path() / "corpus").string(), "--label", "eng"});
    CHECK(table.out == render_metrics_table(corpus_metrics(corpus), "eng"));
  }

  TEST_CASE("rir-compute lists the balcony images") {
    TempDir tmp("cli_rir");
    const auto r = run({"rir-compute", "--room", "4,2.5,4", "--source", "2,1.5,1.6", "--mic", "3.5,0.5,1.2", "--out",
                        (tmp.path() / "rir.wav").string(), "--taps", (tmp.path() / "taps.txt").string(), "--geometry",
                        (tmp.path() / "geo.json").string()});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["images"].size() == 7);
    CHECK(j["absorption"].get<double>() == doctest::Approx(absorption_from_rt60(0.5, {4, 2.5, 4})));

    RoomModel room;
    room.dimensions = {4, 2.5, 4};
    room.absorption = absorption_from_rt60(0.5, room.dimensions);
    const Rir rir = compute_rir(room, {2, 1.5, 1.6}, {3.5, 0.5, 1.2});
    std::istringstream taps(slurp(tmp.path() / "taps.txt"));
    std::vector<double> read;
    for (double v; taps >> v;) read.push_back(v);
    CHECK(read == rir.taps);
    CHECK(read_wav(tmp.path() / "rir.wav").size() == rir.taps.size());
    CHECK(fs::exists(tmp.path() / "geo.json"));
  }

  TEST_CASE("scene-generate, noise-synthesize, scene-simulate") {
    TempDir tmp("cli_pipeline");
    const auto g = run({"scene-generate", "--task", "Busy cafe", "--seed", "4", "--out", (tmp.path() / "scene.txt").string()});
    REQUIRE(g.code == 0);
    CHECK(slurp(tmp.path() / "scene.txt") == synthesize_scene_response("Busy cafe", 4));

    const auto n = run({"noise-synthesize", "--type", "wind blowing", "--seed", "2", "--duration", "0.5", "--levels",
                        "--out-dir", (tmp.path() / "noise").string()});
    REQUIRE(n.code == 0);
    CHECK(fs::exists(tmp.path() / "noise" / "wind_blowing.wav"));
    CHECK(fs::exists(tmp.path() / "noise" / "wind_blowing_25.wav"));
    CHECK(run({"noise-synthesize", "--type", "wind"}).code == 2);

    AudioClip speech{random_signal(5, 4000), 16000};
    write_wav(tmp.path() / "speech.wav", speech);
    write(tmp.path() / "balcony.txt", kBalconyResponse);
    write_wav(tmp.path() / "n1.wav", AudioClip{random_signal(6, 3000), 16000});
    write_wav(tmp.path() / "n2.wav", AudioClip{random_signal(7, 9000), 16000});
    const auto s = run({"scene-simulate", "--scene", (tmp.path() / "balcony.txt").string(), "--speech",
                        (tmp.path() / "speech.wav").string(), "--noise", (tmp.path() / "n1.wav").string(), "--noise",
                        (tmp.path() / "n2.wav").string(), "--seed", "9", "--out", (tmp.path() / "mix.wav").string(),
                        "--dump-dir", (tmp.path() / "dump").string()});
    REQUIRE(s.code == 0);
    RoomParams params;
    params.seed = 9;
    const std::vector<AudioClip> noises{read_wav(tmp.path() / "n1.wav"), read_wav(tmp.path() / "n2.wav")};
    const auto lib = simulate_scene(parse_scene_info(kBalconyResponse), read_wav(tmp.path() / "speech.wav"), noises, params);
    CHECK(read_wav(tmp.path() / "mix.wav") == quantize_pcm16(lib.audio));
    CHECK(fs::exists(tmp.path() / "dump" / "rir_source2.wav"));
  }

  TEST_CASE("augment command matches the library and honours precedence") {
    TempDir tmp("cli_augment");
    const auto manifest = make_dataset(tmp.path() / "in", 3, 0.25);
    write(tmp.path() / "cfg.json", R"({"seed": 12, "anr": 0.0, "noise_duration": 0.5})");
    const auto r = run({"augment", "--in", manifest.string(), "--out-dir", (tmp.path() / "cli").string(), "--config",
                        (tmp.path() / "cfg.json").string(), "--anr", "1"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["augmented"] == 3);

    AugmentConfig cfg;
    cfg.seed = 12;
    cfg.anr = 1.0;
    SceneSource scenes;
    scenes.transport = make_transport(scenes.backend);
    TtaRequest req;
    req.duration = 0.5;
    NoiseBank bank(tmp.path() / "bank", std::make_shared<FixtureTta>(), req);
    augment_dataset(manifest, tmp.path() / "lib", cfg, scenes, bank);
    CHECK(slurp(tmp.path() / "cli" / kOutputManifestName) == slurp(tmp.path() / "lib" / kOutputManifestName));
    CHECK(slurp(tmp.path() / "cli" / "audio" / "utt1.wav") == slurp(tmp.path() / "lib" / "audio" / "utt1.wav"));

    write(tmp.path() / "bad.json", "[1, 2]");
    CHECK(run({"augment", "--in", manifest.string(), "--out-dir", (tmp.path() / "x").string(), "--config",
               (tmp.path() / "bad.json").string()})
              .code == 2);
  }
}
