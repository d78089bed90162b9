#include "scenenoise/augment.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "scenenoise/error.hpp"
#include "scenenoise/seeding.hpp"

namespace scenenoise {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string safe_file_stem(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    if (c == '/' || c == '\\' || c == ':' || c == '\0') c = '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

// Scenes shared across utterances, generated once per (prompt, slot).
class ScenePool {
 public:
  ScenePool(const AugmentConfig& cfg, const SceneSource& source) : cfg_(cfg), source_(source) {}

  std::pair<SceneInfo, std::string> get(std::size_t utterance_index) {
    Rng rng(derive_seed(utterance_seed(cfg_.seed, utterance_index), "scene"));
    const std::size_t prompt_index = static_cast<std::size_t>(rng.below(cfg_.scene_prompts.size()));
    const std::size_t slot = cfg_.scene_pool_size == 0 ? utterance_index
                                                       : static_cast<std::size_t>(rng.below(cfg_.scene_pool_size));
    const ScenePrompt& prompt = cfg_.scene_prompts[prompt_index];
    const auto key = std::make_pair(prompt_index, slot);

    std::shared_ptr<Slot> entry;
    {
      std::lock_guard lock(mutex_);
      auto& s = slots_[key];
      if (!s) s = std::make_shared<Slot>();
      entry = s;
    }
    std::lock_guard lock(entry->mutex);
    if (!entry->scene) {
      const BetTemplate tmpl = source_.base_template.value_or(default_template(prompt));
      const std::uint64_t seed = derive_seed(derive_seed(cfg_.seed, "scene-pool"), {prompt_index, slot});
      entry->scene = generate_scene_info(prompt, tmpl, source_.backend, *source_.transport, cfg_.filter, seed).scene;
    }
    return {*entry->scene, render_query(prompt)};
  }

 private:
  struct Slot {
    std::mutex mutex;
    std::optional<SceneInfo> scene;
  };
  const AugmentConfig& cfg_;
  const SceneSource& source_;
  std::mutex mutex_;
  std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<Slot>> slots_;
};

}  // namespace

std::vector<ScenePrompt> AugmentConfig::default_scene_prompts() {
  return {ScenePrompt("Noisy", "pedestrian street"), ScenePrompt("Noisy", "balcony"), ScenePrompt("Busy", "cafe"),
          ScenePrompt("Noisy", "office"), ScenePrompt("Crowded", "subway station")};
}

void AugmentConfig::check() const {
  if (!(anr >= 0.0 && anr <= 1.0)) throw InvalidArgument("anr must be in [0, 1]");
  if (!(rt60 > 0.0)) throw InvalidArgument("rt60 must be positive");
  if (max_order < 0) throw InvalidArgument("max_order must be >= 0");
  if (sample_rate <= 0) throw InvalidArgument("sample_rate must be positive");
  if (scene_prompts.empty()) throw InvalidArgument("at least one scene prompt is required");
  if (jobs == 0) throw InvalidArgument("jobs must be >= 1");
  if (!(peak_limit > 0.0)) throw InvalidArgument("peak_limit must be positive");
  filter.check();
  kernel.check();
}

RoomParams AugmentConfig::room_params(std::uint64_t useed) const {
  RoomParams p;
  p.rt60 = rt60;
  p.max_order = max_order;
  p.speed_of_sound = speed_of_sound;
  p.environment = environment;
  p.kernel = kernel;
  p.seed = useed;
  p.peak_limit = peak_limit;
  return p;
}

void apply_config_json(const json& j, AugmentConfig& cfg) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  get("anr", cfg.anr);
  get("seed", cfg.seed);
  get("rt60", cfg.rt60);
  get("max_order", cfg.max_order);
  get("sample_rate", cfg.sample_rate);
  get("overlap_epsilon", cfg.filter.overlap_epsilon);
  get("min_noise_types", cfg.filter.min_noise_types);
  get("bounds_inclusive", cfg.filter.bounds_inclusive);
  get("kernel_taps", cfg.kernel.window_width_taps);
  get("speed_of_sound", cfg.speed_of_sound);
  get("peak_limit", cfg.peak_limit);
  get("scene_pool_size", cfg.scene_pool_size);
  get("jobs", cfg.jobs);
  if (j.contains("kernel_mode")) {
    const auto mode = j.at("kernel_mode").get<std::string>();
    if (mode == "raised-cosine") cfg.kernel.mode = KernelMode::raised_cosine;
    else if (mode == "windowed-sinc") cfg.kernel.mode = KernelMode::windowed_sinc;
    else throw InvalidArgument("kernel_mode must be raised-cosine or windowed-sinc");
  }
  if (j.contains("environment")) {
    const auto env = j.at("environment").get<std::string>();
    if (env == "indoor") cfg.environment = Environment::indoor;
    else if (env == "outdoor") cfg.environment = Environment::outdoor;
    else throw InvalidArgument("environment must be indoor or outdoor");
  }
  if (j.contains("scene_prompts")) {
    cfg.scene_prompts.clear();
    for (const auto& p : j.at("scene_prompts")) cfg.scene_prompts.push_back(ScenePrompt::from_text(p.get<std::string>()));
  }
}

std::uint64_t utterance_seed(std::uint64_t seed, std::size_t utterance_index) {
  return derive_seed(seed, {utterance_index});
}

bool should_augment(std::size_t utterance_index, const AugmentConfig& cfg) {
  Rng rng(derive_seed(utterance_seed(cfg.seed, utterance_index), "anr"));
  return rng.uniform01() < cfg.anr;
}

VolumeLevel pick_volume(std::size_t utterance_index, std::size_t source_index, const AugmentConfig& cfg) {
  Rng rng(derive_seed(derive_seed(utterance_seed(cfg.seed, utterance_index), "volume"), {source_index}));
  return kVolumeLevels[static_cast<std::size_t>(rng.below(kVolumeLevels.size()))];
}

std::uint64_t noise_seed(const AugmentConfig& cfg) { return derive_seed(cfg.seed, "noise"); }

json to_json(const ManifestEntry& e) {
  json j = {{"utterance_id", e.utterance_id},
            {"input_path", e.input_path},
            {"path", e.output_path},
            {"augmented", e.augmented},
            {"normalization_gain", e.normalization_gain},
            {"seed_used", e.seed_used},
            {"original_sample_rate", e.original_sample_rate}};
  if (e.transcript) j["transcript"] = *e.transcript;
  if (e.scene) {
    j["scene"] = to_json(*e.scene);
    j["scene_prompt"] = e.scene_prompt;
    json levels = json::array();
    for (const auto& v : e.volume_levels) levels.push_back(v.percent);
    j["volume_levels"] = std::move(levels);
  }
  if (!e.error.empty()) j["error"] = e.error;
  return j;
}

ManifestEntry manifest_entry_from_json(const json& j) {
  ManifestEntry e;
  e.utterance_id = j.at("utterance_id").get<std::string>();
  e.input_path = j.value("input_path", std::string{});
  e.output_path = j.value("path", std::string{});
  if (j.contains("transcript")) e.transcript = j.at("transcript").get<std::string>();
  e.augmented = j.value("augmented", false);
  e.normalization_gain = j.value("normalization_gain", 1.0);
  e.seed_used = j.value("seed_used", std::uint64_t{0});
  e.original_sample_rate = j.value("original_sample_rate", 0);
  if (j.contains("scene")) {
    e.scene = scene_from_json(j.at("scene"));
    e.scene_prompt = j.value("scene_prompt", std::string{});
    for (const auto& v : j.value("volume_levels", json::array())) e.volume_levels.push_back({v.get<int>()});
  }
  e.error = j.value("error", std::string{});
  return e;
}

std::vector<ManifestRecord> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<ManifestRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    auto where = [&] { return path.string() + ":" + std::to_string(lineno); };
    if (j.is_discarded() || !j.is_object()) throw InvalidArgument(where() + ": not a JSON object");
    if (!j.contains("utterance_id") || !j["utterance_id"].is_string() || !j.contains("path") ||
        !j["path"].is_string()) {
      throw InvalidArgument(where() + ": expected string fields utterance_id and path");
    }
    ManifestRecord r;
    r.utterance_id = j["utterance_id"].get<std::string>();
    r.path = j["path"].get<std::string>();
    const fs::path p(r.path);
    r.resolved_path = p.is_absolute() ? p : path.parent_path() / p;
    if (j.contains("transcript") && j["transcript"].is_string()) r.transcript = j["transcript"].get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::string text;
  for (const auto& e : entries) text += to_json(e).dump() + "\n";
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<ManifestEntry> read_output_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(manifest_entry_from_json(json::parse(line)));
  }
  return out;
}

AugmentedUtterance augment_utterance(const AudioClip& speech, const SceneInfo& scene, NoiseBank& bank,
                                     const AugmentConfig& cfg, std::size_t utterance_index) {
  cfg.check();
  if (speech.sample_rate != cfg.sample_rate) {
    throw SampleRateMismatch("speech at " + std::to_string(speech.sample_rate) + " Hz, pipeline at " +
                             std::to_string(cfg.sample_rate) + " Hz");
  }
  const FilterReport report = validate_scene(scene, cfg.filter);
  if (!report.passed) throw InvalidArgument("scene does not pass the filter metrics");

  const std::uint64_t useed = utterance_seed(cfg.seed, utterance_index);
  AugmentedUtterance out;
  std::vector<AudioClip> noises;
  for (std::size_t i = 0; i < scene.noise_sources.size(); ++i) {
    const VolumeLevel level = pick_volume(utterance_index, i, cfg);
    noises.push_back(apply_volume(bank.get(scene.noise_sources[i].noise_type, noise_seed(cfg)), level));
    out.entry.volume_levels.push_back(level);
  }
  SimulationResult sim = simulate_scene(scene, speech, noises, cfg.room_params(useed));
  out.audio = std::move(sim.audio);
  out.entry.augmented = true;
  out.entry.scene = scene;
  out.entry.scene->raw_text.clear();
  out.entry.normalization_gain = sim.normalization_gain;
  out.entry.seed_used = useed;
  out.entry.original_sample_rate = speech.sample_rate;
  return out;
}

DatasetResult augment_dataset(const fs::path& in_manifest, const fs::path& out_dir, const AugmentConfig& cfg,
                              const SceneSource& scenes, NoiseBank& bank) {
  cfg.check();
  if (!scenes.transport) throw InvalidArgument("augment_dataset needs a chat transport");
  const auto records = read_manifest(in_manifest);
  std::error_code ec;
  fs::create_directories(out_dir / "audio", ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  std::map<std::string, ManifestEntry> previous;
  const fs::path out_manifest = out_dir / kOutputManifestName;
  if (fs::exists(out_manifest)) {
    try {
      for (auto& e : read_output_manifest(out_manifest)) previous.emplace(e.utterance_id, std::move(e));
    } catch (const std::exception&) {
      previous.clear();  // unreadable: process everything again
    }
  }

  ScenePool pool(cfg, scenes);
  DatasetResult result;
  result.entries.resize(records.size());
  std::vector<char> resumed(records.size(), 0);

  auto process = [&](std::size_t i) {
    const ManifestRecord& rec = records[i];
    ManifestEntry& entry = result.entries[i];
    entry.utterance_id = rec.utterance_id;
    entry.input_path = rec.path;
    entry.transcript = rec.transcript;
    entry.seed_used = utterance_seed(cfg.seed, i);
    const bool augment = should_augment(i, cfg);

    if (auto it = previous.find(rec.utterance_id); it != previous.end()) {
      const ManifestEntry& old = it->second;
      if (old.error.empty() && old.seed_used == entry.seed_used && old.augmented == augment &&
          !old.output_path.empty() && fs::exists(out_dir / old.output_path)) {
        entry = old;
        resumed[i] = 1;
        return;
      }
    }

    const std::string stem = safe_file_stem(rec.utterance_id);
    try {
      if (augment) {
        AudioClip speech = read_wav(rec.resolved_path);
        const int original_rate = speech.sample_rate;
        if (speech.sample_rate != cfg.sample_rate) speech = resample_linear(speech, cfg.sample_rate);
        auto [scene, prompt] = pool.get(i);
        AugmentedUtterance aug = augment_utterance(speech, scene, bank, cfg, i);
        entry.augmented = true;
        entry.scene = std::move(aug.entry.scene);
        entry.scene_prompt = prompt;
        entry.volume_levels = std::move(aug.entry.volume_levels);
        entry.normalization_gain = aug.entry.normalization_gain;
        entry.original_sample_rate = original_rate;
        entry.output_path = "audio/" + stem + ".wav";
        write_wav(out_dir / entry.output_path, aug.audio);
        return;
      }
    } catch (const std::exception& e) {
      ManifestEntry failed;
      failed.utterance_id = entry.utterance_id;
      failed.input_path = entry.input_path;
      failed.transcript = entry.transcript;
      failed.seed_used = entry.seed_used;
      failed.error = e.what();
      entry = std::move(failed);
    }
    // Not augmented (or failed): the input passes through untouched.
    try {
      entry.output_path = "audio/" + stem + rec.resolved_path.extension().string();
      const auto bytes = read_file_bytes(rec.resolved_path);
      write_file_atomic(out_dir / entry.output_path, bytes);
    } catch (const std::exception& e) {
      if (entry.error.empty()) entry.error = e.what();
      entry.output_path.clear();
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1)) process(i);
  };
  const std::size_t workers = std::min(cfg.jobs, std::max<std::size_t>(records.size(), 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    result.augmented += result.entries[i].augmented;
    result.errors += !result.entries[i].error.empty();
    result.resumed += resumed[i];
  }
  write_manifest(out_manifest, result.entries);
  return result;
}

}  // namespace scenenoise
