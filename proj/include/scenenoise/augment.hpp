#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenenoise/acoustics.hpp"
#include "scenenoise/chat.hpp"
#include "scenenoise/prompt.hpp"
#include "scenenoise/scene.hpp"
#include "scenenoise/tta.hpp"

namespace scenenoise {

struct AugmentConfig {
  double anr = 0.2;  // add-noise rate: probability an utterance is augmented
  std::uint64_t seed = 0;
  double rt60 = 0.5;
  int max_order = 1;
  int sample_rate = kDefaultSampleRate;
  std::vector<ScenePrompt> scene_prompts = default_scene_prompts();
  FilterConfig filter;
  KernelConfig kernel;
  Environment environment = Environment::indoor;
  double speed_of_sound = kSpeedOfSound;
  double peak_limit = 0.95;
  // Distinct scenes per prompt; utterances share scenes drawn from the pool.
  // Zero gives every augmented utterance its own scene.
  std::size_t scene_pool_size = 100;
  std::size_t jobs = 1;

  void check() const;
  RoomParams room_params(std::uint64_t utterance_seed) const;

  static std::vector<ScenePrompt> default_scene_prompts();
};

// Overlays keys present in `j` onto `cfg`. Keys match the CLI flag names
// with dashes replaced by underscores.
void apply_config_json(const nlohmann::json& j, AugmentConfig& cfg);

// Per-utterance seed; independent of processing order.
std::uint64_t utterance_seed(std::uint64_t seed, std::size_t utterance_index);

bool should_augment(std::size_t utterance_index, const AugmentConfig& cfg);
VolumeLevel pick_volume(std::size_t utterance_index, std::size_t source_index, const AugmentConfig& cfg);

// Seed under which noise clips are requested from the bank.
std::uint64_t noise_seed(const AugmentConfig& cfg);

struct ManifestRecord {
  std::string utterance_id;
  std::string path;  // as written in the manifest
  std::filesystem::path resolved_path;
  std::optional<std::string> transcript;
};

struct ManifestEntry {
  std::string utterance_id;
  std::string input_path;
  std::string output_path;  // relative to the output directory
  std::optional<std::string> transcript;
  bool augmented = false;
  std::optional<SceneInfo> scene;
  std::string scene_prompt;
  std::vector<VolumeLevel> volume_levels;
  double normalization_gain = 1.0;
  std::uint64_t seed_used = 0;
  int original_sample_rate = 0;
  std::string error;
};

nlohmann::json to_json(const ManifestEntry& e);
ManifestEntry manifest_entry_from_json(const nlohmann::json& j);

// JSON lines {"utterance_id", "path", "transcript"?}; relative paths are
// resolved against the manifest's directory. Throws IoError, InvalidArgument.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_output_manifest(const std::filesystem::path& path);

struct AugmentedUtterance {
  AudioClip audio;
  ManifestEntry entry;
};

// Fetches each noise type from the bank, scales it by the drawn volume
// level and simulates the scene. Throws if the scene fails cfg.filter.
AugmentedUtterance augment_utterance(const AudioClip& speech, const SceneInfo& scene, NoiseBank& bank,
                                     const AugmentConfig& cfg, std::size_t utterance_index);

// Chat side of the pipeline: where augmented utterances get their scenes.
struct SceneSource {
  ChatBackend backend;
  std::shared_ptr<ChatTransport> transport;
  std::optional<BetTemplate> base_template;  // built-in template when empty
};

struct DatasetResult {
  std::vector<ManifestEntry> entries;
  std::size_t augmented = 0;
  std::size_t errors = 0;
  std::size_t resumed = 0;
};

inline constexpr const char* kOutputManifestName = "manifest.jsonl";

// Processes every utterance of `in_manifest` into `out_dir`: augmented ones
// are written as 16-bit WAV, the rest copied byte for byte. Entries whose
// output already exists with a matching seed are reused. Per-entry failures
// are recorded in the entry (the input is copied through) and counted.
DatasetResult augment_dataset(const std::filesystem::path& in_manifest, const std::filesystem::path& out_dir,
                              const AugmentConfig& cfg, const SceneSource& scenes, NoiseBank& bank);

}  // namespace scenenoise
