#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scenenoise/vec3.hpp"

namespace scenenoise {

struct NoiseSource {
  std::string noise_type;
  Vec3 location;

  friend bool operator==(const NoiseSource&, const NoiseSource&) = default;
};

// Scene description produced by a chat model: room extents, scene type,
// microphone and speaker positions, and the typed noise sources.
struct SceneInfo {
  Vec3 dimensions;
  std::string scene_type;
  Vec3 mic_location;
  Vec3 speaker_location;
  std::vector<NoiseSource> noise_sources;
  // Verbatim text the scene was parsed from; empty for scenes built in code.
  std::string raw_text;

  std::size_t noise_count() const { return noise_sources.size(); }

  friend bool operator==(const SceneInfo&, const SceneInfo&) = default;
};

struct FilterConfig {
  double overlap_epsilon = 0.1;    // meters
  std::size_t min_noise_types = 2;
  bool bounds_inclusive = false;   // false: locations must lie in (0, dim)

  void check() const;
};

struct FilterReport {
  bool response_error = false;
  bool mic_overlaps_source = false;
  bool location_exceeds_dimensions = false;
  bool types_less_than_target = false;
  bool passed = false;
  // Parser message when response_error is set.
  std::string reason;
};

struct MetricTally {
  std::size_t failing = 0;
  double percent = 0.0;  // one decimal
};

struct CorpusMetrics {
  std::size_t total = 0;
  MetricTally response_error;
  MetricTally mic_overlaps_source;
  MetricTally location_exceeds_dimensions;
  MetricTally types_less_than_target;
};

// Parses chat-model output. Two forms are accepted:
//
//   line grammar                         JSON object
//   dimensions: (4, 2.5, 4)              {"dimensions": [4, 2.5, 4],
//   scene: balcony                        "scene": "balcony",
//   microphone: (3.5, 0.5, 1.2)           "microphone": [3.5, 0.5, 1.2],
//   speaker: (2, 1.5, 1.6)                "speaker": [2, 1.5, 1.6],
//   noise: type=footsteps location=(…)    "noises": [{"type": …, "location": […]}]}
//
// Keys are case-insensitive and may carry a list bullet; lines that are not
// keyed (translations, prose) are ignored. Throws ParseError.
SceneInfo parse_scene_info(std::string_view text);

// Canonical line-grammar writer. Parsing the result reproduces every field
// except raw_text.
std::string render_scene(const SceneInfo& scene);

// Filter metric #1: the response cannot be parsed.
bool check_response_error(std::string_view text);
// Filter metric #2.
bool check_mic_overlap(const SceneInfo& scene, const FilterConfig& cfg = {});
// Filter metric #3.
bool check_location_bounds(const SceneInfo& scene, const FilterConfig& cfg = {});
// Filter metric #4.
bool check_type_count(const SceneInfo& scene, const FilterConfig& cfg = {});

FilterReport validate(std::string_view text, const FilterConfig& cfg = {});
// Metrics #2-#4 on an already-parsed scene.
FilterReport validate_scene(const SceneInfo& scene, const FilterConfig& cfg = {});

// Throws EmptyCorpus. Metric counts are non-exclusive; #2-#4 are only
// evaluated for parseable responses.
CorpusMetrics corpus_metrics(std::span<const std::string> responses, const FilterConfig& cfg = {});

// Percentage rounded to one decimal place.
double percent_one_decimal(std::size_t count, std::size_t total);

// Structured-text (JSON) forms used by the CLI and manifests.
nlohmann::json to_json(const Vec3& v);
nlohmann::json to_json(const SceneInfo& scene);
nlohmann::json to_json(const FilterReport& report);
nlohmann::json to_json(const CorpusMetrics& metrics);
SceneInfo scene_from_json(const nlohmann::json& j);

// Four-column table with one-decimal percentages.
std::string render_metrics_table(const CorpusMetrics& metrics, std::string_view label = "corpus");

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

}  // namespace scenenoise
