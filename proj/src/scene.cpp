#include "scenenoise/scene.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <regex>
#include <sstream>

#include "scenenoise/error.hpp"

namespace scenenoise {

namespace {

using nlohmann::json;

constexpr const char* kNumber = R"([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)";

const std::regex& key_line_regex() {
  // Optional bullet or markdown emphasis, a known key, then ':' or a full-width colon.
  static const std::regex re(
      R"(^\s*(?:[-*]\s+)?\**\s*(dimensions|scene|microphone|speaker|noise)\s*\**\s*(?::|\xEF\xBC\x9A)\s*(.*?)\s*$)",
      std::regex::icase);
  return re;
}

const std::regex& tuple_regex() {
  static const std::regex re(std::string(R"(^[\(\[]\s*()") + kNumber + R"()\s*,\s*()" + kNumber +
                             R"()\s*,\s*()" + kNumber + R"()\s*[\)\]]$)");
  return re;
}

const std::regex& noise_regex() {
  static const std::regex re(R"(^type\s*=\s*(.*)\s+location\s*=\s*(\S.*)$)", std::regex::icase);
  return re;
}

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_double(std::string text) {
  if (!text.empty() && text.front() == '+') text.erase(0, 1);
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ParseError("malformed number '" + text + "'");
  if (!std::isfinite(v)) throw ParseError("non-finite number '" + text + "'");
  return v;
}

Vec3 parse_tuple(const std::string& text, const std::string& what) {
  std::smatch m;
  if (!std::regex_match(text, m, tuple_regex())) {
    throw ParseError("malformed " + what + " tuple '" + text + "'");
  }
  return {parse_double(m[1]), parse_double(m[2]), parse_double(m[3])};
}

void check_dimensions(const Vec3& d) {
  if (!(d.x > 0.0 && d.y > 0.0 && d.z > 0.0)) {
    throw ParseError("dimensions must be strictly positive");
  }
}

Vec3 json_vec(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ParseError("malformed " + what + " tuple");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ParseError("malformed " + what + " tuple");
    v[i] = j[i].get<double>();
  }
  if (!v.is_finite()) throw ParseError("non-finite " + what);
  return v;
}

std::optional<json> embedded_json_object(std::string_view text) {
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    return std::nullopt;
  }
  json j = json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("dimensions")) return std::nullopt;
  return j;
}

SceneInfo parse_line_grammar(std::string_view text) {
  std::optional<Vec3> dims, mic, speaker;
  std::optional<std::string> scene_type;
  std::vector<NoiseSource> noises;
  bool any_key = false;

  std::istringstream lines{std::string(text)};
  std::string line;
  while (std::getline(lines, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, key_line_regex())) continue;
    any_key = true;
    const std::string key = lower(m[1]);
    const std::string value = m[2];
    auto once = [&](auto& slot, auto v) {
      if (slot) throw ParseError("duplicate '" + key + "' entry");
      slot = std::move(v);
    };
    if (key == "dimensions") {
      once(dims, parse_tuple(value, key));
    } else if (key == "microphone") {
      once(mic, parse_tuple(value, key));
    } else if (key == "speaker") {
      once(speaker, parse_tuple(value, key));
    } else if (key == "scene") {
      once(scene_type, trim(value));
    } else {
      std::smatch nm;
      if (!std::regex_match(value, nm, noise_regex())) {
        throw ParseError("malformed noise entry '" + value + "'");
      }
      NoiseSource src{trim(nm[1].str()), parse_tuple(trim(nm[2].str()), "noise location")};
      if (src.noise_type.empty()) throw ParseError("noise entry without a type");
      noises.push_back(std::move(src));
    }
  }

  if (!any_key) throw ParseError("no recognizable response structure");
  if (!dims) throw ParseError("missing dimensions");
  if (!mic) throw ParseError("missing microphone location");
  if (!speaker) throw ParseError("missing speaker location");
  check_dimensions(*dims);

  SceneInfo scene;
  scene.dimensions = *dims;
  scene.scene_type = scene_type.value_or("");
  scene.mic_location = *mic;
  scene.speaker_location = *speaker;
  scene.noise_sources = std::move(noises);
  scene.raw_text = std::string(text);
  return scene;
}

bool outside(double v, double extent, bool inclusive) {
  return inclusive ? (v < 0.0 || v > extent) : (v <= 0.0 || v >= extent);
}

bool location_outside(const Vec3& p, const Vec3& dims, bool inclusive) {
  for (int axis = 0; axis < 3; ++axis) {
    if (outside(p[axis], dims[axis], inclusive)) return true;
  }
  return false;
}

}  // namespace

void FilterConfig::check() const {
  if (!(overlap_epsilon > 0.0)) throw InvalidArgument("overlap_epsilon must be > 0");
}

std::string format_number(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

SceneInfo parse_scene_info(std::string_view text) {
  if (trim(text).empty()) throw ParseError("empty response");
  if (auto j = embedded_json_object(text)) {
    SceneInfo scene = scene_from_json(*j);
    scene.raw_text = std::string(text);
    return scene;
  }
  return parse_line_grammar(text);
}

std::string render_scene(const SceneInfo& scene) {
  auto tuple = [](const Vec3& v) {
    return "(" + format_number(v.x) + ", " + format_number(v.y) + ", " + format_number(v.z) + ")";
  };
  std::string out;
  out += "dimensions: " + tuple(scene.dimensions) + "\n";
  out += "scene: " + scene.scene_type + "\n";
  out += "microphone: " + tuple(scene.mic_location) + "\n";
  out += "speaker: " + tuple(scene.speaker_location) + "\n";
  for (const auto& n : scene.noise_sources) {
    out += "noise: type=" + n.noise_type + " location=" + tuple(n.location) + "\n";
  }
  return out;
}

bool check_response_error(std::string_view text) {
  try {
    parse_scene_info(text);
    return false;
  } catch (const ParseError&) {
    return true;
  }
}

bool check_mic_overlap(const SceneInfo& scene, const FilterConfig& cfg) {
  if (distance(scene.mic_location, scene.speaker_location) < cfg.overlap_epsilon) return true;
  return std::any_of(scene.noise_sources.begin(), scene.noise_sources.end(), [&](const NoiseSource& n) {
    return distance(scene.mic_location, n.location) < cfg.overlap_epsilon;
  });
}

bool check_location_bounds(const SceneInfo& scene, const FilterConfig& cfg) {
  const auto& d = scene.dimensions;
  if (location_outside(scene.mic_location, d, cfg.bounds_inclusive)) return true;
  if (location_outside(scene.speaker_location, d, cfg.bounds_inclusive)) return true;
  return std::any_of(scene.noise_sources.begin(), scene.noise_sources.end(), [&](const NoiseSource& n) {
    return location_outside(n.location, d, cfg.bounds_inclusive);
  });
}

bool check_type_count(const SceneInfo& scene, const FilterConfig& cfg) {
  return scene.noise_count() < cfg.min_noise_types;
}

FilterReport validate_scene(const SceneInfo& scene, const FilterConfig& cfg) {
  FilterReport r;
  r.mic_overlaps_source = check_mic_overlap(scene, cfg);
  r.location_exceeds_dimensions = check_location_bounds(scene, cfg);
  r.types_less_than_target = check_type_count(scene, cfg);
  r.passed = !r.mic_overlaps_source && !r.location_exceeds_dimensions && !r.types_less_than_target;
  return r;
}

FilterReport validate(std::string_view text, const FilterConfig& cfg) {
  try {
    return validate_scene(parse_scene_info(text), cfg);
  } catch (const ParseError& e) {
    FilterReport r;
    r.response_error = true;
    r.reason = e.reason();
    return r;
  }
}

double percent_one_decimal(std::size_t count, std::size_t total) {
  if (total == 0) throw EmptyCorpus();
  // Integer rounding of count*1000/total avoids binary artifacts like 12.4999.
  const std::size_t tenths = (count * 2000 + total) / (2 * total);
  return static_cast<double>(tenths) / 10.0;
}

CorpusMetrics corpus_metrics(std::span<const std::string> responses, const FilterConfig& cfg) {
  if (responses.empty()) throw EmptyCorpus();
  CorpusMetrics m;
  m.total = responses.size();
  for (const auto& text : responses) {
    const FilterReport r = validate(text, cfg);
    m.response_error.failing += r.response_error;
    m.mic_overlaps_source.failing += r.mic_overlaps_source;
    m.location_exceeds_dimensions.failing += r.location_exceeds_dimensions;
    m.types_less_than_target.failing += r.types_less_than_target;
  }
  for (auto* t : {&m.response_error, &m.mic_overlaps_source, &m.location_exceeds_dimensions,
                  &m.types_less_than_target}) {
    t->percent = percent_one_decimal(t->failing, m.total);
  }
  return m;
}

nlohmann::json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

nlohmann::json to_json(const SceneInfo& scene) {
  json noises = json::array();
  for (const auto& n : scene.noise_sources) {
    noises.push_back({{"type", n.noise_type}, {"location", to_json(n.location)}});
  }
  return {{"dimensions", to_json(scene.dimensions)},
          {"scene", scene.scene_type},
          {"microphone", to_json(scene.mic_location)},
          {"speaker", to_json(scene.speaker_location)},
          {"noises", std::move(noises)}};
}

nlohmann::json to_json(const FilterReport& r) {
  json j = {{"response_error", r.response_error},
            {"mic_overlaps_source", r.mic_overlaps_source},
            {"location_exceeds_dimensions", r.location_exceeds_dimensions},
            {"types_less_than_target", r.types_less_than_target},
            {"passed", r.passed}};
  if (!r.reason.empty()) j["reason"] = r.reason;
  return j;
}

nlohmann::json to_json(const CorpusMetrics& m) {
  auto tally = [](const MetricTally& t) { return json{{"failing", t.failing}, {"percent", t.percent}}; };
  return {{"total", m.total},
          {"response_error", tally(m.response_error)},
          {"mic_overlaps_source", tally(m.mic_overlaps_source)},
          {"location_exceeds_dimensions", tally(m.location_exceeds_dimensions)},
          {"types_less_than_target", tally(m.types_less_than_target)}};
}

SceneInfo scene_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("scene is not an object");
  for (const char* key : {"dimensions", "microphone", "speaker"}) {
    if (!j.contains(key)) throw ParseError(std::string("missing ") + key);
  }
  SceneInfo scene;
  scene.dimensions = json_vec(j["dimensions"], "dimensions");
  check_dimensions(scene.dimensions);
  scene.mic_location = json_vec(j["microphone"], "microphone");
  scene.speaker_location = json_vec(j["speaker"], "speaker");
  if (j.contains("scene")) {
    if (!j["scene"].is_string()) throw ParseError("scene must be text");
    scene.scene_type = j["scene"].get<std::string>();
  }
  if (j.contains("noises")) {
    const auto& arr = j["noises"];
    if (!arr.is_array()) throw ParseError("noises must be a list");
    for (const auto& n : arr) {
      if (!n.is_object() || !n.contains("type") || !n["type"].is_string() || !n.contains("location")) {
        throw ParseError("malformed noise entry");
      }
      NoiseSource src{trim(n["type"].get<std::string>()), json_vec(n["location"], "noise location")};
      if (src.noise_type.empty()) throw ParseError("noise entry without a type");
      scene.noise_sources.push_back(std::move(src));
    }
  }
  return scene;
}

std::string render_metrics_table(const CorpusMetrics& m, std::string_view label) {
  char row[256];
  std::string out;
  std::snprintf(row, sizeof row, "%-24s %8s %8s %8s %8s\n", "source", "#1", "#2", "#3", "#4");
  out += row;
  std::snprintf(row, sizeof row, "%-24.24s %8.1f %8.1f %8.1f %8.1f\n", std::string(label).c_str(),
                m.response_error.percent, m.mic_overlaps_source.percent,
                m.location_exceeds_dimensions.percent, m.types_less_than_target.percent);
  out += row;
  return out;
}

}  // namespace scenenoise
