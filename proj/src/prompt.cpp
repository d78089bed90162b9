#include "scenenoise/prompt.hpp"

#include <fstream>
#include <sstream>

#include "scenenoise/error.hpp"
#include "scenenoise/scene.hpp"

namespace scenenoise {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(ws) - b + 1));
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Removes one trailing newline added by the renderer.
std::string chomp(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

ScenePrompt prompt_from_json(const json& q) {
  if (q.is_string()) return ScenePrompt::from_text(q.get<std::string>());
  if (q.is_object()) {
    return ScenePrompt(q.value("adjective", std::string{}), q.value("scene_type", std::string{}));
  }
  throw InvalidArgument("example query must be text or {adjective, scene_type}");
}

}  // namespace

ScenePrompt::ScenePrompt(std::string adjective, std::string scene_type)
    : adjective_(std::move(adjective)), scene_type_(std::move(scene_type)) {
  if (adjective_.empty()) throw InvalidArgument("scene prompt adjective is empty");
  if (scene_type_.empty()) throw InvalidArgument("scene prompt scene type is empty");
}

ScenePrompt ScenePrompt::from_text(std::string_view text) {
  const std::string t = trim(text);
  const auto space = t.find(' ');
  if (space == std::string::npos) throw InvalidArgument("scene prompt needs '<adjective> <scene type>': " + t);
  return ScenePrompt(t.substr(0, space), trim(t.substr(space + 1)));
}

std::string render_query(const ScenePrompt& p) { return p.adjective() + " " + p.scene_type(); }

std::string_view to_string(ChatRole role) { return role == ChatRole::user ? "user" : "assistant"; }

std::string build_single(const BetTemplate& t) {
  std::string out;
  out += kBackgroundHeader;
  out += "\n" + t.background + "\n\n";
  for (std::size_t i = 0; i < t.examples.size(); ++i) {
    const auto& ex = t.examples[i];
    out += std::string(kExampleHeader) + " " + std::to_string(i + 1) + "\n";
    out += std::string(kQueryLabel) + render_query(ex.query) + "\n";
    out += std::string(kResponseLabel) + "\n" + chomp(ex.response) + "\n\n";
  }
  out += kTaskHeader;
  out += "\n" + std::string(kQueryLabel) + render_query(t.task) + "\n";
  out += kResponseLabel;
  out += "\n";
  return out;
}

DualPrompt build_dual(const BetTemplate& t) {
  DualPrompt d;
  d.history.push_back({ChatRole::user, t.background});
  for (const auto& ex : t.examples) {
    d.history.push_back({ChatRole::user, render_query(ex.query)});
    d.history.push_back({ChatRole::assistant, chomp(ex.response)});
  }
  d.prompt = render_query(t.task);
  return d;
}

std::vector<std::string> split_single(std::string_view text) {
  // Section bodies, keyed by the header that opened them.
  std::vector<std::pair<std::string, std::string>> sections;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (starts_with(line, "### ")) {
      sections.emplace_back(line, std::string{});
    } else if (!sections.empty()) {
      sections.back().second += line + "\n";
    }
  }
  if (sections.empty() || sections.front().first != kBackgroundHeader ||
      sections.back().first != kTaskHeader) {
    throw InvalidArgument("not a single-parameter BET prompt");
  }

  auto query_of = [](std::string_view body) {
    if (!starts_with(body, kQueryLabel)) throw InvalidArgument("section without query line");
    const auto nl = body.find('\n');
    return std::string(body.substr(kQueryLabel.size(), nl - kQueryLabel.size()));
  };

  std::vector<std::string> parts;
  std::string bg = sections.front().second;
  // Background body ends with the blank separator line.
  if (bg.size() >= 2) bg.resize(bg.size() - 2);
  parts.push_back(bg);
  for (std::size_t i = 1; i + 1 < sections.size(); ++i) {
    const std::string& body = sections[i].second;
    parts.push_back(query_of(body));
    const auto label = body.find(std::string("\n") + std::string(kResponseLabel) + "\n");
    if (label == std::string::npos) throw InvalidArgument("example without response");
    std::string resp = body.substr(label + kResponseLabel.size() + 2);
    if (resp.size() >= 2) resp.resize(resp.size() - 2);
    parts.push_back(resp);
  }
  parts.push_back(query_of(sections.back().second));
  return parts;
}

std::string default_background(std::size_t min_noise_types) {
  return "You design acoustic scenes for speech data augmentation. Given a scene query made of an "
         "adjective and a scene type, describe one plausible rectangular (shoebox) room or open area "
         "for that scene. Answer only with the following lines, using meters for every coordinate:\n"
         "dimensions: (length, width, height)\n"
         "scene: <scene type>\n"
         "microphone: (x, y, z)\n"
         "speaker: (x, y, z)\n"
         "noise: type=<short description of the sound> location=(x, y, z)\n"
         "Repeat the noise line once per noise source and give at least " +
         std::to_string(min_noise_types) +
         " different noise types. Every location must lie strictly inside the dimensions, and the "
         "microphone must not coincide with the speaker or any noise source.";
}

std::vector<FewShotExample> default_examples() {
  return {
      {ScenePrompt("Noisy", "pedestrian street"),
       "dimensions: (20, 8, 6)\n"
       "scene: pedestrian street\n"
       "microphone: (10, 4, 1.5)\n"
       "speaker: (9, 3.5, 1.6)\n"
       "noise: type=the sound of footsteps location=(12, 2, 0.2)\n"
       "noise: type=crowd chatter location=(5, 6, 1.6)\n"
       "noise: type=a passing car location=(15, 7, 0.8)\n"},
      {ScenePrompt("Noisy", "balcony"),
       "dimensions: (4, 2.5, 4)\n"
       "scene: balcony\n"
       "microphone: (3.5, 0.5, 1.2)\n"
       "speaker: (2, 1.5, 1.6)\n"
       "noise: type=the sound of footsteps location=(0.5, 0.5, 1.2)\n"
       "noise: type=wind blowing location=(3, 2, 3.5)\n"},
      {ScenePrompt("Busy", "cafe"),
       "dimensions: (10, 8, 3.2)\n"
       "scene: cafe\n"
       "microphone: (5, 4, 1.1)\n"
       "speaker: (5.8, 4.5, 1.2)\n"
       "noise: type=an espresso machine hissing location=(1, 7, 1.2)\n"
       "noise: type=cups and plates clinking location=(3, 2, 0.9)\n"
       "noise: type=background conversation location=(8, 6, 1.3)\n"},
  };
}

BetTemplate default_template(ScenePrompt task) {
  return BetTemplate{default_background(), default_examples(), std::move(task)};
}

BetTemplate template_from_json(const nlohmann::json& j, ScenePrompt task) {
  if (!j.is_object()) throw InvalidArgument("template document must be an object");
  BetTemplate t = default_template(std::move(task));
  if (j.contains("background")) t.background = j.at("background").get<std::string>();
  if (j.contains("examples")) {
    t.examples.clear();
    for (const auto& e : j.at("examples")) {
      FewShotExample ex{prompt_from_json(e.at("query")), e.at("response").get<std::string>()};
      try {
        parse_scene_info(ex.response);
      } catch (const ParseError& err) {
        throw InvalidArgument("template example '" + render_query(ex.query) +
                              "' does not parse: " + err.reason());
      }
      t.examples.push_back(std::move(ex));
    }
  }
  return t;
}

BetTemplate load_template(const std::filesystem::path& path, ScenePrompt task) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open template " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InvalidArgument("template " + path.string() + " is not valid JSON");
  return template_from_json(j, std::move(task));
}

}  // namespace scenenoise
