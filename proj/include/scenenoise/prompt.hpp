#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace scenenoise {

// Scene query: an adjective and a scene type, e.g. ("Noisy", "balcony").
class ScenePrompt {
 public:
  // Throws InvalidArgument if either field is empty.
  ScenePrompt(std::string adjective, std::string scene_type);

  // Splits "Noisy pedestrian street" at the first space.
  static ScenePrompt from_text(std::string_view text);

  const std::string& adjective() const { return adjective_; }
  const std::string& scene_type() const { return scene_type_; }

  friend bool operator==(const ScenePrompt&, const ScenePrompt&) = default;

 private:
  std::string adjective_;
  std::string scene_type_;
};

std::string render_query(const ScenePrompt& p);

struct FewShotExample {
  ScenePrompt query;
  std::string response;  // canonical scene text
};

struct BetTemplate {
  std::string background;
  std::vector<FewShotExample> examples;
  ScenePrompt task;
};

enum class ChatRole { user, assistant };

std::string_view to_string(ChatRole role);

struct ChatTurn {
  ChatRole role;
  std::string content;

  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

struct DualPrompt {
  std::vector<ChatTurn> history;
  std::string prompt;
};

// Section markers of the single-parameter rendering. A part must not contain
// a line that starts with "### " for split_single to recover it.
inline constexpr std::string_view kBackgroundHeader = "### Background";
inline constexpr std::string_view kExampleHeader = "### Example";
inline constexpr std::string_view kTaskHeader = "### Task";
inline constexpr std::string_view kQueryLabel = "Query: ";
inline constexpr std::string_view kResponseLabel = "Response:";

// Background, then each example as query followed by response, then the task
// query, concatenated into one text.
std::string build_single(const BetTemplate& t);

// History holds the background and alternating example queries/responses;
// the prompt is the task query alone.
DualPrompt build_dual(const BetTemplate& t);

// Parts recovered from build_single output, in order: background, then
// query/response per example, then the task query.
std::vector<std::string> split_single(std::string_view text);

// Built-in background instructing the model to answer in the scene grammar
// with at least `min_noise_types` noise sources.
std::string default_background(std::size_t min_noise_types = 2);

// Three built-in examples, each a valid scene under the default filter.
std::vector<FewShotExample> default_examples();

BetTemplate default_template(ScenePrompt task);

// Template document (JSON):
//   {"background": "...", "examples": [{"query": "Noisy balcony" | {"adjective": .., "scene_type": ..},
//                                       "response": "..."}]}
// Missing "background" or "examples" fall back to the built-in defaults.
// Example responses must parse under the scene grammar.
BetTemplate load_template(const std::filesystem::path& path, ScenePrompt task);
BetTemplate template_from_json(const nlohmann::json& j, ScenePrompt task);

}  // namespace scenenoise
