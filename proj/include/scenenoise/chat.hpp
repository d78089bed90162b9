#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenenoise/error.hpp"
#include "scenenoise/prompt.hpp"
#include "scenenoise/scene.hpp"

namespace scenenoise {

enum class BackendKind {
  http_single,  // prompt and history concatenated into one text
  http_dual,    // prompt and history sent as separate fields
  fixture,
};

BackendKind parse_backend_kind(std::string_view text);
std::string_view to_string(BackendKind kind);

struct ChatBackend {
  BackendKind kind = BackendKind::fixture;
  std::string endpoint;
  std::string model_name = "fixture";
  double timeout = 60.0;  // seconds
  int max_retries = 3;
  std::size_t max_in_flight = 4;
  // Decoding options (temperature and the like), forwarded verbatim.
  nlohmann::json options = nlohmann::json::object();

  void check() const;
};

// One request as seen by a transport. Single mode fills `prompt` with the
// consolidated BET text and leaves `history` empty.
struct ChatRequest {
  std::string model;
  std::string task_key;  // rendered task query, used by the fixture
  std::string prompt;
  std::vector<ChatTurn> history;
  std::uint64_t seed = 0;
  std::size_t attempt = 0;
  nlohmann::json options = nlohmann::json::object();
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  // Returns the model's reply text. Throws TransportError.
  virtual std::string complete(const ChatRequest& req) = 0;
};

// Records of (key, response). Several records with one key form a scripted
// sequence: attempt i gets record i, the last record repeating.
class FixtureCorpus {
 public:
  FixtureCorpus() = default;

  // JSON lines: {"key": "...", "response": "..."}. Throws IoError, InvalidArgument.
  static FixtureCorpus load(const std::filesystem::path& path);

  void add(std::string key, std::string response);
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const std::vector<std::string>* find(const std::string& key) const;

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

// A plausible scene for `task_key` in the canonical grammar that passes the
// default filter: deterministic in (task_key, seed).
std::string synthesize_scene_response(const std::string& task_key, std::uint64_t seed);

// Corpus text when the key is known, otherwise the synthetic response.
std::string fixture_lookup(const FixtureCorpus& corpus, const std::string& task_key, std::uint64_t seed,
                           std::size_t attempt = 0);

class FixtureChat final : public ChatTransport {
 public:
  explicit FixtureChat(std::shared_ptr<const FixtureCorpus> corpus);
  std::string complete(const ChatRequest& req) override;

 private:
  std::shared_ptr<const FixtureCorpus> corpus_;
};

// JSON over HTTP. Request {"model", "prompt", "seed", "options"} plus
// "history": [{"role", "content"}] in dual mode; reply {"content"}.
class HttpChat final : public ChatTransport {
 public:
  explicit HttpChat(const ChatBackend& backend);
  std::string complete(const ChatRequest& req) override;

 private:
  std::string endpoint_;
  bool dual_;
  double timeout_;
  std::counting_semaphore<> in_flight_;
};

struct Rejection {
  std::string response;
  FilterReport report;
};

struct GenerationOutcome {
  SceneInfo scene;
  std::size_t attempts = 0;
  std::vector<Rejection> rejected;
};

class ExhaustedRetries : public Error {
 public:
  explicit ExhaustedRetries(std::vector<Rejection> rejected);
  const std::vector<Rejection>& rejected() const { return rejected_; }

 private:
  std::vector<Rejection> rejected_;
};

// Builds the transport for a backend description. Fixture backends need a corpus.
std::shared_ptr<ChatTransport> make_transport(const ChatBackend& backend,
                                              std::shared_ptr<const FixtureCorpus> corpus = nullptr);

// Submits the BET prompt for `task` (single or dual form, per backend kind)
// until a reply passes the filter, resubmitting the same prompt at most
// backend.max_retries times. Throws ExhaustedRetries or TransportError.
GenerationOutcome generate_scene_info(const ScenePrompt& task, const BetTemplate& tmpl, const ChatBackend& backend,
                                      ChatTransport& transport, const FilterConfig& cfg = {}, std::uint64_t seed = 0);

}  // namespace scenenoise
