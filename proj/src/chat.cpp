#include "scenenoise/chat.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "http_util.hpp"
#include "scenenoise/seeding.hpp"

namespace scenenoise {

namespace {

using nlohmann::json;

constexpr std::array<const char*, 16> kNoiseVocabulary{
    "the sound of footsteps", "crowd chatter",        "a passing car",         "wind blowing",
    "birds chirping",         "a dog barking",        "rain on a window",      "an air conditioner humming",
    "keyboard typing",        "a door closing",       "distant traffic",       "a phone ringing",
    "dishes clattering",      "children playing",     "a vacuum cleaner",      "music from a radio",
};

double tenth(double v) { return std::round(v * 10.0) / 10.0; }

// Strictly inside with a margin, on a 0.1 m grid.
double place(Rng& rng, double extent) {
  const double margin = 0.3;
  return std::clamp(tenth(rng.uniform(margin, extent - margin)), 0.2, extent - 0.2);
}

Vec3 place(Rng& rng, const Vec3& dims) { return {place(rng, dims.x), place(rng, dims.y), place(rng, dims.z)}; }

}  // namespace

BackendKind parse_backend_kind(std::string_view text) {
  if (text == "http-single" || text == "single") return BackendKind::http_single;
  if (text == "http-dual" || text == "dual") return BackendKind::http_dual;
  if (text == "fixture") return BackendKind::fixture;
  throw InvalidArgument("unknown chat backend kind '" + std::string(text) + "'");
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::http_single: return "http-single";
    case BackendKind::http_dual: return "http-dual";
    case BackendKind::fixture: return "fixture";
  }
  return "fixture";
}

void ChatBackend::check() const {
  if (max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
  if (!(timeout > 0.0)) throw InvalidArgument("timeout must be positive");
  if (max_in_flight == 0) throw InvalidArgument("max_in_flight must be >= 1");
  if (kind != BackendKind::fixture && endpoint.empty()) throw InvalidArgument("http chat backend needs an endpoint");
}

FixtureCorpus FixtureCorpus::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open fixture corpus " + path.string());
  FixtureCorpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("key") || !j.contains("response") ||
        !j["key"].is_string() || !j["response"].is_string()) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected {\"key\", \"response\"}");
    }
    corpus.add(j["key"].get<std::string>(), j["response"].get<std::string>());
  }
  return corpus;
}

void FixtureCorpus::add(std::string key, std::string response) {
  entries_[std::move(key)].push_back(std::move(response));
}

const std::vector<std::string>* FixtureCorpus::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string synthesize_scene_response(const std::string& task_key, std::uint64_t seed) {
  Rng rng(derive_seed(fnv1a64(task_key), {seed}));
  SceneInfo scene;
  scene.dimensions = {tenth(rng.uniform(3.0, 12.0)), tenth(rng.uniform(3.0, 10.0)), tenth(rng.uniform(2.5, 4.0))};
  const auto space = task_key.find(' ');
  scene.scene_type = space == std::string::npos ? task_key : task_key.substr(space + 1);
  scene.mic_location = place(rng, scene.dimensions);

  // Keep every source well clear of the microphone.
  auto clear_of_mic = [&](Rng& r) {
    Vec3 p = place(r, scene.dimensions);
    for (int tries = 0; tries < 64 && distance(p, scene.mic_location) < 0.5; ++tries) p = place(r, scene.dimensions);
    return p;
  };
  scene.speaker_location = clear_of_mic(rng);

  std::vector<std::size_t> vocab(kNoiseVocabulary.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) vocab[i] = i;
  const std::size_t count = 2 + static_cast<std::size_t>(rng.below(3));
  for (std::size_t i = 0; i < count; ++i) {
    // Partial Fisher-Yates: distinct noise types.
    const std::size_t j = i + static_cast<std::size_t>(rng.below(vocab.size() - i));
    std::swap(vocab[i], vocab[j]);
    scene.noise_sources.push_back({kNoiseVocabulary[vocab[i]], clear_of_mic(rng)});
  }
  return render_scene(scene);
}

std::string fixture_lookup(const FixtureCorpus& corpus, const std::string& task_key, std::uint64_t seed,
                           std::size_t attempt) {
  if (const auto* scripted = corpus.find(task_key)) {
    return (*scripted)[std::min(attempt, scripted->size() - 1)];
  }
  return synthesize_scene_response(task_key, seed);
}

FixtureChat::FixtureChat(std::shared_ptr<const FixtureCorpus> corpus) : corpus_(std::move(corpus)) {
  if (!corpus_) corpus_ = std::make_shared<const FixtureCorpus>();
}

std::string FixtureChat::complete(const ChatRequest& req) {
  return fixture_lookup(*corpus_, req.task_key, req.seed, req.attempt);
}

HttpChat::HttpChat(const ChatBackend& backend)
    : endpoint_(backend.endpoint),
      dual_(backend.kind == BackendKind::http_dual),
      timeout_(backend.timeout),
      in_flight_(static_cast<std::ptrdiff_t>(backend.max_in_flight)) {
  backend.check();
}

std::string HttpChat::complete(const ChatRequest& req) {
  json body = {{"model", req.model}, {"prompt", req.prompt}, {"seed", req.seed}, {"options", req.options}};
  if (dual_) {
    json history = json::array();
    for (const auto& turn : req.history) history.push_back({{"role", to_string(turn.role)}, {"content", turn.content}});
    body["history"] = std::move(history);
  }
  in_flight_.acquire();
  std::string reply;
  try {
    reply = detail::http_post(endpoint_, body.dump(), "application/json", timeout_);
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();

  json j = json::parse(reply, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("content") || !j["content"].is_string()) {
    throw TransportError("chat endpoint reply lacks a 'content' string");
  }
  return j["content"].get<std::string>();
}

ExhaustedRetries::ExhaustedRetries(std::vector<Rejection> rejected)
    : Error("no valid scene after " + std::to_string(rejected.size()) + " attempts"),
      rejected_(std::move(rejected)) {}

std::shared_ptr<ChatTransport> make_transport(const ChatBackend& backend,
                                              std::shared_ptr<const FixtureCorpus> corpus) {
  backend.check();
  if (backend.kind == BackendKind::fixture) return std::make_shared<FixtureChat>(std::move(corpus));
  return std::make_shared<HttpChat>(backend);
}

GenerationOutcome generate_scene_info(const ScenePrompt& task, const BetTemplate& tmpl, const ChatBackend& backend,
                                      ChatTransport& transport, const FilterConfig& cfg, std::uint64_t seed) {
  backend.check();
  cfg.check();
  BetTemplate t = tmpl;
  t.task = task;

  ChatRequest req;
  req.model = backend.model_name;
  req.task_key = render_query(task);
  req.seed = seed;
  req.options = backend.options;
  if (backend.kind == BackendKind::http_dual) {
    DualPrompt d = build_dual(t);
    req.prompt = std::move(d.prompt);
    req.history = std::move(d.history);
  } else {
    req.prompt = build_single(t);
  }

  std::vector<Rejection> rejected;
  for (int attempt = 0; attempt <= backend.max_retries; ++attempt) {
    req.attempt = static_cast<std::size_t>(attempt);
    std::string text = transport.complete(req);
    try {
      SceneInfo scene = parse_scene_info(text);
      FilterReport report = validate_scene(scene, cfg);
      if (report.passed) return GenerationOutcome{std::move(scene), rejected.size() + 1, std::move(rejected)};
      rejected.push_back({std::move(text), std::move(report)});
    } catch (const ParseError& e) {
      FilterReport report;
      report.response_error = true;
      report.reason = e.reason();
      rejected.push_back({std::move(text), std::move(report)});
    }
  }
  throw ExhaustedRetries(std::move(rejected));
}

}  // namespace scenenoise
