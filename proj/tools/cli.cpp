#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <regex>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "scenenoise/acoustics.hpp"
#include "scenenoise/augment.hpp"
#include "scenenoise/chat.hpp"
#include "scenenoise/error.hpp"
#include "scenenoise/prompt.hpp"
#include "scenenoise/scene.hpp"
#include "scenenoise/tta.hpp"

namespace scenenoise::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Raised for inconsistent flags after CLI11 parsing succeeded.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Vec3 parse_vec3(const std::string& text) {
  static const std::regex num(R"([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)");
  std::vector<double> values;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), num); it != std::sregex_iterator(); ++it) {
    values.push_back(std::stod(it->str()));
  }
  if (values.size() != 3) throw UsageError("expected three comma-separated numbers, got '" + text + "'");
  return {values[0], values[1], values[2]};
}

std::string slug(const std::string& text) {
  std::string out;
  for (unsigned char c : text) out += std::isalnum(c) ? static_cast<char>(std::tolower(c)) : '_';
  return out.empty() ? "noise" : out;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = json::parse(read_text(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw UsageError("config " + path + " is not a JSON object");
  return j;
}

// Assigns `cli_value` when the flag was given, else the config key, else
// leaves the default.
template <typename T>
void resolve(T& field, const CLI::Option* opt, const T& cli_value, const json& config, const char* key) {
  if (opt && opt->count() > 0) {
    field = cli_value;
  } else if (config.contains(key)) {
    field = config.at(key).get<T>();
  }
}

struct FilterFlags {
  double epsilon = 0.1;
  std::size_t min_types = 2;
  bool inclusive = false;
  CLI::Option* epsilon_opt = nullptr;
  CLI::Option* min_types_opt = nullptr;
  CLI::Option* inclusive_opt = nullptr;

  void add(CLI::App* app) {
    epsilon_opt = app->add_option("--overlap-epsilon", epsilon, "Mic/source overlap distance (m)");
    min_types_opt = app->add_option("--min-noise-types", min_types, "Target number of noise types");
    inclusive_opt = app->add_flag("--bounds-inclusive", inclusive, "Accept locations on the walls");
  }
  FilterConfig resolve_with(const json& config) const {
    FilterConfig cfg;
    resolve(cfg.overlap_epsilon, epsilon_opt, epsilon, config, "overlap_epsilon");
    resolve(cfg.min_noise_types, min_types_opt, min_types, config, "min_noise_types");
    resolve(cfg.bounds_inclusive, inclusive_opt, inclusive, config, "bounds_inclusive");
    cfg.check();
    return cfg;
  }
};

struct ChatFlags {
  std::string backend = "fixture";
  std::string endpoint;
  std::string model = "fixture";
  double timeout = 60.0;
  int max_retries = 3;
  std::size_t max_in_flight = 4;
  std::string fixture;
  std::string template_path;
  CLI::Option *backend_opt, *endpoint_opt, *model_opt, *timeout_opt, *retries_opt, *in_flight_opt, *fixture_opt,
      *template_opt;

  void add(CLI::App* app) {
    backend_opt = app->add_option("--backend,--chat-backend", backend, "fixture | http-single | http-dual");
    endpoint_opt = app->add_option("--endpoint,--chat-endpoint", endpoint, "Chat endpoint URL");
    model_opt = app->add_option("--model,--chat-model", model, "Model name sent to the endpoint");
    timeout_opt = app->add_option("--timeout,--chat-timeout", timeout, "Request timeout (s)");
    retries_opt = app->add_option("--max-retries", max_retries, "Regenerations after a rejected reply");
    in_flight_opt = app->add_option("--max-in-flight", max_in_flight, "Concurrent chat requests");
    fixture_opt = app->add_option("--fixture,--chat-fixture", fixture, "Fixture corpus (JSON lines)");
    template_opt = app->add_option("--template", template_path, "BET template document");
  }

  ChatBackend backend_with(const json& config) const {
    std::string kind = backend;
    resolve(kind, backend_opt, backend, config, "chat_backend");
    ChatBackend b;
    b.kind = parse_backend_kind(kind);
    resolve(b.endpoint, endpoint_opt, endpoint, config, "chat_endpoint");
    resolve(b.model_name, model_opt, model, config, "chat_model");
    resolve(b.timeout, timeout_opt, timeout, config, "chat_timeout");
    resolve(b.max_retries, retries_opt, max_retries, config, "max_retries");
    resolve(b.max_in_flight, in_flight_opt, max_in_flight, config, "chat_max_in_flight");
    if (config.contains("chat_options")) b.options = config.at("chat_options");
    b.check();
    return b;
  }

  std::shared_ptr<const FixtureCorpus> corpus_with(const json& config) const {
    std::string path;
    resolve(path, fixture_opt, fixture, config, "chat_fixture");
    if (path.empty()) return std::make_shared<const FixtureCorpus>();
    return std::make_shared<const FixtureCorpus>(FixtureCorpus::load(path));
  }

  std::optional<BetTemplate> template_with(const json& config, const ScenePrompt& task) const {
    std::string path;
    resolve(path, template_opt, template_path, config, "template");
    if (path.empty()) return std::nullopt;
    return load_template(path, task);
  }
};

struct TtaFlags {
  std::string backend = "fixture";
  std::string endpoint;
  double timeout = 120.0;
  double duration = 5.0;
  int ddim_steps = 200;
  double guidance_scale = 2.5;
  bool resample = false;
  CLI::Option *backend_opt, *endpoint_opt, *timeout_opt, *duration_opt, *ddim_opt, *guidance_opt, *resample_opt;

  void add(CLI::App* app, const std::string& prefix) {
    backend_opt = app->add_option("--" + prefix + "backend", backend, "fixture | http");
    endpoint_opt = app->add_option("--" + prefix + "endpoint", endpoint, "Text-to-audio endpoint URL");
    timeout_opt = app->add_option("--" + prefix + "timeout", timeout, "Request timeout (s)");
    duration_opt = app->add_option("--noise-duration,--duration", duration, "Generated noise length (s)");
    ddim_opt = app->add_option("--ddim-steps", ddim_steps, "Diffusion steps forwarded to the service");
    guidance_opt = app->add_option("--guidance-scale", guidance_scale, "Guidance scale forwarded to the service");
    resample_opt = app->add_flag("--resample-noise", resample, "Repair service audio with the wrong rate/length");
  }

  std::shared_ptr<TtaBackend> backend_with(const json& config) const {
    std::string kind = backend;
    resolve(kind, backend_opt, backend, config, "tta_backend");
    if (kind == "fixture") return std::make_shared<FixtureTta>();
    if (kind != "http") throw UsageError("TTA backend must be fixture or http");
    std::string url = endpoint;
    resolve(url, endpoint_opt, endpoint, config, "tta_endpoint");
    double t = timeout;
    resolve(t, timeout_opt, timeout, config, "tta_timeout");
    if (url.empty()) throw UsageError("http TTA backend needs an endpoint");
    return std::make_shared<HttpTta>(url, t);
  }

  TtaRequest request_with(const json& config) const {
    TtaRequest r;
    resolve(r.duration, duration_opt, duration, config, "noise_duration");
    resolve(r.ddim_steps, ddim_opt, ddim_steps, config, "ddim_steps");
    resolve(r.guidance_scale, guidance_opt, guidance_scale, config, "guidance_scale");
    return r;
  }

  bool resample_with(const json& config) const {
    bool r = resample;
    resolve(r, resample_opt, resample, config, "resample_noise");
    return r;
  }
};

struct RoomFlags {
  double rt60 = 0.5;
  double absorption = -1.0;
  int max_order = 1;
  int sample_rate = kDefaultSampleRate;
  double speed_of_sound = kSpeedOfSound;
  int kernel_taps = 81;
  std::string kernel_mode = "raised-cosine";
  std::string environment = "indoor";

  void add(CLI::App* app, bool with_sample_rate) {
    app->add_option("--rt60", rt60, "Reverberation time (s), mapped to absorption via Sabine");
    app->add_option("--absorption", absorption, "Wall absorption in [0, 1]; overrides --rt60");
    app->add_option("--order,--max-order", max_order, "Maximum reflection order");
    if (with_sample_rate) app->add_option("--sample-rate", sample_rate, "Sample rate (Hz)");
    app->add_option("--speed-of-sound", speed_of_sound, "Speed of sound (m/s)");
    app->add_option("--kernel-taps", kernel_taps, "Fractional-delay kernel width (odd tap count)");
    app->add_option("--kernel-mode", kernel_mode, "raised-cosine | windowed-sinc")
        ->check(CLI::IsMember({"raised-cosine", "windowed-sinc"}));
    app->add_option("--environment", environment, "indoor | outdoor")->check(CLI::IsMember({"indoor", "outdoor"}));
  }

  KernelConfig kernel() const {
    KernelConfig k;
    k.window_width_taps = kernel_taps;
    k.mode = kernel_mode == "windowed-sinc" ? KernelMode::windowed_sinc : KernelMode::raised_cosine;
    k.check();
    return k;
  }

  RoomParams params(std::uint64_t seed) const {
    RoomParams p;
    p.rt60 = rt60;
    p.absorption = absorption;
    p.max_order = max_order;
    p.speed_of_sound = speed_of_sound;
    p.environment = environment == "outdoor" ? Environment::outdoor : Environment::indoor;
    p.kernel = kernel();
    p.seed = seed;
    return p;
  }
};

void print_json(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

// --- subcommands -----------------------------------------------------------

int cmd_prompt_build(const std::string& task_text, const std::string& template_path, const std::string& mode,
                     const std::string& out_path, std::ostream& out) {
  const ScenePrompt task = ScenePrompt::from_text(task_text);
  const BetTemplate tmpl = template_path.empty() ? default_template(task) : load_template(template_path, task);
  std::string text;
  if (mode == "single") {
    text = build_single(tmpl);
  } else {
    const DualPrompt d = build_dual(tmpl);
    json history = json::array();
    for (const auto& t : d.history) history.push_back({{"role", to_string(t.role)}, {"content", t.content}});
    text = json{{"history", std::move(history)}, {"prompt", d.prompt}}.dump(2) + "\n";
  }
  if (out_path.empty()) {
    out << text;
  } else {
    write_text(out_path, text);
  }
  return kOk;
}

int cmd_scene_validate(const std::string& in_path, bool corpus_mode, const FilterConfig& cfg, std::ostream& out) {
  const std::string text = read_text(in_path);
  if (!corpus_mode) {
    const FilterReport report = validate(text, cfg);
    json j = to_json(report);
    if (!report.response_error) j["scene"] = to_json(parse_scene_info(text));
    print_json(out, j);
    return report.passed ? kOk : kEntryErrors;
  }
  // One JSON record per line: {"response": "..."} or a bare JSON string.
  std::istringstream lines(text);
  std::string line;
  bool all_passed = true;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec = json::parse(line, nullptr, false);
    std::string response;
    if (rec.is_string()) response = rec.get<std::string>();
    else if (rec.is_object() && rec.contains("response") && rec["response"].is_string()) response = rec["response"];
    else throw UsageError("corpus lines must be JSON strings or {\"response\": ...}");
    const FilterReport report = validate(response, cfg);
    all_passed = all_passed && report.passed;
    out << to_json(report).dump() << "\n";
  }
  return all_passed ? kOk : kEntryErrors;
}

std::vector<std::string> load_corpus_dir(const std::string& dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list " + dir + ": " + ec.message());
  std::sort(files.begin(), files.end());
  std::vector<std::string> responses;
  for (const auto& f : files) responses.push_back(read_text(f.string()));
  return responses;
}

int cmd_corpus_metrics(const std::string& dir, const std::string& label, bool as_json, const FilterConfig& cfg,
                       std::ostream& out) {
  const auto responses = load_corpus_dir(dir);
  const CorpusMetrics m = corpus_metrics(responses, cfg);
  if (as_json) {
    print_json(out, to_json(m));
  } else {
    out << render_metrics_table(m, label.empty() ? fs::path(dir).filename().string() : label);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scene-based noise augmentation for speech datasets", "scenenoise"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // prompt-build
  std::string task_text, template_path, mode = "single", out_path;
  auto* prompt_cmd = app.add_subcommand("prompt-build", "Render a BET prompt for a scene query");
  prompt_cmd->add_option("--task", task_text, "Scene query, e.g. 'Noisy balcony'")->required();
  prompt_cmd->add_option("--template", template_path, "BET template document");
  prompt_cmd->add_option("--mode", mode, "single | dual")->check(CLI::IsMember({"single", "dual"}));
  prompt_cmd->add_option("--out", out_path, "Write to a file instead of stdout");

  // scene-generate
  std::string gen_task, gen_config, gen_out;
  std::uint64_t gen_seed = 0;
  ChatFlags gen_chat;
  FilterFlags gen_filter;
  auto* gen_cmd = app.add_subcommand("scene-generate", "Ask a chat model for scene information");
  gen_cmd->add_option("--task", gen_task, "Scene query, e.g. 'Noisy pedestrian street'")->required();
  auto* gen_seed_opt = gen_cmd->add_option("--seed", gen_seed, "Seed forwarded to the backend");
  gen_cmd->add_option("--config", gen_config, "JSON config file");
  gen_cmd->add_option("--out", gen_out, "Write the scene text to a file");
  gen_chat.add(gen_cmd);
  gen_filter.add(gen_cmd);

  // scene-validate
  std::string val_in;
  bool val_corpus = false;
  FilterFlags val_filter;
  auto* val_cmd = app.add_subcommand("scene-validate", "Run the four filter metrics on a response");
  val_cmd->add_option("--in", val_in, "Response text file ('-' for stdin)")->required();
  val_cmd->add_flag("--corpus", val_corpus, "Input holds one JSON record per line");
  val_filter.add(val_cmd);

  // corpus-metrics
  std::string cm_dir, cm_label;
  bool cm_json = false;
  FilterFlags cm_filter;
  auto* cm_cmd = app.add_subcommand("corpus-metrics", "Filter-metric failure percentages over a directory");
  cm_cmd->add_option("--dir", cm_dir, "Directory with one response per file")->required();
  cm_cmd->add_option("--label", cm_label, "Row label in the table");
  cm_cmd->add_flag("--json", cm_json, "Emit JSON instead of a table");
  cm_filter.add(cm_cmd);

  // noise-synthesize
  std::vector<std::string> ns_types;
  std::uint64_t ns_seed = 0;
  std::string ns_out_dir = ".", ns_bank;
  int ns_rate = kDefaultSampleRate;
  bool ns_levels = false;
  TtaFlags ns_tta;
  auto* ns_cmd = app.add_subcommand("noise-synthesize", "Generate noise audio for noise types");
  ns_cmd->add_option("--type", ns_types, "Noise type description (repeatable)")->required();
  auto* ns_seed_opt = ns_cmd->add_option("--seed", ns_seed, "Generation seed");
  ns_cmd->add_option("--out-dir", ns_out_dir, "Output directory");
  ns_cmd->add_option("--sample-rate", ns_rate, "Sample rate (Hz)");
  ns_cmd->add_option("--bank", ns_bank, "Use (and fill) a noise bank directory");
  ns_cmd->add_flag("--levels", ns_levels, "Also write the five volume-level variants");
  ns_tta.add(ns_cmd, "");

  // rir-compute
  std::string rir_room, rir_source, rir_mic, rir_out, rir_taps, rir_geometry;
  RoomFlags rir_flags;
  auto* rir_cmd = app.add_subcommand("rir-compute", "Image-source room impulse response");
  rir_cmd->add_option("--room", rir_room, "Room dimensions x,y,z (m)")->required();
  rir_cmd->add_option("--source", rir_source, "Source location x,y,z")->required();
  rir_cmd->add_option("--mic", rir_mic, "Microphone location x,y,z")->required();
  rir_cmd->add_option("--out", rir_out, "Write the RIR as 16-bit WAV");
  rir_cmd->add_option("--taps", rir_taps, "Write RIR taps as text, one per line");
  rir_cmd->add_option("--geometry", rir_geometry, "Write source/image/mic geometry JSON");
  rir_flags.add(rir_cmd, true);

  // scene-simulate
  std::string sim_scene, sim_speech, sim_out, sim_dump;
  std::vector<std::string> sim_noises;
  std::vector<int> sim_levels;
  std::uint64_t sim_seed = 0;
  RoomFlags sim_flags;
  TtaFlags sim_tta;
  auto* sim_cmd = app.add_subcommand("scene-simulate", "Place speech and noise in a scene and mix at the mic");
  sim_cmd->add_option("--scene", sim_scene, "Scene response text or JSON")->required();
  sim_cmd->add_option("--speech", sim_speech, "Speech WAV")->required();
  sim_cmd->add_option("--noise", sim_noises, "Noise WAV per noise source, in scene order (repeatable)");
  sim_cmd->add_option("--level", sim_levels, "Volume level percent per noise source (repeatable)")
      ->check(CLI::IsMember({0, 25, 50, 75, 100}));
  auto* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed, "Seed for noise alignment and generation");
  sim_cmd->add_option("--out", sim_out, "Output WAV")->required();
  sim_cmd->add_option("--dump-dir", sim_dump, "Write per-source RIRs, image listings and geometry");
  sim_flags.add(sim_cmd, false);
  sim_tta.add(sim_cmd, "tta-");

  // augment
  std::string aug_in, aug_out, aug_config, aug_bank;
  double aug_anr = 0.2, aug_rt60 = 0.5, aug_peak = 0.95;
  std::uint64_t aug_seed = 0;
  int aug_order = 1, aug_rate = kDefaultSampleRate, aug_taps = 81;
  std::size_t aug_pool = 100, aug_jobs = 1;
  std::vector<std::string> aug_prompts;
  std::string aug_kernel_mode = "raised-cosine", aug_env = "indoor";
  ChatFlags aug_chat;
  TtaFlags aug_tta;
  FilterFlags aug_filter;
  auto* aug_cmd = app.add_subcommand("augment", "Augment a dataset manifest");
  aug_cmd->add_option("--in", aug_in, "Input manifest (JSON lines)")->required();
  aug_cmd->add_option("--out-dir", aug_out, "Output directory")->required();
  aug_cmd->add_option("--config", aug_config, "JSON config file");
  auto* anr_opt = aug_cmd->add_option("--anr", aug_anr, "Add-noise rate in [0, 1]");
  auto* aug_seed_opt = aug_cmd->add_option("--seed", aug_seed, "Pipeline seed");
  auto* rt60_opt = aug_cmd->add_option("--rt60", aug_rt60, "Reverberation time (s)");
  auto* order_opt = aug_cmd->add_option("--max-order", aug_order, "Maximum reflection order");
  auto* rate_opt = aug_cmd->add_option("--sample-rate", aug_rate, "Output sample rate (Hz)");
  auto* taps_opt = aug_cmd->add_option("--kernel-taps", aug_taps, "Fractional-delay kernel width");
  auto* kmode_opt = aug_cmd->add_option("--kernel-mode", aug_kernel_mode, "raised-cosine | windowed-sinc");
  auto* env_opt = aug_cmd->add_option("--environment", aug_env, "indoor | outdoor");
  auto* peak_opt = aug_cmd->add_option("--peak-limit", aug_peak, "Mixture peak ceiling");
  auto* pool_opt = aug_cmd->add_option("--scene-pool-size", aug_pool, "Scenes per prompt shared across utterances");
  auto* jobs_opt = aug_cmd->add_option("--jobs", aug_jobs, "Worker threads");
  auto* prompts_opt = aug_cmd->add_option("--scene-prompt", aug_prompts, "Scene query to sample (repeatable)");
  auto* bank_opt = aug_cmd->add_option("--noise-bank", aug_bank, "Noise cache directory (default <out-dir>/noise_bank)");
  aug_chat.add(aug_cmd);
  aug_tta.add(aug_cmd, "tta-");
  aug_filter.add(aug_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    if (args.empty()) {
      err << app.help();
      return kUsage;
    }
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    err << e.what() << "\n\n" << failing->help();
    return kUsage;
  }

  auto require_seed = [](const CLI::Option* opt, const json& config) {
    if (opt->count() == 0 && !config.contains("seed")) {
      throw UsageError("this command is randomized: pass --seed or set \"seed\" in the config");
    }
  };

  try {
    if (*prompt_cmd) return cmd_prompt_build(task_text, template_path, mode, out_path, out);

    if (*val_cmd) return cmd_scene_validate(val_in, val_corpus, val_filter.resolve_with(json::object()), out);

    if (*cm_cmd) return cmd_corpus_metrics(cm_dir, cm_label, cm_json, cm_filter.resolve_with(json::object()), out);

    if (*gen_cmd) {
      const json config = load_config(gen_config);
      require_seed(gen_seed_opt, config);
      std::uint64_t seed = 0;
      resolve(seed, gen_seed_opt, gen_seed, config, "seed");
      const ScenePrompt task = ScenePrompt::from_text(gen_task);
      const ChatBackend backend = gen_chat.backend_with(config);
      const auto transport = make_transport(backend, gen_chat.corpus_with(config));
      const BetTemplate tmpl = gen_chat.template_with(config, task).value_or(default_template(task));
      const FilterConfig filter = gen_filter.resolve_with(config);
      try {
        const GenerationOutcome outcome = generate_scene_info(task, tmpl, backend, *transport, filter, seed);
        json rejected = json::array();
        for (const auto& r : outcome.rejected) rejected.push_back({{"response", r.response}, {"report", to_json(r.report)}});
        if (!gen_out.empty()) write_text(gen_out, outcome.scene.raw_text);
        print_json(out, {{"scene", to_json(outcome.scene)},
                         {"text", outcome.scene.raw_text},
                         {"attempts", outcome.attempts},
                         {"rejected", std::move(rejected)}});
        return kOk;
      } catch (const ExhaustedRetries& e) {
        json rejected = json::array();
        for (const auto& r : e.rejected()) rejected.push_back({{"response", r.response}, {"report", to_json(r.report)}});
        print_json(out, {{"error", e.what()}, {"attempts", e.rejected().size()}, {"rejected", std::move(rejected)}});
        err << "scene-generate: " << e.what() << "\n";
        return kEntryErrors;
      }
    }

    if (*ns_cmd) {
      require_seed(ns_seed_opt, json::object());
      const auto backend = ns_tta.backend_with(json::object());
      TtaRequest req = ns_tta.request_with(json::object());
      SynthesisOptions options{ns_rate, ns_tta.resample};
      fs::create_directories(ns_out_dir);
      std::unique_ptr<NoiseBank> bank;
      if (!ns_bank.empty()) bank = std::make_unique<NoiseBank>(ns_bank, backend, req, options);
      json listing = json::array();
      for (const auto& type : ns_types) {
        AudioClip clip;
        if (bank) {
          clip = bank->get(type, ns_seed);
        } else {
          req.prompt_text = type;
          req.seed = ns_seed;
          clip = synthesize_noise(req, *backend, options);
        }
        const fs::path base = fs::path(ns_out_dir) / slug(type);
        write_wav(base.string() + ".wav", clip);
        json files = json::array({base.string() + ".wav"});
        if (ns_levels) {
          const auto variants = volume_variants(clip);
          for (std::size_t i = 0; i < variants.size(); ++i) {
            const std::string name = base.string() + "_" + std::to_string(kVolumeLevels[i].percent) + ".wav";
            write_wav(name, variants[i]);
            files.push_back(name);
          }
        }
        listing.push_back({{"type", type}, {"samples", clip.size()}, {"sample_rate", clip.sample_rate}, {"files", files}});
      }
      print_json(out, listing);
      return kOk;
    }

    if (*rir_cmd) {
      RoomModel room;
      room.dimensions = parse_vec3(rir_room);
      room.absorption = (rir_flags.absorption >= 0.0) ? rir_flags.absorption
                                                      : absorption_from_rt60(rir_flags.rt60, room.dimensions);
      room.max_order = rir_flags.max_order;
      room.sample_rate = rir_flags.sample_rate;
      room.speed_of_sound = rir_flags.speed_of_sound;
      room.environment = rir_flags.environment == "outdoor" ? Environment::outdoor : Environment::indoor;
      const Vec3 source = parse_vec3(rir_source);
      const Vec3 mic = parse_vec3(rir_mic);
      const KernelConfig kernel_cfg = rir_flags.kernel();
      const Rir rir = compute_rir(room, source, mic, kernel_cfg);
      const auto contributions = image_contributions(room, source, mic);
      if (!rir_out.empty()) write_wav(rir_out, AudioClip{rir.taps, rir.sample_rate});
      if (!rir_taps.empty()) {
        std::string text;
        for (double t : rir.taps) text += format_number(t) + "\n";
        write_text(rir_taps, text);
      }
      if (!rir_geometry.empty()) {
        const std::vector<Vec3> sources{source};
        write_text(rir_geometry, geometry_json(room, mic, sources).dump(2) + "\n");
      }
      print_json(out, {{"absorption", room.absorption},
                       {"sample_rate", rir.sample_rate},
                       {"length", rir.taps.size()},
                       {"images", contributions_json(contributions)}});
      return kOk;
    }

    if (*sim_cmd) {
      const SceneInfo scene = parse_scene_info(read_text(sim_scene));
      const AudioClip speech = read_wav(sim_speech);
      const bool need_seed = sim_noises.size() < scene.noise_sources.size() || scene.noise_count() > 0;
      if (need_seed) require_seed(sim_seed_opt, json::object());
      std::vector<AudioClip> noises;
      for (const auto& path : sim_noises) noises.push_back(read_wav(path));
      if (noises.size() < scene.noise_sources.size()) {
        // Fill missing noise clips from the TTA backend.
        const auto backend = sim_tta.backend_with(json::object());
        TtaRequest req = sim_tta.request_with(json::object());
        for (std::size_t i = noises.size(); i < scene.noise_sources.size(); ++i) {
          req.prompt_text = scene.noise_sources[i].noise_type;
          req.seed = sim_seed;
          noises.push_back(synthesize_noise(req, *backend, {speech.sample_rate, sim_tta.resample}));
        }
      }
      if (!sim_levels.empty() && sim_levels.size() != scene.noise_sources.size()) {
        throw UsageError("--level must be given once per noise source");
      }
      for (std::size_t i = 0; i < sim_levels.size(); ++i) noises[i] = apply_volume(noises[i], {sim_levels[i]});
      const RoomParams params = sim_flags.params(sim_seed);
      const SimulationResult result = simulate_scene(scene, speech, noises, params);
      write_wav(sim_out, result.audio);
      if (!sim_dump.empty()) {
        fs::create_directories(sim_dump);
        const RoomModel room = make_room(scene, params, speech.sample_rate);
        std::vector<Vec3> sources{scene.speaker_location};
        for (const auto& n : scene.noise_sources) sources.push_back(n.location);
        json listing = json::array();
        for (std::size_t i = 0; i < sources.size(); ++i) {
          const Rir rir = compute_rir(room, sources[i], scene.mic_location, params.kernel);
          write_wav(fs::path(sim_dump) / ("rir_source" + std::to_string(i) + ".wav"), AudioClip{rir.taps, rir.sample_rate});
          listing.push_back({{"source", i}, {"images", contributions_json(image_contributions(room, sources[i], scene.mic_location))}});
        }
        write_text(fs::path(sim_dump) / "images.json", listing.dump(2) + "\n");
        write_text(fs::path(sim_dump) / "geometry.json", geometry_json(room, scene.mic_location, sources).dump(2) + "\n");
      }
      print_json(out, {{"samples", result.audio.size()},
                       {"sample_rate", result.audio.sample_rate},
                       {"normalization_gain", result.normalization_gain}});
      return kOk;
    }

    if (*aug_cmd) {
      const json config = load_config(aug_config);
      require_seed(aug_seed_opt, config);
      AugmentConfig cfg;
      apply_config_json(config, cfg);
      resolve(cfg.anr, anr_opt, aug_anr, config, "anr");
      resolve(cfg.seed, aug_seed_opt, aug_seed, config, "seed");
      resolve(cfg.rt60, rt60_opt, aug_rt60, config, "rt60");
      resolve(cfg.max_order, order_opt, aug_order, config, "max_order");
      resolve(cfg.sample_rate, rate_opt, aug_rate, config, "sample_rate");
      resolve(cfg.kernel.window_width_taps, taps_opt, aug_taps, config, "kernel_taps");
      resolve(cfg.peak_limit, peak_opt, aug_peak, config, "peak_limit");
      resolve(cfg.scene_pool_size, pool_opt, aug_pool, config, "scene_pool_size");
      resolve(cfg.jobs, jobs_opt, aug_jobs, config, "jobs");
      if (kmode_opt->count() > 0) apply_config_json({{"kernel_mode", aug_kernel_mode}}, cfg);
      if (env_opt->count() > 0) apply_config_json({{"environment", aug_env}}, cfg);
      if (prompts_opt->count() > 0) apply_config_json({{"scene_prompts", aug_prompts}}, cfg);
      cfg.filter = aug_filter.resolve_with(config);
      cfg.check();

      SceneSource scenes;
      scenes.backend = aug_chat.backend_with(config);
      scenes.transport = make_transport(scenes.backend, aug_chat.corpus_with(config));
      std::string template_file;
      resolve(template_file, aug_chat.template_opt, aug_chat.template_path, config, "template");
      if (!template_file.empty()) {
        // The task is replaced per utterance; any valid prompt works here.
        scenes.base_template = load_template(template_file, cfg.scene_prompts.front());
      }

      std::string bank_dir = (fs::path(aug_out) / "noise_bank").string();
      resolve(bank_dir, bank_opt, aug_bank, config, "noise_bank");
      SynthesisOptions options{cfg.sample_rate, aug_tta.resample_with(config)};
      NoiseBank bank(bank_dir, aug_tta.backend_with(config), aug_tta.request_with(config), options);

      const DatasetResult result = augment_dataset(aug_in, aug_out, cfg, scenes, bank);
      for (const auto& e : result.entries) {
        if (!e.error.empty()) err << "augment: " << e.utterance_id << ": " << e.error << "\n";
      }
      print_json(out, {{"entries", result.entries.size()},
                       {"augmented", result.augmented},
                       {"resumed", result.resumed},
                       {"errors", result.errors},
                       {"manifest", (fs::path(aug_out) / kOutputManifestName).string()}});
      return result.errors == 0 ? kOk : kEntryErrors;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: bad configuration value: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kEntryErrors;
  }
  return kUsage;
}

}  // namespace scenenoise::cli
