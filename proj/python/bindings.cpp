#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "scenenoise/acoustics.hpp"
#include "scenenoise/augment.hpp"
#include "scenenoise/chat.hpp"
#include "scenenoise/error.hpp"
#include "scenenoise/prompt.hpp"
#include "scenenoise/scene.hpp"
#include "scenenoise/tta.hpp"

#ifdef SCENENOISE_WITH_CLI
#include "cli.hpp"
#endif

namespace py = pybind11;
using namespace scenenoise;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw InvalidArgument("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) {
  Array a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

// JSON values cross the boundary as Python objects via the json module.
py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Vec3 vec(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

FilterConfig filter(double epsilon, std::size_t min_types, bool inclusive) {
  FilterConfig cfg{epsilon, min_types, inclusive};
  cfg.check();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_scenenoise, m) {
  m.doc() = "Scene-based noise augmentation core";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<SourceOutsideRoom>(m, "SourceOutsideRoom", base.ptr());

  // scenes
  m.def("parse_scene_info", [](const std::string& text) { return to_py(to_json(parse_scene_info(text))); },
        py::arg("text"));
  m.def("render_scene", [](const py::object& scene) { return render_scene(scene_from_json(from_py(scene))); },
        py::arg("scene"));
  m.def(
      "validate",
      [](const std::string& text, double eps, std::size_t min_types, bool inclusive) {
        return to_py(to_json(validate(text, filter(eps, min_types, inclusive))));
      },
      py::arg("text"), py::arg("overlap_epsilon") = 0.1, py::arg("min_noise_types") = 2,
      py::arg("bounds_inclusive") = false);
  m.def(
      "corpus_metrics",
      [](const std::vector<std::string>& responses, double eps, std::size_t min_types, bool inclusive) {
        return to_py(to_json(corpus_metrics(responses, filter(eps, min_types, inclusive))));
      },
      py::arg("responses"), py::arg("overlap_epsilon") = 0.1, py::arg("min_noise_types") = 2,
      py::arg("bounds_inclusive") = false);

  // prompts
  m.def(
      "build_prompt",
      [](const std::string& task) { return build_single(default_template(ScenePrompt::from_text(task))); },
      py::arg("task"));
  m.def(
      "synthesize_scene_response", &synthesize_scene_response, py::arg("task"), py::arg("seed"));

  // acoustics
  m.def("absorption_from_rt60", [](double rt60, std::array<double, 3> dims) { return absorption_from_rt60(rt60, vec(dims)); },
        py::arg("rt60"), py::arg("dimensions"));
  m.def(
      "kernel",
      [](double t, int taps, int sample_rate) {
        KernelConfig cfg;
        cfg.window_width_taps = taps;
        cfg.check();
        return kernel(t, cfg, sample_rate);
      },
      py::arg("t"), py::arg("taps") = 81, py::arg("sample_rate") = kDefaultSampleRate);
  m.def(
      "image_sources",
      [](std::array<double, 3> dims, std::array<double, 3> src, std::array<double, 3> mic, double absorption,
         int max_order, int sample_rate) {
        RoomModel room;
        room.dimensions = vec(dims);
        room.absorption = absorption;
        room.max_order = max_order;
        room.sample_rate = sample_rate;
        return to_py(contributions_json(image_contributions(room, vec(src), vec(mic))));
      },
      py::arg("dimensions"), py::arg("source"), py::arg("mic"), py::arg("absorption"), py::arg("max_order") = 1,
      py::arg("sample_rate") = kDefaultSampleRate);
  m.def(
      "compute_rir",
      [](std::array<double, 3> dims, std::array<double, 3> src, std::array<double, 3> mic, double absorption,
         int max_order, int sample_rate, int taps) {
        RoomModel room;
        room.dimensions = vec(dims);
        room.absorption = absorption;
        room.max_order = max_order;
        room.sample_rate = sample_rate;
        KernelConfig cfg;
        cfg.window_width_taps = taps;
        return to_array(compute_rir(room, vec(src), vec(mic), cfg).taps);
      },
      py::arg("dimensions"), py::arg("source"), py::arg("mic"), py::arg("absorption"), py::arg("max_order") = 1,
      py::arg("sample_rate") = kDefaultSampleRate, py::arg("taps") = 81);
  m.def("convolve", [](const Array& x, const Array& h) { return to_array(convolve(to_vector(x), to_vector(h))); },
        py::arg("x"), py::arg("h"));
  m.def(
      "simulate_scene",
      [](const std::string& scene_text, const Array& speech, const std::vector<Array>& noises, int sample_rate,
         std::uint64_t seed, double rt60) {
        RoomParams params;
        params.seed = seed;
        params.rt60 = rt60;
        std::vector<AudioClip> clips;
        for (const auto& n : noises) clips.push_back({to_vector(n), sample_rate});
        const auto r = simulate_scene(parse_scene_info(scene_text), {to_vector(speech), sample_rate}, clips, params);
        return py::make_tuple(to_array(r.audio.samples), to_array(r.unnormalized.samples), r.normalization_gain);
      },
      py::arg("scene"), py::arg("speech"), py::arg("noises"), py::arg("sample_rate") = kDefaultSampleRate,
      py::arg("seed") = 0, py::arg("rt60") = 0.5);

  // noise and augmentation
  m.def(
      "fixture_noise",
      [](const std::string& type, std::uint64_t seed, double duration, int sample_rate) {
        FixtureTta tta;
        TtaRequest req;
        req.prompt_text = type;
        req.seed = seed;
        req.duration = duration;
        return to_array(synthesize_noise(req, tta, {sample_rate, false}).samples);
      },
      py::arg("noise_type"), py::arg("seed"), py::arg("duration") = 5.0, py::arg("sample_rate") = kDefaultSampleRate);
  m.def(
      "should_augment",
      [](std::size_t index, double anr, std::uint64_t seed) {
        AugmentConfig cfg;
        cfg.anr = anr;
        cfg.seed = seed;
        cfg.check();
        return should_augment(index, cfg);
      },
      py::arg("index"), py::arg("anr"), py::arg("seed"));

#ifdef SCENENOISE_WITH_CLI
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
#endif
}
