#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "json.hpp"
#include "sid/alterations.hpp"
#include "sid/cli.hpp"
#include "sid/codec.hpp"
#include "sid/errors.hpp"
#include "sid/evaluation.hpp"
#include "sid/experiment.hpp"
#include "sid/features.hpp"
#include "sid/glcm.hpp"
#include "sid/imageops.hpp"
#include "sid/patches.hpp"

namespace py = pybind11;
using namespace sid;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

ImageBuffer to_image(const U8Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("expected an HxWx3 uint8 array");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  return ImageBuffer(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

GrayImage to_gray(const U8Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected an HxW uint8 array");
  return GrayImage(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                   std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

U8Array from_image(const ImageBuffer& img) {
  U8Array out({img.height(), img.width(), 3});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

std::vector<Offset> to_offsets(const std::optional<std::vector<std::pair<int, int>>>& o) {
  if (!o) return default_glcm_offsets();
  std::vector<Offset> out;
  for (const auto& [dx, dy] : *o) out.push_back({dx, dy});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the synthetic-image detection toolkit";

  static py::exception<Error> error_type(m, "SidError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(error_kind_name(e.kind())) + ": " + e.what();
      PyErr_SetString(error_type.ptr(), msg.c_str());
    }
  });

  m.def("version", [] { return std::string(tool_version()); });

  m.def("read_image", [](const std::string& path) { return from_image(read_image(path)); }, py::arg("path"));

  m.def(
      "glcm_contrast",
      [](const U8Array& gray, int levels, std::optional<std::vector<std::pair<int, int>>> offsets, bool symmetric) {
        return glcm_contrast(compute_glcm(to_gray(gray), levels, to_offsets(offsets), symmetric));
      },
      py::arg("gray"), py::arg("levels") = kDefaultGlcmLevels, py::arg("offsets") = py::none(),
      py::arg("symmetric") = true);

  m.def(
      "select_top_patches",
      [](const U8Array& img, int k, int side, int stride) {
        py::list out;
        for (const auto& p : select_top_patches(to_image(img), k, side, stride)) {
          py::dict d;
          d["origin"] = py::make_tuple(p.origin_x, p.origin_y);
          d["padded"] = p.padded;
          d["pixels"] = from_image(p.pixels);
          out.append(d);
        }
        return out;
      },
      py::arg("image"), py::arg("k") = 5, py::arg("side") = kDefaultPatchSide, py::arg("stride") = 112);

  m.def(
      "extract_features",
      [](const U8Array& img) {
        Patch p;
        p.pixels = to_image(img);
        return extract_features(p);
      },
      py::arg("patch"));

  m.def(
      "vote",
      [](const std::vector<bool>& synthetic, int n_patches, int threshold_k) {
        VotingPolicy policy;
        policy.n_patches = n_patches;
        policy.threshold_k = threshold_k;
        std::vector<Verdict> v;
        for (bool s : synthetic) v.push_back(s ? Verdict::kSynthetic : Verdict::kAuthentic);
        return vote(v, policy) == Verdict::kSynthetic;
      },
      py::arg("synthetic"), py::arg("n_patches") = 5, py::arg("threshold_k") = 3);

  m.def(
      "apply_alteration",
      [](const U8Array& img, const std::string& kind, const std::map<std::string, double>& params) {
        const auto k = parse_alteration(kind);
        if (!k) throw py::value_error("unknown alteration '" + kind + "'");
        return from_image(apply_alteration(to_image(img), AlterationSpec::with_defaults(*k), params));
      },
      py::arg("image"), py::arg("kind"), py::arg("params") = std::map<std::string, double>{});

  // The policy is the JSON text of an augmentation config or a preset name.
  m.def(
      "augment",
      [](const U8Array& img, const std::string& policy_json, std::uint64_t seed, std::uint64_t index) -> py::tuple {
        const auto policy = parse_augmentation(nlohmann::json::parse(policy_json), seed);
        if (!policy) return py::make_tuple(img, py::list());
        const AugmentResult r = augment(to_image(img), *policy, index);
        py::list applied;
        for (const auto& a : r.applied) {
          py::dict d;
          d["kind"] = std::string(alteration_name(a.kind));
          d["params"] = a.params;
          applied.append(d);
        }
        return py::make_tuple(from_image(r.image), applied);
      },
      py::arg("image"), py::arg("policy_json"), py::arg("seed"), py::arg("index"));

  m.def(
      "estimate_co2",
      [](double kwh, double intensity) {
        const EnergyEstimate e = estimate_co2(kwh, intensity);
        py::dict d;
        d["energy_kwh"] = e.energy_kwh;
        d["intensity_kg_per_kwh"] = e.intensity_kg_per_kwh;
        d["emissions_kg"] = e.emissions_kg;
        return d;
      },
      py::arg("energy_kwh"), py::arg("intensity_kg_per_kwh"));

  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> argv = {"sid"};
        argv.insert(argv.end(), args.begin(), args.end());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_command(argv, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
