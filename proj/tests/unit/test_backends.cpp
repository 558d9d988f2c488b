#include <cmath>
#include <numeric>

#include "doctest.h"
#include "sid/backends.hpp"
#include "sid/errors.hpp"
#include "sid/imageops.hpp"
#include "test_support.hpp"

using namespace sid;
using testing::constant_image;
using testing::fixture_path;

namespace {

const LabelSpace kSix = {"authentic", "dalle3", "sd1x", "sdxl", "mj12", "mj56"};

Patch patch_of(const ImageBuffer& img, std::string source = "img.png") {
  Patch p;
  p.pixels = img;
  p.source_id = std::move(source);
  return p;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::kIo;
}

void check_simplex(const PredictionDistribution& d) {
  for (double p : d.probabilities) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  CHECK(std::accumulate(d.probabilities.begin(), d.probabilities.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-5));
}

}  // namespace

TEST_CASE("stub backend returns scripted distributions verbatim") {
  StubScript script;
  script.default_probabilities = {0.9, 0.1};
  script.rules.push_back({std::string("b.png"), std::array<int, 2>{8, 0}, std::nullopt, {0.2, 0.8}});
  script.rules.push_back({std::string("c.png"), std::nullopt, std::nullopt, {0.4, 0.6}});
  const auto stub = make_stub_backend({"authentic", "sdxl"}, script);
  Patch p = patch_of(constant_image(8, 8, 1, 1, 1), "dir/b.png");
  CHECK(classify_patch(*stub, p).probabilities == std::vector<double>{0.9, 0.1});
  p.origin_x = 8;
  CHECK(classify_patch(*stub, p).probabilities == std::vector<double>{0.2, 0.8});
  p.source_id = "dirb.png";  // suffix must follow a separator
  CHECK(classify_patch(*stub, p).probabilities == std::vector<double>{0.9, 0.1});
  CHECK(classify_patch(*stub, patch_of(constant_image(8, 8, 0, 0, 0), "c.png")).probabilities ==
        std::vector<double>{0.4, 0.6});
}

TEST_CASE("stub luma rule splits on mean brightness") {
  StubScript script;
  script.default_probabilities = {1.0, 0.0};
  script.luma_rule = StubScript::LumaRule{127.5, {0.0, 1.0}, {1.0, 0.0}};
  const auto stub = make_stub_backend({"authentic", "sdxl"}, script);
  CHECK(classify_patch(*stub, patch_of(constant_image(8, 8, 200, 200, 200))).argmax() == 1);
  CHECK(classify_patch(*stub, patch_of(constant_image(8, 8, 20, 20, 20))).argmax() == 0);
}

TEST_CASE("stub distributions must match the label space and be valid") {
  StubScript bad;
  bad.default_probabilities = {0.5, 0.5, 0.0};
  CHECK_THROWS_AS(make_stub_backend({"authentic", "sdxl"}, bad), Error);
  bad.default_probabilities = {0.7, 0.7};
  CHECK_THROWS_AS(make_stub_backend({"authentic", "sdxl"}, bad), Error);
  StubScript ok;
  ok.default_probabilities = {0.5, 0.5};
  CHECK(kind_of([&] { make_stub_backend({"sdxl", "dalle3"}, ok); }) == ErrorKind::kContractViolation);
}

TEST_CASE("reference backend yields simplex vectors and echoes its label space") {
  RefModel m = RefModel::zeros({"authentic", "sdxl", "mj56"}, kFeatureDim);
  CounterRng rng(4, 0);
  for (auto& w : m.weights) w = rng.uniform(-0.3, 0.3);
  testing::TempDir dir;
  m.save(dir / "model.json");
  BackendDescriptor d;
  d.kind = BackendKind::kReference;
  d.model_path = dir / "model.json";
  const auto backend = load_backend(d);
  CHECK(backend->label_space() == m.label_space);
  const auto again = load_backend(d);
  for (int i = 0; i < 5; ++i) {
    const Patch p = patch_of(testing::random_image(rng, 24, 24));
    const auto dist = classify_patch(*backend, p);
    check_simplex(dist);
    CHECK(dist.probabilities == classify_patch(*again, p).probabilities);
  }
}

TEST_CASE("load errors carry the failure kind") {
  BackendDescriptor d;
  d.kind = BackendKind::kReference;
  d.model_path = "/nonexistent/model.json";
  CHECK(kind_of([&] { load_backend(d); }) == ErrorKind::kLoad);
  d.kind = BackendKind::kExternal;
  d.model_path = "/nonexistent/model.onnx";
  d.label_space = kSix;
  CHECK(kind_of([&] { load_backend(d); }) == ErrorKind::kLoad);
  d.model_path = fixture_path("corrupt.onnx");
  CHECK(kind_of([&] { load_backend(d); }) == ErrorKind::kLoad);
  nlohmann::json doc = {{"version", 7}, {"kind", "stub"}};
  CHECK(kind_of([&] { BackendDescriptor::from_json(doc); }) == ErrorKind::kVersion);
}

TEST_CASE("external ONNX backend classifies and enforces its contract") {
  BackendDescriptor d;
  d.kind = BackendKind::kExternal;
  d.model_path = fixture_path("gap_linear_6.onnx");
  d.label_space = kSix;
  d.input_spec.height = d.input_spec.width = 32;
  const auto backend = load_backend(d);
  CHECK(backend->input_side() == 32);
  // The fixture responds to the mean of each channel: red -> class 0, green -> 1, blue -> 2.
  const auto red = classify_patch(*backend, patch_of(constant_image(32, 32, 255, 0, 0)));
  const auto green = classify_patch(*backend, patch_of(constant_image(32, 32, 0, 255, 0)));
  check_simplex(red);
  CHECK(red.argmax() == 0);
  CHECK(green.argmax() == 1);
  // Logits (8, 0, 0, 0, 0, 0) go through softmax.
  CHECK(red.probabilities[0] == doctest::Approx(std::exp(8.0) / (std::exp(8.0) + 5.0)).epsilon(1e-6));

  // BGR channel order swaps which class red excites.
  d.input_spec.bgr = true;
  CHECK(classify_patch(*load_backend(d), patch_of(constant_image(32, 32, 255, 0, 0))).argmax() == 2);

  CHECK(kind_of([&] { classify_patch(*backend, patch_of(constant_image(16, 16, 0, 0, 0))); }) ==
        ErrorKind::kContractViolation);

  d.input_spec.bgr = false;
  d.label_space = {"authentic", "dalle3", "sd1x", "sdxl", "mj12"};
  const auto five = load_backend(d);
  CHECK(kind_of([&] { classify_patch(*five, patch_of(constant_image(32, 32, 1, 2, 3))); }) ==
        ErrorKind::kContractViolation);
}

TEST_CASE("descriptor JSON round trip") {
  const nlohmann::json doc = {
      {"version", 1},
      {"kind", "stub"},
      {"id", "scripted"},
      {"label_space", {"authentic", "sdxl"}},
      {"script",
       {{"default", {0.5, 0.5}},
        {"rules", {{{"source", "x.png"}, {"origin", {0, 16}}, {"probabilities", {0.0, 1.0}}}}}}}};
  const BackendDescriptor d = BackendDescriptor::from_json(doc);
  CHECK(d.id == "scripted");
  REQUIRE(d.stub.rules.size() == 1);
  CHECK((*d.stub.rules[0].origin)[1] == 16);
  const BackendDescriptor back = BackendDescriptor::from_json(d.to_json());
  CHECK(back.to_json() == d.to_json());
  const auto backend = load_backend(d);
  CHECK(backend->id() == "scripted");
}
