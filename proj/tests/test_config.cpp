#include <doctest.h>

#include <fstream>

#include "nnc/config.hpp"
#include "nnc/error.hpp"
#include "support/oracles.hpp"

using namespace nnc;
using nlohmann::json;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("parse_toml") {
  const json doc = parse_toml(R"(# experiment
model = "m.json"   # trailing comment
iterations = 1_000
ratio = 2.5e-1
flag = true
name = 'literal\path'
list = [1, 2,
        3,]   # multi-line

[quantization]
width = 16
"quoted key" = "a\tb"

[quantization.manual]
conv1 = 9
dotted.key = -3
)");
  CHECK(doc["model"] == "m.json");
  CHECK(doc["iterations"] == 1000);
  CHECK(doc["ratio"].get<double>() == 0.25);
  CHECK(doc["flag"] == true);
  CHECK(doc["name"] == "literal\\path");
  CHECK(doc["list"] == json::array({1, 2, 3}));
  CHECK(doc["quantization"]["width"] == 16);
  CHECK(doc["quantization"]["quoted key"] == "a\tb");
  CHECK(doc["quantization"]["manual"]["conv1"] == 9);
  CHECK(doc["quantization"]["manual"]["dotted"]["key"] == -3);
}

TEST_CASE("parse_toml errors carry line numbers") {
  auto message = [](std::string_view text) {
    try {
      parse_toml(text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
      return std::string(e.what());
    }
    FAIL("no exception");
    return std::string();
  };
  CHECK(message("a = 1\nb = \n").find("line 2") != std::string::npos);
  CHECK(message("a = 1\na = 2\n").find("twice") != std::string::npos);
  CHECK(message("a = {x = 1}\n").find("inline") != std::string::npos);
  CHECK(message("[[t]]\n").find("arrays of tables") != std::string::npos);
  CHECK(message("a = \"open\n").find("unterminated") != std::string::npos);
  CHECK(message("a = 1 2\n").find("line 1") != std::string::npos);
}

TEST_CASE("parse_experiment_config") {
  SUBCASE("full") {
    const ExperimentConfig cfg = parse_experiment_config(R"(
model = "model.json"
output_dir = "build/out"
calibration = "/abs/calib.json"
dataset = "data.json"
iterations = 3
epochs = 20
optimizer = "adam"

[quantization]
width = 9
policy = "per_layer"
)",
                                                         "/base");
    CHECK(cfg.model == std::filesystem::path("/base/model.json"));
    CHECK(cfg.output_dir == std::filesystem::path("/base/build/out"));
    CHECK(*cfg.calibration == std::filesystem::path("/abs/calib.json"));
    CHECK(*cfg.dataset == std::filesystem::path("/base/data.json"));
    CHECK(cfg.iterations == 3);
    REQUIRE(cfg.quantization);
    CHECK(cfg.quantization->width == 9);
    CHECK(cfg.quantization->policy == ScalePolicy::PerLayerDerived);
    CHECK(cfg.warnings.size() == 2);
  }
  SUBCASE("fixed Q7.9 with defaults") {
    const ExperimentConfig cfg = parse_experiment_config("model = 'm.json'\n[quantization]\nwidth = 16\n");
    CHECK(cfg.quantization->policy == ScalePolicy::PerNetworkFixed);
    CHECK(cfg.quantization->fixed_frac == 9);
    CHECK(cfg.output_dir == std::filesystem::path("out"));
  }
  SUBCASE("no quantization table means float") {
    CHECK_FALSE(parse_experiment_config("model = 'm.json'\n").quantization);
  }
  SUBCASE("manual formats") {
    const ExperimentConfig cfg = parse_experiment_config(
        "model = 'm.json'\n[quantization]\nwidth = 8\npolicy = 'per_layer'\nactivations = 'manual'\n"
        "[quantization.manual]\ninput = 5\ndense = 3\n");
    CHECK(cfg.quantization->activations == ActivationSource::Manual);
    CHECK(cfg.quantization->manual_frac.at("dense") == 3);
  }
  SUBCASE("invalid") {
    CHECK(code_of([] { parse_experiment_config("output_dir = 'x'\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { parse_experiment_config("model = 'm'\nbogus = 1\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { parse_experiment_config("model = 'm'\n[quantization]\nwidth = 12\n"); }) ==
          ErrorCode::ConfigError);
    CHECK(code_of([] { parse_experiment_config("model = 'm'\n[quantization]\npolicy = 'odd'\n"); }) ==
          ErrorCode::ConfigError);
    CHECK(code_of([] { parse_experiment_config("model = 3\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { parse_experiment_config("model = 'm'\niterations = 0\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { parse_experiment_config("model = 'm'\n[quantization]\nactivations = 'manual'\n"); }) ==
          ErrorCode::ConfigError);
  }
}

TEST_CASE("tensor_from_json") {
  CHECK(tensor_from_json(json::parse("[[1, 2], [3, 4]]"), {2, 2}) == std::vector<double>{1, 2, 3, 4});
  CHECK(tensor_from_json(json::parse("[1, 2, 3, 4]"), {2, 2}) == std::vector<double>{1, 2, 3, 4});
  CHECK(code_of([] { tensor_from_json(json::parse("[[1, 2]]"), {2, 2}); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { tensor_from_json(json::parse("[1, \"x\", 3, 4]"), {2, 2}); }) == ErrorCode::SchemaError);
}

TEST_CASE("load_dataset") {
  const auto dir = testing::scratch_dir("dataset");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return dir / name;
  };
  const Dataset d = load_dataset(write("d.json", R"({"inputs": [[0.5, 1.0], [2, 3]], "labels": [1, 0]})"), {1, 2});
  CHECK(d.inputs.size() == 2);
  CHECK(d.labels == std::vector<int>{1, 0});
  CHECK(load_dataset(write("c.json", R"({"inputs": [[0.5, 1.0]]})"), {1, 2}, false).labels.empty());
  CHECK(code_of([&] { load_dataset(dir / "c.json", {1, 2}); }) == ErrorCode::SchemaError);
  CHECK(code_of([&] { load_dataset(write("e.json", R"({"inputs": []})"), {1, 2}, false); }) == ErrorCode::EmptyDataset);
  CHECK(code_of([&] { load_dataset(write("m.json", R"({"inputs": [[1]], "labels": [0, 1]})"), {1, 1}); }) ==
        ErrorCode::SchemaError);
  std::filesystem::remove_all(dir);
}
