#include <doctest.h>

#include <fstream>
#include <sstream>

#include "nnc/ir/model_io.hpp"
#include "nnc/ir/templates.hpp"
#include "support/oracles.hpp"

using namespace nnc;
using nlohmann::json;

namespace {

struct Run {
  int status = 0;
  std::string out;
  std::string err;
};

Run nnc_cli(const std::string& args, const std::filesystem::path& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(NNC_BINARY) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

struct Workspace {
  std::filesystem::path dir = testing::scratch_dir("cli");
  ~Workspace() { std::filesystem::remove_all(dir); }

  std::filesystem::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
};

}  // namespace

TEST_CASE("inspect prints nodes and shapes") {
  Workspace ws;
  save_model_file(build_mlp(MlpConfig{}), ws.dir / "mlp.json");
  const Run r = nnc_cli("inspect " + (ws.dir / "mlp.json").string(), ws.dir);
  CHECK(r.status == 0);
  CHECK(r.out.find("dense1") != std::string::npos);
  CHECK(r.out.find("(1,4)") != std::string::npos);
  CHECK(r.out.find("parameters: 46") != std::string::npos);
}

TEST_CASE("estimate reports the ResNetv1-6 ROM at 8 bits") {
  Workspace ws;
  save_model_file(build_resnet_v1_6(16, {9, 128}, 6), ws.dir / "resnet.json");
  const auto cfg = ws.write("cfg.toml", "model = \"resnet.json\"\n[quantization]\nwidth = 8\n");
  const Run r = nnc_cli("estimate " + cfg.string(), ws.dir);
  CHECK(r.status == 0);
  CHECK(r.out.find("ROM (uniform, 8-bit): 3958 bytes") != std::string::npos);
  const Run j = nnc_cli("estimate --json " + cfg.string(), ws.dir);
  CHECK(json::parse(j.out)["rom_bytes"]["uniform"] == 3958);
}

TEST_CASE("quantize writes Q7.9 formats everywhere") {
  Workspace ws;
  save_model_file(build_resnet_v1_6(4, {3, 32}, 3), ws.dir / "resnet.json");
  const auto cfg = ws.write("cfg.toml", "model = \"resnet.json\"\nepochs = 3\n[quantization]\nwidth = 16\nfrac_bits = 9\n");
  const Run r = nnc_cli("quantize " + cfg.string(), ws.dir);
  REQUIRE(r.status == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  const json info = read_json_file(ws.dir / "out" / "quantized" / "quant_info.json");
  for (const auto& [id, q] : info["nodes"].items()) {
    CHECK(q["n_y"] == 9);
    if (q.contains("n_w")) CHECK(q["n_w"] == 9);
  }
  CHECK(std::filesystem::file_size(ws.dir / "out" / "quantized" / "classifier.weights.bin") == 2 * 3 * 4);
  CHECK(std::filesystem::file_size(ws.dir / "out" / "quantized" / "classifier.bias.bin") == 4 * 3);
  CHECK(std::filesystem::exists(ws.dir / "out" / "quantized" / "model.json"));
}

TEST_CASE("transform, codegen and evaluate") {
  Workspace ws;
  save_model_file(build_cnn(CnnConfig{.input = {2, 16}, .classes = 3}), ws.dir / "cnn.json");
  ws.write("data.json", R"({"inputs": [)" + std::string("[[0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1,1.1,1.2,1.3,1.4,1.5,1.6],"
                                                         "[1,0,1,0,1,0,1,0,1,0,1,0,1,0,1,0]]") +
                            R"(], "labels": [2]})");
  const auto cfg = ws.write("cfg.toml",
                            "model = \"cnn.json\"\ndataset = \"data.json\"\n[quantization]\nwidth = 8\npolicy = \"per_layer\"\n");
  CHECK(nnc_cli("transform " + cfg.string(), ws.dir).status == 0);
  CHECK(std::filesystem::exists(ws.dir / "out" / "model.json"));
  const Run gen = nnc_cli("codegen --harness " + cfg.string(), ws.dir);
  CHECK(gen.status == 0);
  CHECK(std::filesystem::exists(ws.dir / "out" / "model.c"));
  CHECK(std::filesystem::exists(ws.dir / "out" / "main.c"));
  const Run eval = nnc_cli("evaluate " + cfg.string(), ws.dir);
  CHECK(eval.status == 0);
  CHECK(eval.out.find("float") != std::string::npos);
  CHECK(eval.out.find("fake-quant") != std::string::npos);
  CHECK(eval.out.find("fixed") != std::string::npos);
  // Determinism: a second run prints the same bytes.
  CHECK(nnc_cli("evaluate " + cfg.string(), ws.dir).out == eval.out);
}

TEST_CASE("exit codes") {
  Workspace ws;
  save_model_file(build_mlp(MlpConfig{}), ws.dir / "mlp.json");
  SUBCASE("unknown config key") {
    const auto cfg = ws.write("bad.toml", "model = \"mlp.json\"\nfoo = 1\n");
    CHECK(nnc_cli("estimate " + cfg.string(), ws.dir).status == 2);
  }
  SUBCASE("missing model file") {
    const auto cfg = ws.write("bad.toml", "model = \"nope.json\"\n");
    CHECK(nnc_cli("transform " + cfg.string(), ws.dir).status == 2);
  }
  SUBCASE("schema error in the model") {
    ws.write("broken.json", R"({"format_version": 1, "input": {"channels": 1, "samples": 2}, "nodes": []})");
    const Run r = nnc_cli("inspect " + (ws.dir / "broken.json").string(), ws.dir);
    CHECK(r.status == 2);
    CHECK(r.err.find("$.output") != std::string::npos);
  }
  SUBCASE("module error") {
    // Interior SoftMax fails the transform pipeline.
    ws.write("sm.json", R"({"format_version": 1, "input": {"channels": 1, "samples": 2},
      "nodes": [{"id": "s", "kind": "SoftMax", "inputs": ["input"]},
                {"id": "r", "kind": "ReLU", "inputs": ["s"]}], "output": "r"})");
    const auto cfg = ws.write("sm.toml", "model = \"sm.json\"\n");
    const Run r = nnc_cli("transform " + cfg.string(), ws.dir);
    CHECK(r.status == 1);
    CHECK(r.err.find("InteriorSoftmax") != std::string::npos);
  }
  SUBCASE("bad usage") { CHECK(nnc_cli("frobnicate", ws.dir).status == 2); }
}
