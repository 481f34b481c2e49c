// nnc: command-line driver for the model-to-C flow.
//
//   nnc inspect model.json
//   nnc transform|quantize|evaluate|codegen|estimate cfg.toml
//
// Exit codes: 0 success, 1 module error, 2 configuration or schema error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "nnc/allocator.hpp"
#include "nnc/codegen.hpp"
#include "nnc/config.hpp"
#include "nnc/costmodel.hpp"
#include "nnc/error.hpp"
#include "nnc/interpreter.hpp"
#include "nnc/ir/model_io.hpp"
#include "nnc/quantizer.hpp"
#include "nnc/transforms.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kModuleError = 1;
constexpr int kConfigError = 2;

bool is_config_error(nnc::ErrorCode code) {
  return code == nnc::ErrorCode::ConfigError || code == nnc::ErrorCode::SchemaError ||
         code == nnc::ErrorCode::VersionError;
}

void require_exists(const fs::path& path, const std::string& key) {
  if (!fs::exists(path)) throw nnc::Error(nnc::ErrorCode::ConfigError, "'" + key + "' points to missing file " + path.string());
}

nnc::ExperimentConfig load_config(const fs::path& path) {
  nnc::ExperimentConfig cfg = nnc::load_experiment_config(path);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
  require_exists(cfg.model, "model");
  if (cfg.calibration) require_exists(*cfg.calibration, "calibration");
  if (cfg.dataset) require_exists(*cfg.dataset, "dataset");
  return cfg;
}

nnc::Graph load_transformed(const nnc::ExperimentConfig& cfg) {
  return nnc::run_pipeline(nnc::load_model_file(cfg.model));
}

// Calibration samples: the calibration file, else the dataset inputs.
nnc::CalibrationStats calibration_for(const nnc::ExperimentConfig& cfg, const nnc::Graph& graph) {
  const nnc::QuantizationScheme& scheme = *cfg.quantization;
  if (scheme.policy == nnc::ScalePolicy::PerNetworkFixed || scheme.activations == nnc::ActivationSource::Manual) return {};
  std::optional<fs::path> source = cfg.calibration ? cfg.calibration : cfg.dataset;
  if (!source) {
    throw nnc::Error(nnc::ErrorCode::ConfigError,
                     "per_layer quantization with calibrated activations needs 'calibration' or 'dataset'");
  }
  const nnc::Dataset data = nnc::load_dataset(*source, graph.input_shape, false);
  return nnc::calibrate(graph, data.inputs);
}

nnc::QuantizedModel quantize(const nnc::ExperimentConfig& cfg, const nnc::Graph& graph) {
  return nnc::quantize_model(graph, *cfg.quantization, calibration_for(cfg, graph));
}

void require_quantization(const nnc::ExperimentConfig& cfg, const std::string& command) {
  if (!cfg.quantization) {
    throw nnc::Error(nnc::ErrorCode::ConfigError, command + " needs a [quantization] table");
  }
}

void write_blob(const fs::path& path, const std::vector<std::int32_t>& values, std::size_t bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nnc::Error(nnc::ErrorCode::IoError, "cannot write " + path.string());
  for (std::int32_t v : values) {
    const auto bits = static_cast<std::uint32_t>(v);
    for (std::size_t b = 0; b < bytes; ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
}

json quant_info_json(const nnc::QuantizedModel& model) {
  json nodes = json::object();
  for (const auto& [id, q] : model.info) {
    json entry = {{"n_x", q.n_x}, {"n_y", q.n_y}};
    if (q.has_weights) {
      entry["n_w"] = q.n_w;
      entry["n_b"] = q.n_b;
    }
    nodes[id] = entry;
  }
  return {{"width", model.width},
          {"container_bytes", nnc::container_bytes(model.width)},
          {"bias_container_bytes", nnc::container_bytes(2 * model.width)},
          {"nodes", nodes}};
}

int cmd_inspect(const fs::path& model_path) {
  const nnc::Graph graph = nnc::load_model_file(model_path);
  const nnc::ValidationReport report = nnc::validate(graph);
  if (!report.ok()) {
    for (const auto& v : report.violations) std::cerr << "invalid: " << v.node << ": " << v.message << '\n';
    throw nnc::Error(nnc::ErrorCode::InvalidGraph, std::to_string(report.violations.size()) + " violation(s)");
  }
  const nnc::ShapeMap shapes = nnc::infer_shapes(graph);
  std::cout << std::left << std::setw(20) << "node" << std::setw(12) << "kind" << std::setw(12) << "shape"
            << std::setw(10) << "params" << "inputs\n";
  for (const auto& id : nnc::topo_order(graph)) {
    const nnc::LayerNode& node = graph.nodes.at(id);
    std::string inputs;
    for (const auto& src : node.inputs) inputs += (inputs.empty() ? "" : ",") + src;
    std::cout << std::left << std::setw(20) << id << std::setw(12) << nnc::to_string(node.kind) << std::setw(12)
              << nnc::to_string(shapes.at(id)) << std::setw(10) << nnc::parameter_count(node) << inputs << '\n';
  }
  std::cout << "output: " << graph.output << '\n' << "parameters: " << nnc::parameter_count(graph) << '\n';
  return 0;
}

int cmd_transform(const fs::path& config_path) {
  const nnc::ExperimentConfig cfg = load_config(config_path);
  const nnc::Graph graph = load_transformed(cfg);
  fs::create_directories(cfg.output_dir);
  const fs::path out = cfg.output_dir / "model.json";
  nnc::save_model_file(graph, out);
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

int cmd_quantize(const fs::path& config_path) {
  const nnc::ExperimentConfig cfg = load_config(config_path);
  require_quantization(cfg, "quantize");
  const nnc::Graph graph = load_transformed(cfg);
  const nnc::QuantizedModel model = quantize(cfg, graph);
  const fs::path dir = cfg.output_dir / "quantized";
  fs::create_directories(dir);
  nnc::save_model_file(model.graph, dir / "model.json");
  nnc::write_json_file(quant_info_json(model), dir / "quant_info.json");
  const auto idents = nnc::c_identifiers(model.graph);
  for (const auto& [id, tensor] : model.weights) {
    write_blob(dir / (idents.at(id) + ".weights.bin"), tensor.data, nnc::container_bytes(model.width));
    write_blob(dir / (idents.at(id) + ".bias.bin"), model.biases.at(id), nnc::container_bytes(2 * model.width));
  }
  std::cout << "wrote " << dir.string() << '\n';
  return 0;
}

void print_metrics(const std::string& label, const nnc::Metrics& m) {
  std::cout << std::left << std::setw(12) << label << "accuracy " << std::fixed << std::setprecision(4) << m.accuracy;
  if (m.mse) std::cout << "  mse_vs_float " << std::scientific << std::setprecision(6) << *m.mse;
  std::cout << std::defaultfloat << '\n';
}

int cmd_evaluate(const fs::path& config_path) {
  const nnc::ExperimentConfig cfg = load_config(config_path);
  if (!cfg.dataset) throw nnc::Error(nnc::ErrorCode::ConfigError, "evaluate needs 'dataset'");
  const nnc::Graph graph = load_transformed(cfg);
  const nnc::Dataset data = nnc::load_dataset(*cfg.dataset, graph.input_shape);
  const nnc::Metrics reference = nnc::evaluate(graph, data);
  std::cout << "samples     " << data.inputs.size() << '\n';
  print_metrics("float", reference);
  if (cfg.quantization) {
    const nnc::QuantizedModel model = quantize(cfg, graph);
    print_metrics("fake-quant", nnc::evaluate_fake_quant(model, data, &reference.outputs));
    print_metrics("fixed", nnc::evaluate(model, data, &reference.outputs));
  }
  return 0;
}

int cmd_codegen(const fs::path& config_path, bool harness) {
  const nnc::ExperimentConfig cfg = load_config(config_path);
  const nnc::Graph graph = load_transformed(cfg);
  const nnc::AllocationPlan plan = nnc::plan_buffers(graph, nnc::infer_shapes(graph));
  nnc::SourceBundle bundle = cfg.quantization ? nnc::emit(quantize(cfg, graph), plan) : nnc::emit(graph, plan);
  if (harness) bundle.files["main.c"] = nnc::emit_test_harness();
  bundle.write_to(cfg.output_dir);
  for (const auto& [name, text] : bundle.files) std::cout << "wrote " << (cfg.output_dir / name).string() << '\n';
  return 0;
}

int cmd_estimate(const fs::path& config_path, bool as_json) {
  const nnc::ExperimentConfig cfg = load_config(config_path);
  const nnc::Graph graph = load_transformed(cfg);
  const int width = cfg.quantization ? cfg.quantization->width : 32;
  const nnc::CostReport report = nnc::build_cost_report(graph, width);
  if (as_json) {
    std::cout << nnc::report_to_json(report).dump(2) << '\n';
  } else {
    std::cout << nnc::report_to_table(report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nnc: compile 1D neural network models to embedded C"};
  app.require_subcommand(1);

  fs::path model_path, config_path;
  bool harness = false;
  bool as_json = false;

  auto* inspect = app.add_subcommand("inspect", "Print nodes, shapes and parameter counts");
  inspect->add_option("model", model_path, "Model JSON document")->required();
  auto* transform = app.add_subcommand("transform", "Run the graph transform pipeline and write model.json");
  auto* quantize_cmd = app.add_subcommand("quantize", "Write the quantized model archive");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Report float, fake-quantized and fixed-point metrics");
  auto* codegen = app.add_subcommand("codegen", "Emit the C library");
  codegen->add_flag("--harness", harness, "Also write the stdin/stdout test driver main.c");
  auto* estimate = app.add_subcommand("estimate", "Print operation counts, cycles, ROM and RAM");
  estimate->add_flag("--json", as_json, "Print the report as JSON");
  for (auto* sub : {transform, quantize_cmd, evaluate_cmd, codegen, estimate}) {
    sub->add_option("config", config_path, "Experiment TOML file")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*inspect) return cmd_inspect(model_path);
    if (*transform) return cmd_transform(config_path);
    if (*quantize_cmd) return cmd_quantize(config_path);
    if (*evaluate_cmd) return cmd_evaluate(config_path);
    if (*codegen) return cmd_codegen(config_path, harness);
    if (*estimate) return cmd_estimate(config_path, as_json);
  } catch (const nnc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? kConfigError : kModuleError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kModuleError;
  }
  return kModuleError;
}
