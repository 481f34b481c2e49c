#include "nnc/codegen.hpp"

#include <functional>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "nnc/error.hpp"

namespace nnc {

std::string render_template(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, open - pos));
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) throw Error(ErrorCode::PreconditionError, "unterminated template placeholder");
    const std::string key(text.substr(open + 2, close - open - 2));
    auto it = values.find(key);
    if (it == values.end()) throw Error(ErrorCode::PreconditionError, "template placeholder '" + key + "' has no value");
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

void SourceBundle::write_to(const std::filesystem::path& directory) const {
  std::filesystem::create_directories(directory);
  for (const auto& [name, text] : files) {
    std::ofstream out(directory / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + (directory / name).string());
    out << text;
  }
}

std::map<std::string, std::string> c_identifiers(const Graph& graph) {
  static const std::set<std::string> kReserved = {
      "auto",   "break",  "case",     "char",   "const",    "continue", "default",  "do",     "double",
      "else",   "enum",   "extern",   "float",  "for",      "goto",     "if",       "inline", "int",
      "long",   "register", "restrict", "return", "short",  "signed",   "sizeof",   "static", "struct",
      "switch", "typedef", "union",   "unsigned", "void",   "volatile", "while",    "cnn",    "input",
      "output"};
  std::map<std::string, std::string> result;
  std::set<std::string> taken;
  for (const auto& [id, node] : graph.nodes) {
    std::string ident;
    for (char ch : id) {
      ident += std::isalnum(static_cast<unsigned char>(ch)) ? static_cast<char>(std::tolower(static_cast<unsigned char>(ch))) : '_';
    }
    if (ident.empty() || std::isdigit(static_cast<unsigned char>(ident.front()))) ident = "n_" + ident;
    if (kReserved.count(ident) != 0) ident += "_";
    std::string unique = ident;
    for (int suffix = 2; taken.count(unique) != 0; ++suffix) unique = ident + "_" + std::to_string(suffix);
    taken.insert(unique);
    result[id] = unique;
  }
  return result;
}

namespace {

constexpr std::string_view kFixedNumberHeader = R"(#ifndef NUMBER_H
#define NUMBER_H

#include <stdint.h>

#define NUMBER_IS_FLOAT 0
#define NUMBER_WIDTH {{width}}
#define LONG_NUMBER_WIDTH {{long_bits}}
#define NUMBER_MIN ({{min}})
#define NUMBER_MAX {{max}}

typedef {{number_type}} number_t;
typedef {{long_type}} long_number_t;
typedef {{ulong_type}} ulong_number_t;

static inline number_t clamp_to_number_t(long_number_t x) {
  if (x < NUMBER_MIN) return (number_t)NUMBER_MIN;
  if (x > NUMBER_MAX) return (number_t)NUMBER_MAX;
  return (number_t)x;
}

/* Accumulator addition wraps modulo 2^LONG_NUMBER_WIDTH. */
static inline long_number_t long_add(long_number_t a, long_number_t b) {
  return (long_number_t)((ulong_number_t)a + (ulong_number_t)b);
}

/* floor(x / 2^s) without relying on signed right shifts. */
static inline long_number_t shift_right_floor(long_number_t x, int s) {
  if (s >= LONG_NUMBER_WIDTH) return (long_number_t)(x < 0 ? -1 : 0);
  if (x >= 0) return (long_number_t)(x >> s);
  return (long_number_t)~((long_number_t)~x >> s);
}

/* Moves x from the accumulator scale by `shift` fractional bits (right when
   positive, left when negative) and saturates to the operand width. */
static inline number_t scale_number_t(long_number_t x, int shift) {
  if (shift >= 0) return clamp_to_number_t(shift_right_floor(x, shift));
  if (x == 0) return 0;
  if (-shift >= NUMBER_WIDTH || x > NUMBER_MAX || x < NUMBER_MIN) {
    return (number_t)(x > 0 ? NUMBER_MAX : NUMBER_MIN);
  }
  return clamp_to_number_t((long_number_t)(x * ((long_number_t)1 << -shift)));
}

static inline long_number_t floor_div(long_number_t x, long_number_t d) {
  long_number_t q = (long_number_t)(x / d);
  if (x % d != 0 && x < 0) q = (long_number_t)(q - 1);
  return q;
}

#endif
)";

constexpr std::string_view kFloatNumberHeader = R"(#ifndef NUMBER_H
#define NUMBER_H

#define NUMBER_IS_FLOAT 1

typedef float number_t;
typedef float long_number_t;

static inline number_t clamp_to_number_t(long_number_t x) { return x; }

#endif
)";

constexpr std::string_view kModelHeader = R"(#ifndef MODEL_H
#define MODEL_H

#include "number.h"

#define MODEL_INPUT_CHANNELS {{in_channels}}
#define MODEL_INPUT_SAMPLES {{in_samples}}
#define MODEL_OUTPUT_CHANNELS {{out_channels}}
#define MODEL_OUTPUT_SAMPLES {{out_samples}}
{{scale_factors}}
typedef number_t output_layer_type[MODEL_OUTPUT_CHANNELS * MODEL_OUTPUT_SAMPLES];

/* Not reentrant: intermediate buffers are file-scope pools. */
void cnn(const number_t input[MODEL_INPUT_CHANNELS][MODEL_INPUT_SAMPLES], output_layer_type output);
{{helper}}
#endif
)";

constexpr std::string_view kInputHelper = R"(
#include <math.h>

/* x_fixed = clamp_to_number_t((long_number_t)floor(x_float * 2^INPUT_SCALE_FACTOR)),
   with the scaled value clamped before the integer cast. */
static inline number_t float_to_input(double x) {
  double scaled = floor({{scaled_expr}});
  if (scaled < (double)NUMBER_MIN) return (number_t)NUMBER_MIN;
  if (scaled > (double)NUMBER_MAX) return (number_t)NUMBER_MAX;
  return clamp_to_number_t((long_number_t)scaled);
}
)";

constexpr std::string_view kConvFixed = R"(
static void layer_{{name}}(const number_t *input, number_t *output) {
  int f, o, c, t;
  for (f = 0; f < {{filters}}; f++) {
    for (o = 0; o < {{out_samples}}; o++) {
      long_number_t acc = {{name}}_bias[f];
      number_t y;
      for (c = 0; c < {{in_channels}}; c++) {
        for (t = 0; t < {{kernel}}; t++) {
          const int pos = o * {{stride}} + t - {{pad_left}};
          if (pos < 0 || pos >= {{in_samples}}) continue;
          acc = long_add(acc, (long_number_t)input[c * {{in_samples}} + pos] * {{name}}_kernel[f][c][t]);
        }
      }
      y = scale_number_t(acc, {{shift}});
{{relu}}      output[f * {{out_samples}} + o] = y;
    }
  }
}
)";

constexpr std::string_view kConvFloat = R"(
static void layer_{{name}}(const number_t *input, number_t *output) {
  int f, o, c, t;
  for (f = 0; f < {{filters}}; f++) {
    for (o = 0; o < {{out_samples}}; o++) {
      number_t y = {{name}}_bias[f];
      for (c = 0; c < {{in_channels}}; c++) {
        for (t = 0; t < {{kernel}}; t++) {
          const int pos = o * {{stride}} + t - {{pad_left}};
          if (pos < 0 || pos >= {{in_samples}}) continue;
          y += input[c * {{in_samples}} + pos] * {{name}}_kernel[f][c][t];
        }
      }
{{relu}}      output[f * {{out_samples}} + o] = y;
    }
  }
}
)";

constexpr std::string_view kDenseFixed = R"(
static void layer_{{name}}(const number_t *input, number_t *output) {
  int j, i;
  for (j = 0; j < {{units}}; j++) {
    long_number_t acc = {{name}}_bias[j];
    number_t y;
    for (i = 0; i < {{in_features}}; i++) {
      acc = long_add(acc, (long_number_t)input[i] * {{name}}_kernel[j][i]);
    }
    y = scale_number_t(acc, {{shift}});
{{relu}}    output[j] = y;
  }
}
)";

constexpr std::string_view kDenseFloat = R"(
static void layer_{{name}}(const number_t *input, number_t *output) {
  int j, i;
  for (j = 0; j < {{units}}; j++) {
    number_t y = {{name}}_bias[j];
    for (i = 0; i < {{in_features}}; i++) {
      y += input[i] * {{name}}_kernel[j][i];
    }
{{relu}}    output[j] = y;
  }
}
)";

constexpr std::string_view kMaxPool = R"(
static void layer_{{name}}(const number_t *input, number_t *output) {
  int c, o, t;
  for (c = 0; c < {{channels}}; c++) {
    for (o = 0; o < {{out_samples}}; o++) {
      const number_t *window = &input[c * {{in_samples}} + o * {{stride}}];
      number_t y = window[0];
      for (t = 1; t < {{pool}}; t++) {
        if (y < window[t]) y = window[t];
      }
{{relu}}      output[c * {{out_samples}} + o] = y;
    }
  }
}
)";

constexpr std::string_view kAvgPoolFixed = R"(
static void layer_{{name}}(const number_t *input, number_t *output) {
  int c, o, t;
  for (c = 0; c < {{channels}}; c++) {
    for (o = 0; o < {{out_samples}}; o++) {
      const number_t *window = &input[c * {{in_samples}} + o * {{stride}}];
      long_number_t acc = window[0];
      number_t y;
      for (t = 1; t < {{pool}}; t++) acc = long_add(acc, window[t]);
      y = clamp_to_number_t(floor_div(acc, {{pool}}));
{{relu}}      output[c * {{out_samples}} + o] = y;
    }
  }
}
)";

constexpr std::string_view kAvgPoolFloat = R"(
static void layer_{{name}}(const number_t *input, number_t *output) {
  int c, o, t;
  for (c = 0; c < {{channels}}; c++) {
    for (o = 0; o < {{out_samples}}; o++) {
      const number_t *window = &input[c * {{in_samples}} + o * {{stride}}];
      number_t y = window[0];
      for (t = 1; t < {{pool}}; t++) y += window[t];
      y = y / (number_t){{pool}};
{{relu}}      output[c * {{out_samples}} + o] = y;
    }
  }
}
)";

constexpr std::string_view kAffineFixed = R"(
static void layer_{{name}}(const number_t *input, number_t *output) {
  int c, s;
  for (c = 0; c < {{channels}}; c++) {
    for (s = 0; s < {{samples}}; s++) {
      const int i = c * {{samples}} + s;
      long_number_t acc = long_add({{name}}_offset[c], (long_number_t)input[i] * {{name}}_scale[c]);
      output[i] = scale_number_t(acc, {{shift}});
    }
  }
}
)";

constexpr std::string_view kAffineFloat = R"(
static void layer_{{name}}(const number_t *input, number_t *output) {
  int c, s;
  for (c = 0; c < {{channels}}; c++) {
    for (s = 0; s < {{samples}}; s++) {
      const int i = c * {{samples}} + s;
      const number_t product = {{name}}_scale[c] * input[i];
      output[i] = product + {{name}}_offset[c];
    }
  }
}
)";

constexpr std::string_view kElementwise = R"(
static void layer_{{name}}({{params}}number_t *output) {
  int i;
  for (i = 0; i < {{size}}; i++) {
{{body}}  }
}
)";

constexpr std::string_view kHarness = R"(/* Reads little-endian number_t tensors from stdin until EOF, runs cnn() on
   each and prints one output element per line. */
#include <stdio.h>
#include <string.h>

#include "model.h"

static int read_number(number_t *value) {
  unsigned char bytes[sizeof(number_t)];
  size_t i;
  if (fread(bytes, 1, sizeof bytes, stdin) != sizeof bytes) return 0;
#if NUMBER_IS_FLOAT
  {
    unsigned long bits = 0;
    float f;
    for (i = 0; i < sizeof bytes; i++) bits |= (unsigned long)bytes[i] << (8 * i);
    {
      unsigned int narrow = (unsigned int)bits;
      memcpy(&f, &narrow, sizeof f);
    }
    *value = f;
  }
#else
  {
    unsigned long bits = 0;
    long signed_value;
    for (i = 0; i < sizeof bytes; i++) bits |= (unsigned long)bytes[i] << (8 * i);
    signed_value = (long)bits;
    if (bits & (1UL << (8 * sizeof bytes - 1))) signed_value -= (long)(1UL << (8 * sizeof bytes - 1)) * 2;
    *value = (number_t)signed_value;
  }
#endif
  return 1;
}

int main(void) {
  static number_t input[MODEL_INPUT_CHANNELS][MODEL_INPUT_SAMPLES];
  static output_layer_type output;
  for (;;) {
    int c, s, i;
    for (c = 0; c < MODEL_INPUT_CHANNELS; c++) {
      for (s = 0; s < MODEL_INPUT_SAMPLES; s++) {
        if (!read_number(&input[c][s])) return (c == 0 && s == 0) ? 0 : 1;
      }
    }
    cnn((const number_t (*)[MODEL_INPUT_SAMPLES])input, output);
    for (i = 0; i < MODEL_OUTPUT_CHANNELS * MODEL_OUTPUT_SAMPLES; i++) {
#if NUMBER_IS_FLOAT
      printf("%.9g\n", (double)output[i]);
#else
      printf("%ld\n", (long)output[i]);
#endif
    }
  }
}
)";

std::string int_literal(long long v) {
  if (v < -2147483647LL) return "(" + std::to_string(v + 1) + " - 1)";
  return std::to_string(v);
}

std::string float_literal(double value) {
  const auto f = static_cast<float>(value);
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, f);
  std::string text(buffer, result.ptr);
  if (text.find_first_of(".e") == std::string::npos) text += ".0";
  return text + "f";
}

template <typename Format>
std::string array_body(std::size_t count, Format format) {
  std::ostringstream os;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 12 == 0) os << "\n  ";
    os << format(i);
    if (i + 1 < count) os << ", ";
  }
  os << '\n';
  return os.str();
}

// Fully braced initializer for a row-major array of shape `dims`, without the
// outermost braces. Innermost rows stay on one line when short.
std::string nested_body(const std::vector<std::size_t>& dims, const std::function<std::string(std::size_t)>& format) {
  if (dims.size() == 1) return array_body(dims[0], format);
  std::size_t inner = 1;
  for (std::size_t d = 1; d < dims.size(); ++d) inner *= dims[d];
  const std::vector<std::size_t> rest(dims.begin() + 1, dims.end());
  std::ostringstream os;
  for (std::size_t i = 0; i < dims[0]; ++i) {
    std::string body = nested_body(rest, [&](std::size_t j) { return format(i * inner + j); });
    os << "\n{" << body << "}";
    if (i + 1 < dims[0]) os << ",";
  }
  os << '\n';
  return os.str();
}

std::string dims_suffix(const std::vector<std::size_t>& dims) {
  std::string out;
  for (std::size_t d : dims) out += "[" + std::to_string(d) + "]";
  return out;
}

struct Emitter {
  const Graph& graph;
  const AllocationPlan& plan;
  const QuantizedModel* quantized;  // null for float emission
  ShapeMap shapes;
  std::map<std::string, std::string> idents;

  Emitter(const Graph& g, const AllocationPlan& p, const QuantizedModel* q)
      : graph(g), plan(p), quantized(q), shapes(infer_shapes(g)), idents(c_identifiers(g)) {}

  bool fixed() const { return quantized != nullptr; }

  std::string relu_line(bool fused, const char* indent) const {
    if (!fused) return "";
    return std::string(indent) + (fixed() ? "if (y < 0) y = 0;\n" : "y = y > 0 ? y : 0;\n");
  }

  std::string weights_header(const LayerNode& node) const {
    const std::string& name = idents.at(node.id);
    const Shape in = shapes.at(node.inputs.front());
    std::string guard = "WEIGHTS_" + name + "_H";
    for (auto& ch : guard) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    std::ostringstream os;
    os << "#ifndef " << guard << "\n#define " << guard << "\n\n#include \"number.h\"\n\n";

    std::string kernel_name = "kernel", bias_name = "bias";
    std::vector<std::size_t> dims;
    const std::vector<double>* real_kernel = &node.weights.kernel;
    const std::vector<double>* real_bias = &node.weights.bias;
    switch (node.kind) {
      case LayerKind::Conv1D:
        dims = {static_cast<std::size_t>(node.attrs.filters), static_cast<std::size_t>(in.channels),
                static_cast<std::size_t>(node.attrs.kernel)};
        break;
      case LayerKind::Dense:
        dims = {static_cast<std::size_t>(node.attrs.units), in.size()};
        break;
      default:  // Affine
        kernel_name = "scale";
        bias_name = "offset";
        dims = {static_cast<std::size_t>(in.channels)};
        real_kernel = &node.weights.scale;
        real_bias = &node.weights.offset;
        break;
    }
    const std::string kernel_dims = dims_suffix(dims);
    const std::size_t bias_count = real_bias->size();
    if (fixed()) {
      const LayerQuantInfo& q = quantized->info.at(node.id);
      const auto& kw = quantized->weights.at(node.id).data;
      const auto& kb = quantized->biases.at(node.id);
      os << "/* Q" << (quantized->width - q.n_w) << "." << q.n_w << " */\n";
      os << "static const number_t " << name << "_" << kernel_name << kernel_dims << " = {"
         << nested_body(dims, [&](std::size_t i) { return int_literal(kw[i]); }) << "};\n\n";
      os << "/* accumulator scale 2^-" << q.n_b << " */\n";
      os << "static const long_number_t " << name << "_" << bias_name << "[" << bias_count << "] = {"
         << array_body(bias_count, [&](std::size_t i) { return int_literal(kb[i]); }) << "};\n";
    } else {
      os << "static const number_t " << name << "_" << kernel_name << kernel_dims << " = {"
         << nested_body(dims, [&](std::size_t i) { return float_literal((*real_kernel)[i]); }) << "};\n\n";
      os << "static const number_t " << name << "_" << bias_name << "[" << bias_count << "] = {"
         << array_body(bias_count, [&](std::size_t i) { return float_literal((*real_bias)[i]); }) << "};\n";
    }
    os << "\n#endif\n";
    return os.str();
  }

  std::string layer_function(const LayerNode& node) const {
    const std::string& name = idents.at(node.id);
    const Shape in = shapes.at(node.inputs.front());
    const Shape out = shapes.at(node.id);
    const LayerAttrs& a = node.attrs;
    std::map<std::string, std::string> v{{"name", name},
                                         {"in_channels", std::to_string(in.channels)},
                                         {"in_samples", std::to_string(in.samples)},
                                         {"out_samples", std::to_string(out.samples)},
                                         {"channels", std::to_string(in.channels)},
                                         {"samples", std::to_string(in.samples)},
                                         {"stride", std::to_string(a.stride)},
                                         {"size", std::to_string(out.size())}};
    auto shift = [&] {
      const LayerQuantInfo& q = quantized->info.at(node.id);
      return std::to_string(q.n_b - q.n_y);
    };
    switch (node.kind) {
      case LayerKind::Conv1D:
        v["filters"] = std::to_string(a.filters);
        v["kernel"] = std::to_string(a.kernel);
        v["pad_left"] = std::to_string(a.pad_left);
        v["relu"] = relu_line(a.fused_relu, "      ");
        if (fixed()) v["shift"] = shift();
        return render_template(fixed() ? kConvFixed : kConvFloat, v);
      case LayerKind::Dense:
        v["units"] = std::to_string(a.units);
        v["in_features"] = std::to_string(in.size());
        v["relu"] = relu_line(a.fused_relu, "    ");
        if (fixed()) v["shift"] = shift();
        return render_template(fixed() ? kDenseFixed : kDenseFloat, v);
      case LayerKind::MaxPool1D:
        v["pool"] = std::to_string(a.kernel);
        v["relu"] = relu_line(a.fused_relu, "      ");
        return render_template(kMaxPool, v);
      case LayerKind::AvgPool1D:
        v["pool"] = std::to_string(a.kernel);
        v["relu"] = relu_line(a.fused_relu, "      ");
        return render_template(fixed() ? kAvgPoolFixed : kAvgPoolFloat, v);
      case LayerKind::Affine:
        if (fixed()) v["shift"] = shift();
        return render_template(fixed() ? kAffineFixed : kAffineFloat, v);
      case LayerKind::Add:
        return add_function(node, v);
      case LayerKind::ReLU:
        v["params"] = "const number_t *input, ";
        v["body"] = fixed() ? "    output[i] = input[i] < 0 ? 0 : input[i];\n"
                            : "    output[i] = input[i] > 0 ? input[i] : 0;\n";
        return render_template(kElementwise, v);
      case LayerKind::Flatten:
        v["params"] = "const number_t *input, ";
        v["body"] = "    output[i] = input[i];\n";
        return render_template(kElementwise, v);
      default:
        throw Error(ErrorCode::UnsupportedLayer, std::string(to_string(node.kind)) + " '" + node.id +
                                                     "' cannot be emitted; run the transform pipeline first");
    }
  }

  std::string add_function(const LayerNode& node, std::map<std::string, std::string>& v) const {
    std::string params, body;
    for (std::size_t k = 0; k < node.inputs.size(); ++k) params += "const number_t *input" + std::to_string(k) + ", ";
    if (fixed()) {
      const LayerQuantInfo& q = quantized->info.at(node.id);
      body += "    long_number_t acc;\n    number_t y;\n";
      for (std::size_t k = 0; k < node.inputs.size(); ++k) {
        const int align = quantized->info.at(node.inputs[k]).n_y - q.n_x;
        const std::string term = "shift_right_floor(input" + std::to_string(k) + "[i], " + std::to_string(align) + ")";
        body += k == 0 ? "    acc = " + term + ";\n" : "    acc = long_add(acc, " + term + ");\n";
      }
      body += "    y = scale_number_t(acc, " + std::to_string(q.n_x - q.n_y) + ");\n";
    } else {
      body += "    number_t y = input0[i];\n";
      for (std::size_t k = 1; k < node.inputs.size(); ++k) body += "    y += input" + std::to_string(k) + "[i];\n";
    }
    body += relu_line(node.attrs.fused_relu, "    ");
    body += "    output[i] = y;\n";
    v["params"] = params;
    v["body"] = body;
    return render_template(kElementwise, v);
  }

  std::string buffer_of(const std::string& id, const std::string& input_id) const {
    if (id == input_id) return "&input[0][0]";
    return "pool" + std::to_string(plan.assignment.at(id));
  }

  SourceBundle run() {
    require_valid(graph);
    const std::string& input_id = input_node_id(graph);
    const std::vector<std::string> order = topo_order(graph);
    for (const auto& id : order) {
      if (id == input_id) continue;
      auto it = plan.assignment.find(id);
      if (it == plan.assignment.end() || it->second >= plan.pool_count() ||
          plan.pool_sizes[it->second] < shapes.at(id).size()) {
        throw Error(ErrorCode::PreconditionError, "allocation plan does not cover node '" + id + "'");
      }
    }

    SourceBundle bundle;
    const Shape out_shape = shapes.at(graph.output);

    if (fixed()) {
      const int w = quantized->width;
      const int long_bits = 2 * w <= 16 ? 16 : 32;
      bundle.files["number.h"] = render_template(
          kFixedNumberHeader, {{"width", std::to_string(w)},
                               {"long_bits", std::to_string(long_bits)},
                               {"min", std::to_string(-(1L << (w - 1)))},
                               {"max", std::to_string((1L << (w - 1)) - 1)},
                               {"number_type", w <= 8 ? "int8_t" : "int16_t"},
                               {"long_type", long_bits == 16 ? "int16_t" : "int32_t"},
                               {"ulong_type", long_bits == 16 ? "uint16_t" : "uint32_t"}});
    } else {
      bundle.files["number.h"] = std::string(kFloatNumberHeader);
    }

    std::string scale_factors, helper;
    if (fixed()) {
      scale_factors = "#define INPUT_SCALE_FACTOR " + std::to_string(quantized->input_format().frac) +
                      "\n#define OUTPUT_SCALE_FACTOR " + std::to_string(quantized->output_format().frac) + "\n";
      helper = emit_input_conversion_helper(quantized->input_format());
    }
    bundle.files["model.h"] = render_template(kModelHeader, {{"in_channels", std::to_string(graph.input_shape.channels)},
                                                             {"in_samples", std::to_string(graph.input_shape.samples)},
                                                             {"out_channels", std::to_string(out_shape.channels)},
                                                             {"out_samples", std::to_string(out_shape.samples)},
                                                             {"scale_factors", scale_factors},
                                                             {"helper", helper}});

    std::ostringstream model;
    model << "/* Generated inference code. */\n#include \"model.h\"\n";
    for (const auto& id : order) {
      const LayerNode& node = graph.nodes.at(id);
      if (node.kind != LayerKind::Conv1D && node.kind != LayerKind::Dense && node.kind != LayerKind::Affine) continue;
      const std::string file = "weights_" + idents.at(id) + ".h";
      bundle.files[file] = weights_header(node);
      model << "#include \"" << file << "\"\n";
    }
    model << '\n';
    for (std::size_t p = 0; p < plan.pool_count(); ++p) {
      model << "static number_t pool" << p << "[" << plan.pool_sizes[p] << "];\n";
    }
    for (const auto& id : order) {
      if (id == input_id) continue;
      model << layer_function(graph.nodes.at(id));
    }

    model << "\nvoid cnn(const number_t input[MODEL_INPUT_CHANNELS][MODEL_INPUT_SAMPLES], output_layer_type output) {\n";
    model << "  const number_t *result;\n  int i;\n";
    for (const auto& id : order) {
      if (id == input_id) continue;
      const LayerNode& node = graph.nodes.at(id);
      model << "  layer_" << idents.at(id) << "(";
      for (const auto& src : node.inputs) model << buffer_of(src, input_id) << ", ";
      model << buffer_of(id, input_id) << ");\n";
    }
    model << "  result = " << buffer_of(graph.output, input_id) << ";\n";
    model << "  for (i = 0; i < MODEL_OUTPUT_CHANNELS * MODEL_OUTPUT_SAMPLES; i++) output[i] = result[i];\n}\n";
    bundle.files["model.c"] = model.str();
    return bundle;
  }
};

}  // namespace

std::string emit_input_conversion_helper(QFormat fmt) {
  std::string expr;
  if (fmt.frac >= 0 && fmt.frac <= 30) {
    expr = "x * (1L << INPUT_SCALE_FACTOR)";
  } else if (fmt.frac < 0 && fmt.frac >= -30) {
    expr = "x / (1L << -(INPUT_SCALE_FACTOR))";
  } else {
    expr = "ldexp(x, INPUT_SCALE_FACTOR)";
  }
  return render_template(kInputHelper, {{"scaled_expr", expr}});
}

std::string emit_test_harness() { return std::string(kHarness); }

SourceBundle emit(const QuantizedModel& model, const AllocationPlan& plan) {
  Emitter emitter(model.graph, plan, &model);
  return emitter.run();
}

SourceBundle emit(const Graph& graph, const AllocationPlan& plan) {
  Emitter emitter(graph, plan, nullptr);
  return emitter.run();
}

}  // namespace nnc
