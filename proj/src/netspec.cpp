#include "binplan/netspec.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace binplan {

using nlohmann::json;

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::deconv:
      return "deconv";
    case LayerKind::conv:
      return "conv";
    case LayerKind::dense:
      return "dense";
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view text) {
  if (text == "deconv") return LayerKind::deconv;
  if (text == "conv") return LayerKind::conv;
  if (text == "dense") return LayerKind::dense;
  throw ContractViolation("unknown layer kind '" + std::string(text) + "'");
}

Index LayerSpec::h_o() const {
  switch (kind) {
    case LayerKind::deconv:
      return (h_i - 1) * stride + h_k - 2 * padding + output_padding;
    case LayerKind::conv:
      return h_i + 2 * padding < h_k ? 0 : (h_i + 2 * padding - h_k) / stride + 1;
    case LayerKind::dense:
      return 1;
  }
  return 0;
}

Index LayerSpec::w_o() const {
  switch (kind) {
    case LayerKind::deconv:
      return (w_i - 1) * stride + w_k - 2 * padding + output_padding;
    case LayerKind::conv:
      return w_i + 2 * padding < w_k ? 0 : (w_i + 2 * padding - w_k) / stride + 1;
    case LayerKind::dense:
      return 1;
  }
  return 0;
}

Index LayerSpec::multiply_count() const {
  switch (kind) {
    case LayerKind::deconv:
      return s_i() * c_i * r_o();
    case LayerKind::conv:
      return h_o() * w_o() * c_o * h_k * w_k * c_i;
    case LayerKind::dense:
      return c_i * c_o;
  }
  return 0;
}

DeconvGeometry LayerSpec::deconv_geometry() const {
  if (kind != LayerKind::deconv)
    throw ContractViolation("layer '" + name + "' is " + std::string(to_string(kind)) + ", not deconv");
  return DeconvGeometry{c_i, c_o, h_i, w_i, h_k, w_k, stride, padding, output_padding};
}

const LayerSpec& NetworkSpec::layer(int number) const {
  if (number < 1 || number > layer_count())
    throw ContractViolation("layer number " + std::to_string(number) + " out of range 1.." +
                            std::to_string(layer_count()));
  return layers[static_cast<std::size_t>(number - 1)];
}

ScatterMap im2col_output(const LayerSpec& layer) { return im2col_output(layer.deconv_geometry()); }

void validate(const LayerSpec& l) {
  const auto positive = [&](const char* field, Index v) {
    if (v < 1) throw ValidationError("positive-dimension", l.name, std::string(field) + " = " + std::to_string(v));
  };
  if (l.name.empty()) throw ValidationError("named-layer", "", "layer name must be non-empty");
  positive("c_i", l.c_i);
  positive("c_o", l.c_o);
  positive("h_i", l.h_i);
  positive("w_i", l.w_i);
  positive("h_k", l.h_k);
  positive("w_k", l.w_k);
  positive("stride", l.stride);
  if (l.padding < 0) throw ValidationError("non-negative-padding", l.name, "padding = " + std::to_string(l.padding));
  if (l.output_padding < 0 || (l.output_padding > 0 && l.output_padding >= l.stride))
    throw ValidationError("output-padding-below-stride", l.name,
                          "output_padding = " + std::to_string(l.output_padding) + " with stride " +
                              std::to_string(l.stride));
  if (l.output_padding > 0 && l.kind != LayerKind::deconv)
    throw ValidationError("output-padding-deconv-only", l.name, "output_padding is only meaningful for deconv");
  if (l.kind == LayerKind::dense && (l.h_i != 1 || l.w_i != 1 || l.h_k != 1 || l.w_k != 1 || l.stride != 1 ||
                                     l.padding != 0))
    throw ValidationError("dense-unit-geometry", l.name, "dense layers use h_i = w_i = h_k = w_k = stride = 1, padding 0");
  if (l.h_o() < 1 || l.w_o() < 1)
    throw ValidationError("positive-output", l.name,
                          "computed output " + std::to_string(l.h_o()) + "x" + std::to_string(l.w_o()));
}

void validate(const NetworkSpec& net) {
  if (net.layers.empty()) throw ValidationError("non-empty-network", "", "network '" + net.name + "' has no layers");
  if (net.latent_dim && *net.latent_dim < 1)
    throw ValidationError("positive-latent-dim", "", "latent_dim = " + std::to_string(*net.latent_dim));
  std::set<std::string> names;
  for (const auto& l : net.layers) {
    validate(l);
    if (!names.insert(l.name).second) throw ValidationError("unique-layer-names", l.name, "duplicate layer name");
  }
  for (std::size_t k = 0; k + 1 < net.layers.size(); ++k) {
    const auto& a = net.layers[k];
    const auto& b = net.layers[k + 1];
    const std::string pair = "'" + a.name + "' -> '" + b.name + "'";
    const Index out_size = a.c_o * a.h_o() * a.w_o();
    const Index in_size = b.c_i * b.h_i * b.w_i;
    if (a.kind == LayerKind::dense || b.kind == LayerKind::dense) {
      if (out_size != in_size)
        throw ValidationError("chained-size", b.name,
                              pair + ": output size " + std::to_string(out_size) + " != input size " +
                                  std::to_string(in_size));
      continue;
    }
    if (a.c_o != b.c_i)
      throw ValidationError("chained-channels", b.name,
                            pair + ": c_o " + std::to_string(a.c_o) + " != c_i " + std::to_string(b.c_i));
    if (a.h_o() != b.h_i || a.w_o() != b.w_i)
      throw ValidationError("chained-spatial", b.name,
                            pair + ": output " + std::to_string(a.h_o()) + "x" + std::to_string(a.w_o()) +
                                " != input " + std::to_string(b.h_i) + "x" + std::to_string(b.w_i));
  }
}

namespace {

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1;
  int column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

const std::set<std::string> kTopKeys = {"format", "name", "latent_dim", "layers"};
const std::set<std::string> kLayerKeys = {"name", "kind",   "c_i",     "c_o",            "h_i",
                                          "w_i",  "h_k",    "w_k",     "stride",         "padding",
                                          "output_padding", "binarizable_hint"};

Index read_count(const json& obj, const char* key, const std::string& layer, std::optional<Index> fallback = {}) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (fallback) return *fallback;
    throw ValidationError("required-field", layer, std::string("missing '") + key + "'");
  }
  if (!it->is_number_integer())
    throw ValidationError("integer-field", layer, std::string("'") + key + "' must be an integer");
  return it->get<Index>();
}

std::string read_string(const json& obj, const char* key, const std::string& layer) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError("required-field", layer, std::string("missing '") + key + "'");
  if (!it->is_string()) throw ValidationError("string-field", layer, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

LayerSpec read_layer(const json& obj, std::size_t position) {
  const std::string where = "#" + std::to_string(position + 1);
  if (!obj.is_object()) throw ValidationError("layer-object", where, "layer entries must be objects");
  for (const auto& [key, value] : obj.items())
    if (!kLayerKeys.contains(key)) throw ValidationError("known-fields", where, "unknown field '" + key + "'");
  LayerSpec l;
  l.name = read_string(obj, "name", where);
  const std::string& id = l.name.empty() ? where : l.name;
  try {
    l.kind = parse_layer_kind(read_string(obj, "kind", id));
  } catch (const ContractViolation& e) {
    throw ValidationError("layer-kind", id, e.what());
  }
  l.c_i = read_count(obj, "c_i", id);
  l.c_o = read_count(obj, "c_o", id);
  l.h_i = read_count(obj, "h_i", id);
  l.w_i = read_count(obj, "w_i", id);
  l.h_k = read_count(obj, "h_k", id);
  l.w_k = read_count(obj, "w_k", id);
  l.stride = read_count(obj, "stride", id);
  l.padding = read_count(obj, "padding", id);
  l.output_padding = read_count(obj, "output_padding", id, Index{0});
  if (const auto it = obj.find("binarizable_hint"); it != obj.end()) {
    if (!it->is_boolean()) throw ValidationError("boolean-field", id, "'binarizable_hint' must be a boolean");
    l.binarizable_hint = it->get<bool>();
  }
  return l;
}

}  // namespace

NetworkSpec parse_network(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("JSON syntax error", line, column);
  }
  if (!doc.is_object()) throw ValidationError("top-level-object", "", "document must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!kTopKeys.contains(key)) throw ValidationError("known-fields", "", "unknown top-level field '" + key + "'");
  const std::string format = read_string(doc, "format", "");
  if (format != kNetworkFormat)
    throw ValidationError("format-version", "", "expected \"" + std::string(kNetworkFormat) + "\", got \"" + format + "\"");

  NetworkSpec net;
  net.name = read_string(doc, "name", "");
  if (doc.contains("latent_dim")) net.latent_dim = read_count(doc, "latent_dim", "");
  const auto layers = doc.find("layers");
  if (layers == doc.end() || !layers->is_array())
    throw ValidationError("required-field", "", "'layers' must be an array");
  for (std::size_t k = 0; k < layers->size(); ++k) net.layers.push_back(read_layer((*layers)[k], k));
  validate(net);
  return net;
}

NetworkSpec load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("cannot open network file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_network(buffer.str());
}

std::string emit_network(const NetworkSpec& net) {
  json doc;
  doc["format"] = kNetworkFormat;
  doc["name"] = net.name;
  if (net.latent_dim) doc["latent_dim"] = *net.latent_dim;
  doc["layers"] = json::array();
  for (const auto& l : net.layers) {
    json layer = {{"name", l.name},   {"kind", to_string(l.kind)}, {"c_i", l.c_i},
                  {"c_o", l.c_o},     {"h_i", l.h_i},              {"w_i", l.w_i},
                  {"h_k", l.h_k},     {"w_k", l.w_k},              {"stride", l.stride},
                  {"padding", l.padding}, {"output_padding", l.output_padding}};
    if (l.binarizable_hint) layer["binarizable_hint"] = *l.binarizable_hint;
    doc["layers"].push_back(std::move(layer));
  }
  return doc.dump(2) + "\n";
}

}  // namespace binplan
