#include "fgprop/model_io.hpp"

#include "binary_io.hpp"
#include "fgprop/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace fgprop {

namespace {

using nlohmann::json;

const char* kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kAffine:
      return "affine";
    case LayerKind::kRelu:
      return "relu";
    case LayerKind::kAdd:
      return "add";
  }
  return "?";
}

}  // namespace

void write_model(std::ostream& out, const Network& net) {
  json layers = json::array();
  std::size_t floats = 0;
  for (const auto& layer : net.layers()) {
    layers.push_back({{"id", layer.id},
                      {"kind", kind_name(layer.kind)},
                      {"inputs", layer.inputs},
                      {"in_dim", layer.in_dim},
                      {"out_dim", layer.out_dim}});
    if (layer.kind == LayerKind::kAffine) floats += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  const json header = {{"format", "fgprop-model"},
                       {"version", kModelFormatVersion},
                       {"input_dim", net.input_dim()},
                       {"layers", layers},
                       {"blob_floats", floats}};
  out << header.dump() << '\n';
  for (const auto& layer : net.layers()) {
    if (layer.kind != LayerKind::kAffine) continue;
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) detail::write_f32(out, layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) detail::write_f32(out, layer.bias[r]);
  }
}

Network read_model(std::istream& in) {
  json header;
  try {
    header = json::parse(detail::read_header_line(in));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model manifest: ") + e.what());
  }

  try {
    if (header.at("format").get<std::string>() != "fgprop-model") throw FormatError("not a model file");
    const int version = header.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw FormatError("model format version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kModelFormatVersion) + ")");
    }
    Network net(header.at("input_dim").get<int>());
    std::size_t declared = 0;
    for (const auto& entry : header.at("layers")) {
      const auto kind = entry.at("kind").get<std::string>();
      const auto inputs = entry.at("inputs").get<std::vector<int>>();
      const int out_dim = entry.at("out_dim").get<int>();
      const int expected_id = net.size();
      if (entry.at("id").get<int>() != expected_id) throw FormatError("layer ids are not in topological order");
      if (kind == "affine") {
        if (inputs.size() != 1) throw FormatError("affine layer needs exactly one input");
        const int in_dim = net.dim_of(inputs[0]);
        if (entry.at("in_dim").get<int>() != in_dim) throw FormatError("affine in_dim disagrees with topology");
        net.add_affine(inputs[0], Matrix::Zero(out_dim, in_dim), Vector::Zero(out_dim));
        declared += static_cast<std::size_t>(out_dim) * (in_dim + 1);
      } else if (kind == "relu") {
        if (inputs.size() != 1) throw FormatError("relu layer needs exactly one input");
        net.add_relu(inputs[0]);
      } else if (kind == "add") {
        if (inputs.size() != 2) throw FormatError("add layer needs exactly two inputs");
        net.add_add(inputs[0], inputs[1]);
      } else {
        throw FormatError("unknown layer kind '" + kind + "'");
      }
      if (net.layers().back().out_dim != out_dim) throw FormatError("layer out_dim disagrees with topology");
    }
    if (header.contains("blob_floats") && header.at("blob_floats").get<std::size_t>() != declared) {
      throw FormatError("manifest blob size disagrees with its layers");
    }

    for (int id = 0; id < net.size(); ++id) {
      Layer& layer = net.mutable_layer(id);
      if (layer.kind != LayerKind::kAffine) continue;
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = detail::read_f32(in);
      }
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = detail::read_f32(in);
    }
    detail::expect_end(in, "model");
    return net;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model manifest: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent model manifest: ") + e.what());
  } catch (const GraphError& e) {
    throw FormatError(std::string("inconsistent model manifest: ") + e.what());
  } catch (const LookupError& e) {
    throw FormatError(std::string("inconsistent model manifest: ") + e.what());
  }
}

void save_model(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_model(out, net);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

Network load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model '" + path.string() + "'");
  return read_model(in);
}

}  // namespace fgprop
