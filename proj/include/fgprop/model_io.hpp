#pragma once

#include "fgprop/network.hpp"

#include <filesystem>
#include <iosfwd>

namespace fgprop {

inline constexpr int kModelFormatVersion = 1;

// Model file: one line of UTF-8 JSON describing the layer graph, a newline,
// then every affine layer's weights (row-major) followed by its bias as
// little-endian float32, in layer order.
void write_model(std::ostream& out, const Network& net);
Network read_model(std::istream& in);

void save_model(const Network& net, const std::filesystem::path& path);
Network load_model(const std::filesystem::path& path);

}  // namespace fgprop
