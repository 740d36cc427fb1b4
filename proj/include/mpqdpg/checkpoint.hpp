// Binary network checkpoints (little-endian).
//
//   header:  "MPQDPG01"
//            u32 network_count
//            per network: u32 layer_count
//                         per layer: u32 in_width, u32 out_width, u32 activation
//   payload: per network, per layer: out*in f64 weights (row-major), out f64 biases
//
// Optimizer state is not stored.
#pragma once

#include "mpqdpg/neural.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace mpqdpg::nn {

inline constexpr std::string_view kCheckpointMagic = "MPQDPG01";

void write_checkpoint(std::ostream& out, std::span<const MlpNetwork> nets);

/// Throws FormatError on bad magic, unknown activation or truncation.
std::vector<MlpNetwork> read_checkpoint(std::istream& in);

/// Path variants; I/O failures raise IoError naming the path.
void save_checkpoint(const std::filesystem::path& path, std::span<const MlpNetwork> nets);
std::vector<MlpNetwork> load_checkpoint(const std::filesystem::path& path);

}  // namespace mpqdpg::nn
