#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hsirecon/autodiff.hpp"
#include "hsirecon/io.hpp"

namespace hsirecon::io {

inline constexpr std::uint8_t kCheckpointVersion = 1;

/// Named-parameter container:
///   "HSCK" | u8 version | u8 dtype | u16 reserved
///   u32 config length | config text (key = value lines)
///   u32 parameter count, then per parameter:
///     u16 name length | name | u8 rank | rank x u32 dims | payload
/// Integers and floats are little-endian; parameters keep store order.
struct Checkpoint {
    Dtype dtype = Dtype::f64;
    std::string config;
    std::vector<std::pair<std::string, Tensor>> params;
};

Checkpoint capture(const ad::ParamStore& store, std::string config, Dtype dtype = Dtype::f64);

/// Copies values into an existing store. Every stored parameter must exist
/// with an identical shape, and every store entry must be covered.
void restore(ad::ParamStore& store, const Checkpoint& ck);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hsirecon::io
