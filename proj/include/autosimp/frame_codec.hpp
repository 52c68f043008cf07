#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "autosimp/mesh.hpp"

namespace autosimp {

/// Standard base64 (RFC 4648, padded).
std::string base64_encode(std::span<const unsigned char> bytes);
/// Throws PARSE_ERROR on characters outside the alphabet or bad padding.
std::vector<unsigned char> base64_decode(std::string_view text);

/// Densities as little-endian IEEE-754 float32, base64 encoded.
std::string encode_frame(std::span<const double> rho);
std::string encode_frame(std::span<const float> rho);
std::vector<float> decode_frame(std::string_view data);

/// {"iteration", "nx", "ny"[, "nz"], "encoding": "f32le-base64", "data"}
nlohmann::ordered_json frame_to_json(int iteration, std::span<const double> rho, const Mesh& mesh);

} // namespace autosimp
