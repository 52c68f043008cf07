#include "autosimp/frame_codec.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>

#include "autosimp/errors.hpp"

namespace autosimp {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr std::array<int, 256> make_reverse() {
  std::array<int, 256> r{};
  for (auto& v : r) v = -1;
  for (int i = 0; i < 64; ++i) r[static_cast<unsigned char>(kAlphabet[i])] = i;
  return r;
}

constexpr auto kReverse = make_reverse();

void put_f32le(std::vector<unsigned char>& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

} // namespace

std::string base64_encode(std::span<const unsigned char> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<unsigned char> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::parse_error, "base64 length is not a multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      int d;
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) throw Error(ErrorCode::parse_error, "misplaced base64 padding");
        ++pad;
        d = 0;
      } else {
        if (pad) throw Error(ErrorCode::parse_error, "misplaced base64 padding");
        d = kReverse[static_cast<unsigned char>(c)];
        if (d < 0) throw Error(ErrorCode::parse_error, "invalid base64 character at " + std::to_string(i + k));
      }
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<unsigned char>(v >> 16));
    if (pad < 2) out.push_back(static_cast<unsigned char>(v >> 8));
    if (pad < 1) out.push_back(static_cast<unsigned char>(v));
  }
  return out;
}

std::string encode_frame(std::span<const double> rho) {
  std::vector<unsigned char> bytes;
  bytes.reserve(rho.size() * 4);
  for (double r : rho) put_f32le(bytes, static_cast<float>(r));
  return base64_encode(bytes);
}

std::string encode_frame(std::span<const float> rho) {
  std::vector<unsigned char> bytes;
  bytes.reserve(rho.size() * 4);
  for (float r : rho) put_f32le(bytes, r);
  return base64_encode(bytes);
}

std::vector<float> decode_frame(std::string_view data) {
  const auto bytes = base64_decode(data);
  if (bytes.size() % 4 != 0) throw Error(ErrorCode::parse_error, "frame byte count is not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(bytes[4 * i + k]) << (8 * k);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

nlohmann::ordered_json frame_to_json(int iteration, std::span<const double> rho, const Mesh& mesh) {
  nlohmann::ordered_json j;
  j["iteration"] = iteration;
  j["nx"] = mesh.nx;
  j["ny"] = mesh.ny;
  if (mesh.solid) j["nz"] = mesh.nz;
  j["encoding"] = "f32le-base64";
  j["data"] = encode_frame(rho);
  return j;
}

} // namespace autosimp
