#include "spmcsr/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace spmcsr {

namespace {

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t> &in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(in[at + std::size_t(i)]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_flo(const Flow &flow) {
  if (flow.width() > std::numeric_limits<std::int32_t>::max() ||
      flow.height() > std::numeric_limits<std::int32_t>::max()) {
    throw IoError("flow too large for .flo");
  }
  std::vector<std::uint8_t> out;
  out.reserve(12 + std::size_t(flow.u.size()) * 8);
  put_u32(out, std::bit_cast<std::uint32_t>(kFloTag));
  put_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(flow.width())));
  put_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(flow.height())));
  for (Eigen::Index y = 0; y < flow.height(); ++y)
    for (Eigen::Index x = 0; x < flow.width(); ++x) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(flow.u(y, x))));
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(flow.v(y, x))));
    }
  return out;
}

Flow decode_flo(const std::vector<std::uint8_t> &bytes) {
  if (bytes.size() < 12) throw IoError(".flo: truncated header");
  if (get_u32(bytes, 0) != std::bit_cast<std::uint32_t>(kFloTag)) throw IoError(".flo: bad tag");
  const auto w = static_cast<std::int32_t>(get_u32(bytes, 4));
  const auto h = static_cast<std::int32_t>(get_u32(bytes, 8));
  if (w < 1 || h < 1) throw IoError(".flo: invalid dimensions");
  const std::size_t expected = 12 + std::size_t(w) * std::size_t(h) * 8;
  if (bytes.size() != expected) throw IoError(".flo: payload size does not match dimensions");
  Flow flow = Flow::zeros(w, h);
  std::size_t at = 12;
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      flow.u(y, x) = std::bit_cast<float>(get_u32(bytes, at));
      flow.v(y, x) = std::bit_cast<float>(get_u32(bytes, at + 4));
      at += 8;
    }
  return flow;
}

Flow read_flo(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_flo(bytes);
  } catch (const IoError &e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_flo(const std::filesystem::path &path, const Flow &flow) {
  const auto bytes = encode_flo(flow);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace spmcsr
