#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "handover/error.hpp"
#include "handover/raster.hpp"
#include "handover/scene_io.hpp"

namespace handover {

namespace png_detail {

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t n,
                           std::uint32_t crc = 0xffffffffu) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
  return crc;
}

inline std::uint32_t crc32_final(const std::vector<std::uint8_t>& data) {
  return crc32(data.data(), data.size()) ^ 0xffffffffu;
}

inline std::uint32_t adler32(const std::vector<std::uint8_t>& data) {
  std::uint32_t a = 1, b = 0;
  for (std::uint8_t byte : data) {
    a = (a + byte) % 65521u;
    b = (b + a) % 65521u;
  }
  return (b << 16) | a;
}

inline void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                         const std::vector<std::uint8_t>& payload) {
  put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
  std::vector<std::uint8_t> body(type, type + 4);
  body.insert(body.end(), payload.begin(), payload.end());
  out.insert(out.end(), body.begin(), body.end());
  put_u32_be(out, crc32_final(body));
}

// zlib stream holding only stored (uncompressed) deflate blocks. Output is
// byte-deterministic: fixed 0x78 0x01 header, 65535-byte block framing,
// Adler-32 trailer.
inline std::vector<std::uint8_t> zlib_stored(const std::vector<std::uint8_t>& raw) {
  std::vector<std::uint8_t> out;
  out.push_back(0x78);
  out.push_back(0x01);
  std::size_t pos = 0;
  do {
    std::size_t len = std::min<std::size_t>(raw.size() - pos, 65535);
    bool final_block = pos + len == raw.size();
    out.push_back(final_block ? 1 : 0);  // BFINAL, BTYPE=00
    out.push_back(static_cast<std::uint8_t>(len & 0xff));
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.push_back(static_cast<std::uint8_t>(~len & 0xff));
    out.push_back(static_cast<std::uint8_t>((~len >> 8) & 0xff));
    out.insert(out.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos),
               raw.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  } while (pos < raw.size());
  put_u32_be(out, adler32(raw));
  return out;
}

}  // namespace png_detail

inline std::vector<std::uint8_t> encode_png_rgb8(const Image& img) {
  require(img.width > 0 && img.height > 0, errc::invalid_argument, "empty image");
  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

  std::vector<std::uint8_t> ihdr;
  png_detail::put_u32_be(ihdr, static_cast<std::uint32_t>(img.width));
  png_detail::put_u32_be(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor RGB
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  png_detail::append_chunk(out, "IHDR", ihdr);

  // filter byte 0 (None) in front of every scanline
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (1 + 3 * static_cast<std::size_t>(img.width)));
  for (int v = 0; v < img.height; ++v) {
    raw.push_back(0);
    const std::uint8_t* row = img.data.data() + 3 * static_cast<std::size_t>(v) * img.width;
    raw.insert(raw.end(), row, row + 3 * static_cast<std::size_t>(img.width));
  }
  png_detail::append_chunk(out, "IDAT", png_detail::zlib_stored(raw));
  png_detail::append_chunk(out, "IEND", {});
  return out;
}

inline void write_png_rgb8(const Image& img, const std::filesystem::path& path) {
  io_detail::write_file_bytes(path, encode_png_rgb8(img));
}

}  // namespace handover
