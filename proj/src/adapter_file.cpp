// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/adapter_file.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "road/error.hpp"

namespace road {

namespace {

constexpr std::uint8_t kMagic[4] = {'R', 'D', 'A', 'D'};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks to stay portable.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError(std::string(what) + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* field) const {
    if (remaining() < n) throw CorruptFileError(field, "file ends early");
  }

  std::uint8_t u8(const char* field) {
    need(1, field);
    return bytes_[pos_++];
  }

  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }

  double f32(const char* field) {
    const float f = std::bit_cast<float>(u32(field));
    if (!std::isfinite(f)) throw CorruptFileError(field, "non-finite value");
    return f;
  }

  std::string str(std::size_t n, const char* field) {
    need(n, field);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Structural UTF-8 check (lead/continuation bytes, no overlongs or surrogates).
bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t n = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      n = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      n = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      n = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + n >= s.size()) return false;
    for (std::size_t k = 1; k <= n; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[n] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += n + 1;
  }
  return true;
}

}  // namespace

std::vector<std::uint8_t> encode_adapters(std::span<const NamedAdapter> layers) {
  if (layers.empty()) throw PreconditionError("encode_adapters: no layers");
  const RoadVariant v = layers.front().adapter.variant();
  const std::size_t d2 = layers.front().adapter.d2();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kAdapterFileVersion);
  out.push_back(static_cast<std::uint8_t>(v));
  put_u32(out, checked_u32(d2, "d2"));
  put_u32(out, checked_u32(layers.size(), "layer_count"));
  for (const NamedAdapter& layer : layers) {
    if (layer.adapter.variant() != v || layer.adapter.d2() != d2) {
      throw DimensionError("encode_adapters: layer '" + layer.name +
                           "' differs in variant or d2 from the first layer");
    }
    if (!valid_utf8(layer.name)) {
      throw PreconditionError("encode_adapters: layer name is not valid UTF-8");
    }
    put_u32(out, checked_u32(layer.name.size(), "name_len"));
    out.insert(out.end(), layer.name.begin(), layer.name.end());
    for (double t : layer.adapter.theta()) put_f32(out, t);
    for (double a : layer.adapter.alpha()) put_f32(out, a);
  }
  put_u32(out, crc32_of(out));
  return out;
}

std::vector<NamedAdapter> decode_adapters(std::span<const std::uint8_t> bytes) {
  Reader hdr(bytes);
  for (std::uint8_t m : kMagic) {
    if (hdr.u8("magic") != m) throw CorruptFileError("magic", "expected \"RDAD\"");
  }
  const std::uint32_t version = hdr.u32("version");
  if (version != kAdapterFileVersion) {
    throw CorruptFileError("version", "unsupported version " + std::to_string(version));
  }
  if (bytes.size() < 4 + 4 + 1 + 4 + 4 + 4) throw CorruptFileError("length", "file ends early");
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  const std::uint32_t stored = tail.u32("crc");
  if (crc32_of(body) != stored) throw CorruptFileError("crc", "checksum mismatch");

  Reader rd(body);
  rd.str(8, "magic");
  const std::uint8_t tag = rd.u8("variant");
  if (tag != 1 && tag != 2 && tag != 4) {
    throw CorruptFileError("variant", "unknown variant tag " + std::to_string(tag));
  }
  const RoadVariant v = variant_from_int(tag);
  const std::uint32_t d2 = rd.u32("d2");
  if (d2 == 0 || d2 % 2 != 0) throw CorruptFileError("d2", "must be positive and even");
  const std::uint32_t count = rd.u32("layer_count");
  if (count == 0) throw CorruptFileError("layer_count", "no layers");
  const std::size_t n = angle_count(v, d2);

  std::vector<NamedAdapter> layers;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = rd.u32("name_len");
    if (name_len > rd.remaining()) throw CorruptFileError("name_len", "exceeds file size");
    std::string name = rd.str(name_len, "name");
    if (!valid_utf8(name)) throw CorruptFileError("name", "not valid UTF-8");
    rd.need(8 * n, "length");
    std::vector<double> theta(n), alpha(n);
    for (double& t : theta) t = rd.f32("theta");
    for (double& a : alpha) a = rd.f32("alpha");
    layers.push_back({std::move(name), RoadAdapter(v, d2, std::move(theta), std::move(alpha))});
  }
  if (rd.remaining() != 0) throw CorruptFileError("length", "trailing bytes after last layer");
  return layers;
}

void save_adapters(const std::filesystem::path& path, std::span<const NamedAdapter> layers) {
  const auto bytes = encode_adapters(layers);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write to '" + path.string() + "' failed");
}

std::vector<NamedAdapter> load_adapters(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path.string() + "' for reading");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                        std::istreambuf_iterator<char>());
  return decode_adapters(bytes);
}

void save_adapter(const std::filesystem::path& path, const RoadAdapter& a) {
  const NamedAdapter layer{"layer0", a};
  save_adapters(path, std::span<const NamedAdapter>(&layer, 1));
}

RoadAdapter load_adapter(const std::filesystem::path& path) {
  auto layers = load_adapters(path);
  if (layers.size() != 1) {
    throw CorruptFileError("layer_count", "expected a single layer, found " +
                                              std::to_string(layers.size()));
  }
  return std::move(layers.front().adapter);
}

RoadAdapter quantize_f32(const RoadAdapter& a) {
  std::vector<double> theta(a.theta().begin(), a.theta().end());
  std::vector<double> alpha(a.alpha().begin(), a.alpha().end());
  for (double& t : theta) t = static_cast<float>(t);
  for (double& x : alpha) x = static_cast<float>(x);
  return RoadAdapter(a.variant(), a.d2(), std::move(theta), std::move(alpha));
}

}  // namespace road
