// Copyright 2026 The domainrag Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "domainrag/codec.hpp"

#include <bit>
#include <cstring>
#include <mutex>
#include <new>

#include <png.h>
#include <sodium.h>

#include "domainrag/errors.hpp"
#include "domainrag/file_util.hpp"

namespace domainrag {
namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  });
}

crypto_generichash_state* as_state(std::array<std::uint8_t, 384>& raw) {
  static_assert(sizeof(crypto_generichash_state) <= 384);
  return std::launder(reinterpret_cast<crypto_generichash_state*>(raw.data()));
}

Bytes write_png_image(png_image& image, const void* buffer, png_int_32 stride) {
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, buffer, stride, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, buffer, stride, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

struct DecodedPng {
  int width;
  int height;
  Bytes pixels;
};

DecodedPng read_png_image(std::span<const std::uint8_t> png, png_uint_32 format, bool require_gray) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, png.data(), png.size())) {
    throw FormatError(std::string("PNG decode failed: ") + image.message);
  }
  if (require_gray && (image.format & PNG_FORMAT_FLAG_COLOR) != 0) {
    png_image_free(&image);
    throw FormatError("mask PNG must be single-channel");
  }
  if (image.width == 0 || image.height == 0 || image.width > (1u << 15) || image.height > (1u << 15)) {
    png_image_free(&image);
    throw FormatError("PNG has unsupported dimensions");
  }
  image.format = format;
  Bytes pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG decode failed: ") + image.message);
  }
  return {static_cast<int>(image.width), static_cast<int>(image.height), std::move(pixels)};
}

}  // namespace

Bytes encode_png(const ImageBuffer& image) {
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(image.width());
  desc.height = static_cast<png_uint_32>(image.height());
  desc.format = PNG_FORMAT_RGB;
  return write_png_image(desc, image.pixels().data(), 0);
}

ImageBuffer decode_png(std::span<const std::uint8_t> png) {
  auto decoded = read_png_image(png, PNG_FORMAT_RGB, false);
  return ImageBuffer(decoded.width, decoded.height, std::move(decoded.pixels));
}

ImageBuffer read_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image) {
  write_file_atomic(path, encode_png(image));
}

Bytes encode_mask_png(const BinaryMask& mask) {
  Bytes gray(mask.values().begin(), mask.values().end());
  for (auto& v : gray) v = v ? 255 : 0;
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(mask.width());
  desc.height = static_cast<png_uint_32>(mask.height());
  desc.format = PNG_FORMAT_GRAY;
  return write_png_image(desc, gray.data(), 0);
}

BinaryMask decode_mask_png(std::span<const std::uint8_t> png) {
  auto decoded = read_png_image(png, PNG_FORMAT_GRAY, true);
  for (auto& v : decoded.pixels) {
    if (v == 255) {
      v = 1;
    } else if (v != 0) {
      throw FormatError("mask PNG values must be 0 or 255");
    }
  }
  return BinaryMask(decoded.width, decoded.height, std::move(decoded.pixels));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  ensure_sodium();
  const std::size_t len = sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(len, '\0');
  sodium_bin2base64(out.data(), len, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(len - 1);  // drop terminator
  return out;
}

Bytes base64_decode(std::string_view text) {
  ensure_sodium();
  Bytes out(text.size() / 4 * 3 + 3);
  std::size_t written = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), "\r\n ", &written, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size()) {
    throw FormatError("malformed base64 payload");
  }
  out.resize(written);
  return out;
}

Hasher::Hasher(std::span<const std::uint8_t> key) {
  ensure_sodium();
  if (key.size() > crypto_generichash_KEYBYTES_MAX) key = key.first(crypto_generichash_KEYBYTES_MAX);
  crypto_generichash_init(as_state(state_), key.empty() ? nullptr : key.data(), key.size(), 32);
}

Hasher::~Hasher() { sodium_memzero(state_.data(), state_.size()); }

Hasher& Hasher::update(std::span<const std::uint8_t> bytes) {
  crypto_generichash_update(as_state(state_), bytes.data(), bytes.size());
  return *this;
}

Hasher& Hasher::update(std::string_view text) {
  update_u64(text.size());
  return update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                              text.size()));
}

Hasher& Hasher::update_u64(std::uint64_t value) {
  std::array<std::uint8_t, 8> le{};
  for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return update(le);
}

Hasher& Hasher::update_f64(double value) { return update_u64(std::bit_cast<std::uint64_t>(value)); }

Digest Hasher::finish() {
  Digest out{};
  crypto_generichash_final(as_state(state_), out.data(), out.size());
  return out;
}

Digest digest_of(std::span<const std::uint8_t> bytes) { return Hasher().update(bytes).finish(); }

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

Bytes expand_digest(const Digest& seed, std::size_t count) {
  Bytes out;
  out.reserve(count + 32);
  for (std::uint64_t block = 0; out.size() < count; ++block) {
    const Digest d = Hasher(seed).update_u64(block).finish();
    out.insert(out.end(), d.begin(), d.end());
  }
  out.resize(count);
  return out;
}

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t state = a;
  const std::uint64_t first = splitmix64(state);
  state = first ^ b;
  return splitmix64(state);
}

}  // namespace domainrag
