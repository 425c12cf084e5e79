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

// Byte-level codecs: PNG images and masks, base64, BLAKE2b digests and seed
// mixing.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "domainrag/geometry.hpp"

namespace domainrag {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

// PNG (lossless). Decoding accepts any PNG colour type and converts to RGB.
// Throws FormatError on undecodable input.
Bytes encode_png(const ImageBuffer& image);
ImageBuffer decode_png(std::span<const std::uint8_t> png);
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& image);

// Masks travel as single-channel 8-bit PNG with values {0, 255}.
Bytes encode_mask_png(const BinaryMask& mask);
BinaryMask decode_mask_png(std::span<const std::uint8_t> png);

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws FormatError on malformed input.
Bytes base64_decode(std::string_view text);

// Incremental keyed BLAKE2b-256.
class Hasher {
 public:
  explicit Hasher(std::span<const std::uint8_t> key = {});
  ~Hasher();
  Hasher(const Hasher&) = delete;
  Hasher& operator=(const Hasher&) = delete;

  Hasher& update(std::span<const std::uint8_t> bytes);
  Hasher& update(std::string_view text);
  Hasher& update_u64(std::uint64_t value);
  Hasher& update_f64(double value);
  Digest finish();

 private:
  alignas(64) std::array<std::uint8_t, 384> state_{};
};

Digest digest_of(std::span<const std::uint8_t> bytes);
std::string to_hex(std::span<const std::uint8_t> bytes);

// Expands a digest into `count` pseudo-random bytes (counter-mode BLAKE2b).
Bytes expand_digest(const Digest& seed, std::size_t count);

std::uint64_t splitmix64(std::uint64_t& state) noexcept;
// Combines two values into a well-mixed 64-bit seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace domainrag
