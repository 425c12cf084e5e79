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

#include <set>
#include <string>

#include <gtest/gtest.h>

#include "domainrag/codec.hpp"
#include "domainrag/errors.hpp"
#include "test_util.hpp"

namespace domainrag {
namespace {

using testing::Rng;
using testing::TempDir;

Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

TEST(Png, ImageRoundTrip) {
  Rng rng(61);
  for (int t = 0; t < 20; ++t) {
    const auto img = rng.image(rng.integer(1, 70), rng.integer(1, 70));
    EXPECT_EQ(decode_png(encode_png(img)), img);
  }
}

TEST(Png, FileRoundTrip) {
  Rng rng(62);
  TempDir dir;
  const auto img = rng.image(13, 9);
  write_png(dir / "a.png", img);
  EXPECT_EQ(read_png(dir / "a.png"), img);
  EXPECT_THROW(read_png(dir / "missing.png"), IoError);
}

TEST(Png, MaskRoundTripAndGrayDecode) {
  Rng rng(63);
  const auto mask = rng.mask(17, 11);
  const auto png = encode_mask_png(mask);
  EXPECT_EQ(decode_mask_png(png), mask);
  // A single-channel PNG decodes to RGB with the gray value in every channel.
  const auto rgb = decode_png(png);
  ASSERT_EQ(rgb.width(), 17);
  for (int y = 0; y < 11; ++y) {
    for (int x = 0; x < 17; ++x) {
      const int v = mask.at(x, y) ? 255 : 0;
      EXPECT_EQ(rgb.at(x, y, 0), v);
      EXPECT_EQ(rgb.at(x, y, 2), v);
    }
  }
}

TEST(Png, MaskRejectsNonBinaryGray) {
  ImageBuffer img(2, 1);
  img.at(0, 0, 0) = img.at(0, 0, 1) = img.at(0, 0, 2) = 128;
  EXPECT_THROW(decode_mask_png(encode_png(img)), FormatError);
}

TEST(Png, GarbageIsFormatError) {
  EXPECT_THROW(decode_png(bytes_of("not a png")), FormatError);
  EXPECT_THROW(decode_png(Bytes{}), FormatError);
  Rng rng(64);
  auto png = encode_png(rng.image(8, 8));
  png.resize(png.size() / 2);
  EXPECT_THROW(decode_png(png), FormatError);
}

TEST(Base64, KnownVectors) {
  const std::pair<std::string, std::string> cases[] = {
      {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"},
      {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, encoded] : cases) {
    EXPECT_EQ(base64_encode(bytes_of(plain)), encoded);
    EXPECT_EQ(base64_decode(encoded), bytes_of(plain));
  }
}

TEST(Base64, RoundTripAndErrors) {
  Rng rng(65);
  for (int t = 0; t < 100; ++t) {
    Bytes b(static_cast<std::size_t>(rng.integer(0, 200)));
    for (auto& x : b) x = static_cast<std::uint8_t>(rng.integer(0, 255));
    EXPECT_EQ(base64_decode(base64_encode(b)), b);
  }
  EXPECT_THROW(base64_decode("Zm9v!"), FormatError);
  EXPECT_THROW(base64_decode("Zm9"), FormatError);
}

TEST(Blake2b, KnownDigests) {
  EXPECT_EQ(to_hex(digest_of({})), "0e5751c026e543b2e8ab2eb06099daa1d1e5df47778f7787faab45cdf12fe3a8");
  EXPECT_EQ(to_hex(digest_of(bytes_of("abc"))),
            "bddd813c634239723171ef3fee98579b94964e3bb1cb3e427262c8c068d52319");
  const auto key = bytes_of("key");
  EXPECT_EQ(to_hex(Hasher(key).update(bytes_of("abc")).finish()),
            "0330531d097355a3f72e80d55c1245ccf79f1704431c6e3887938320442c23c0");
}

TEST(Blake2b, IncrementalEqualsOneShot) {
  const auto whole = bytes_of("hello, incremental world");
  Hasher h;
  h.update(std::span(whole).first(5)).update(std::span(whole).subspan(5));
  EXPECT_EQ(h.finish(), digest_of(whole));
}

TEST(ExpandDigest, CounterModeBlocks) {
  const auto seed = digest_of(bytes_of("abc"));
  EXPECT_EQ(to_hex(expand_digest(seed, 40)),
            "41cbc4cb220b0b9bc6b7a350ca57cc2ab42e8c8a3219bd48ae1fab4592b18e1d57fa051c971fcdc4");
  const auto longer = expand_digest(seed, 100);
  EXPECT_EQ(Bytes(longer.begin(), longer.begin() + 40), expand_digest(seed, 40));
  EXPECT_TRUE(expand_digest(seed, 0).empty());
}

TEST(Seeds, SplitMixReferenceSequence) {
  std::uint64_t state = 0;
  EXPECT_EQ(splitmix64(state), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(splitmix64(state), 0x6e789e6aa1b965f4ULL);
}

TEST(Seeds, MixSeedIsDeterministicAndSpreads) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 30; ++a) {
    for (std::uint64_t b = 0; b < 30; ++b) {
      EXPECT_EQ(mix_seed(a, b), mix_seed(a, b));
      seen.insert(mix_seed(a, b));
    }
  }
  EXPECT_EQ(seen.size(), 900u);
  EXPECT_NE(mix_seed(1, 2), mix_seed(2, 1));
}

}  // namespace
}  // namespace domainrag
