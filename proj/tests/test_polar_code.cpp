// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "polarnn/error.hpp"
#include "polarnn/polar_code.hpp"

using namespace polarnn;

namespace {

BitWord bits_of(std::uint64_t v, std::size_t k) {
  BitWord m(k);
  for (std::size_t j = 0; j < k; ++j) m[j] = (v >> j) & 1U;
  return m;
}

}  // namespace

TEST(BuildPolarCode, TrivialCodes) {
  const auto c11 = build_polar_code(0, 1, 0.0);
  EXPECT_EQ(c11.mask_string(), "0");
  for (double snr : {-5.0, 0.0, 1.0, 10.0}) {
    const auto c21 = build_polar_code(1, 1, snr);
    EXPECT_EQ(c21.mask_string(), "10") << snr;
  }
}

TEST(BuildPolarCode, GoldenMask16x11At1dB) {
  // Pinned from an independent script evaluating the same recursion.
  const auto code = build_polar_code(4, 11, 1.0);
  EXPECT_EQ(code.mask_string(), "1110100010000000");
  EXPECT_EQ(code.message_size(), 11u);
  const auto [l, r] = split(code);
  EXPECT_EQ(l.mask_string(), "11101000");  // (8,4)
  EXPECT_EQ(r.mask_string(), "10000000");  // (8,7)
}

TEST(BuildPolarCode, Deterministic) {
  for (int n = 0; n <= 7; ++n)
    for (std::size_t K = 0; K <= (std::size_t{1} << n); K += 3)
      EXPECT_EQ(build_polar_code(n, K, 2.5).frozen(), build_polar_code(n, K, 2.5).frozen());
}

TEST(BuildPolarCode, RejectsOversizedK) {
  EXPECT_THROW(build_polar_code(2, 5, 1.0), ParameterError);
  EXPECT_THROW(PolarCode(2, {0, 1, 0}), ParameterError);
}

TEST(Encode, WorkedExample4x3) {
  const PolarCode code(2, {1, 0, 0, 0});
  EXPECT_EQ(encode(code, BitWord{1, 0, 1}), (BitWord{0, 0, 1, 1}));
  EXPECT_EQ(encode(code, BitWord{0, 0, 0}), (BitWord{0, 0, 0, 0}));
  EXPECT_EQ(encode(PolarCode(0, {0}), BitWord{1}), BitWord{1});
  EXPECT_THROW(encode(code, BitWord{1, 0}), ParameterError);
}

TEST(Encode, MatchesGeneratorMatrixOracle) {
  std::mt19937_64 rng(11);
  for (int n = 0; n <= 7; ++n) {
    const std::size_t N = std::size_t{1} << n;
    for (std::size_t K : {std::size_t{0}, N / 2, N}) {
      const auto code = build_polar_code(n, K, 1.0);
      for (int t = 0; t < 50; ++t) {
        BitWord m(K);
        for (auto& b : m) b = rng() & 1U;
        EXPECT_EQ(encode(code, m), oracle::multiply(expand_message(code, m), n));
      }
    }
  }
}

TEST(Encode, LinearAndButterflyExhaustive) {
  for (auto [n, K] : {std::pair{2, 3}, {3, 4}, {3, 7}, {4, 11}}) {
    const auto code = build_polar_code(n, static_cast<std::size_t>(K), 1.0);
    const auto [left, right] = split(code);
    const std::size_t h = code.length() / 2;
    const std::uint64_t count = std::uint64_t{1} << K;
    for (std::uint64_t a = 0; a < count; ++a) {
      const BitWord ma = bits_of(a, code.message_size());
      const BitWord ca = encode(code, ma);
      // linearity against a fixed partner
      const BitWord mb = bits_of(a * 2654435761U % count, code.message_size());
      BitWord mx(ma.size());
      for (std::size_t j = 0; j < ma.size(); ++j) mx[j] = ma[j] ^ mb[j];
      const BitWord cb = encode(code, mb), cx = encode(code, mx);
      for (std::size_t i = 0; i < ca.size(); ++i) ASSERT_EQ(cx[i], ca[i] ^ cb[i]);
      // butterfly: first half = enc(left) ^ enc(right), second half = enc(right)
      const BitWord ml(ma.begin(), ma.begin() + static_cast<long>(left.message_size()));
      const BitWord mr(ma.begin() + static_cast<long>(left.message_size()), ma.end());
      const BitWord el = encode(left, ml), er = encode(right, mr);
      for (std::size_t i = 0; i < h; ++i) {
        ASSERT_EQ(ca[i], el[i] ^ er[i]);
        ASSERT_EQ(ca[h + i], er[i]);
      }
    }
  }
}

TEST(Split, WorkedExamples) {
  const PolarCode c43(2, {1, 0, 0, 0});
  const auto [l, r] = split(c43);
  EXPECT_EQ(l.mask_string(), "10");
  EXPECT_EQ(l.message_size(), 1u);
  EXPECT_EQ(r.message_size(), 2u);

  const auto c128 = build_polar_code(7, 64, 1.0);
  const auto [l128, r128] = split(c128);
  EXPECT_EQ(l128.length(), 64u);
  EXPECT_EQ(r128.length(), 64u);
  EXPECT_EQ(l128.message_size() + r128.message_size(), 64u);

  const PolarCode c20(1, {1, 1});
  const auto [a, b] = split(c20);
  EXPECT_EQ(a.message_size(), 0u);
  EXPECT_EQ(b.message_size(), 0u);

  EXPECT_THROW(split(PolarCode(0, {0})), ParameterError);
}

TEST(XorSubsets, SmallCodes) {
  EXPECT_EQ(xor_subsets(PolarCode(1, {1, 0})), (XorSubsets{{0}, {0}}));
  EXPECT_EQ(xor_subsets(PolarCode(1, {0, 0})), (XorSubsets{{0, 1}, {1}}));
  for (const auto& s : xor_subsets(PolarCode(3, std::vector<std::uint8_t>(8, 1))))
    EXPECT_TRUE(s.empty());
}

TEST(XorSubsets, ReproduceEncodeExhaustively) {
  for (auto [n, K] : {std::pair{2, 3}, {3, 4}, {4, 11}, {5, 10}}) {
    const auto code = build_polar_code(n, static_cast<std::size_t>(K), 0.5);
    const auto subsets = xor_subsets(code);
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << K); ++v) {
      const BitWord m = bits_of(v, code.message_size());
      const BitWord c = encode(code, m);
      for (std::size_t j = 0; j < c.size(); ++j) {
        std::uint8_t x = 0;
        for (auto i : subsets[j]) x ^= m[i];
        ASSERT_EQ(c[j], x);
      }
    }
  }
}

TEST(Descriptor, RoundTrip) {
  const auto code = build_polar_code(4, 11, 1.25);
  const auto text = to_descriptor(code);
  EXPECT_EQ(text, "n=4 K=11 design_snr_db=1.25 frozen=1110100010000000");
  const auto back = parse_descriptor(text);
  EXPECT_EQ(back, code);
  EXPECT_EQ(back.design_snr_db(), 1.25);
  EXPECT_THROW(parse_descriptor("n=2 K=1 frozen=1000"), FormatError);
  EXPECT_THROW(parse_descriptor("n=2 frozen=10x0"), FormatError);
}
