// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "polarnn/channel.hpp"
#include "polarnn/decoders.hpp"
#include "polarnn/error.hpp"

using namespace polarnn;

TEST(FFunction, HandExamples) {
  for (auto v : kAllFVariants) {
    EXPECT_DOUBLE_EQ(f_function(2.0, -3.0, v), -2.0) << to_string(v);
    EXPECT_DOUBLE_EQ(f_function(3.0, 2.0, v), 2.0) << to_string(v);
    EXPECT_DOUBLE_EQ(f_function(-1.0, -2.0, v), 1.0) << to_string(v);
    for (double b : {-7.5, -1.0, 0.0, 0.25, 42.0}) EXPECT_EQ(f_function(0.0, b, v), 0.0);
  }
}

TEST(FFunction, VariantsAgreeOnRandomPairs) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 100000; ++i) {
    const double a = u(rng), b = u(rng);
    const double ref = oracle::boxplus_sign_min(a, b);
    for (auto v : kAllFVariants) ASSERT_NEAR(f_function(a, b, v), ref, 1e-12) << a << ' ' << b;
  }
}

TEST(FFunction, ParallelBatchMatchesSerialReference) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  const std::size_t n = 100003;  // crosses the parallel threshold, odd tail
  std::vector<double> a(n), b(n), s(n), p(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = u(rng), b[i] = u(rng);
  a[0] = 0.0;
  b[1] = 0.0;
  for (auto v : kAllFVariants) {
    f_batch_serial(v, a, b, s);
    f_batch(v, a, b, p);
    EXPECT_EQ(s, p) << to_string(v);
  }
  std::vector<double> short_out(n - 1);
  EXPECT_THROW(f_batch(FVariant::Relu, a, b, short_out), ParameterError);
}

TEST(GFunction, HandExamples) {
  EXPECT_DOUBLE_EQ(g_function(3.0, -1.0, -1.0), 2.0);
  EXPECT_DOUBLE_EQ(g_function(3.0, -1.0, 1.0), -4.0);
  EXPECT_DOUBLE_EQ(g_function(0.0, 5.0, -1.0), 5.0);
  EXPECT_DOUBLE_EQ(g_function(0.0, 5.0, 1.0), 5.0);
}

TEST(ScDecode, HandTrace2x1) {
  const PolarCode code(1, {1, 0});
  EXPECT_EQ(sc_decode(code, std::vector<double>{3.0, -1.0}), BitWord{0});
  EXPECT_EQ(sc_decode(code, std::vector<double>{3.0, -4.0}), BitWord{1});
  EXPECT_THROW(sc_decode(code, std::vector<double>{1.0}), ParameterError);
}

TEST(ScDecode, NoiselessRoundTripExhaustive) {
  for (auto [n, K] : {std::pair{0, 1}, {1, 1}, {1, 2}, {2, 3}, {3, 4}, {3, 7}, {4, 11}}) {
    const auto code = build_polar_code(n, static_cast<std::size_t>(K), 1.0);
    const ScDecoder sc(code);
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << K); ++v) {
      BitWord m(code.message_size());
      for (std::size_t j = 0; j < m.size(); ++j) m[j] = (v >> j) & 1U;
      const BitWord c = encode(code, m);
      std::vector<double> llr(c.size());
      for (std::size_t i = 0; i < c.size(); ++i) llr[i] = c[i] ? -2.0 : 2.0;
      ASSERT_EQ(sc.decode(llr), m) << n << "," << K << " v=" << v;
    }
  }
}

TEST(ScDecode, ZeroLlrDecodesToZero) {
  const PolarCode code(0, {0});
  EXPECT_EQ(sc_decode(code, std::vector<double>{0.0}), BitWord{0});
}

TEST(ScDecode, VariantsGiveIdenticalDecisions) {
  const auto code = build_polar_code(5, 16, 1.0);
  const double sigma = sigma_from_snr(1.0, code.rate());
  Rng rng(5);
  std::vector<ScDecoder> decs;
  for (auto v : kAllFVariants) decs.emplace_back(code, v);
  for (int t = 0; t < 3000; ++t) {
    const auto frame = make_frame(code, sigma, rng);
    const auto ref = decs[0].decode(frame.llrs);
    for (std::size_t d = 1; d < decs.size(); ++d) ASSERT_EQ(decs[d].decode(frame.llrs), ref);
  }
}

TEST(MlDecode, HandEnumeration2x2) {
  // metrics: (0,0) 4, (0,1) -4, (1,0) -6, (1,1) 6
  EXPECT_EQ(ml_decode(PolarCode(1, {0, 0}), std::vector<double>{-5.0, 1.0}), (BitWord{1, 0}));
}

TEST(MlDecode, TieGoesToSmallestMessage) {
  // All-zero LLRs: every message ties; the smallest is all zeros.
  const auto code = build_polar_code(3, 4, 1.0);
  EXPECT_EQ(ml_decode(code, std::vector<double>(8, 0.0)), BitWord(4, 0));
}

TEST(MlDecode, MatchesBruteForceOracle) {
  const auto code = build_polar_code(3, 4, 1.0);
  const MlDecoder ml(code);
  Rng rng(9);
  const double sigma = sigma_from_snr(0.0, code.rate());
  for (int t = 0; t < 2000; ++t) {
    const auto frame = make_frame(code, sigma, rng);
    double best = 1e300;
    BitWord best_m;
    for (unsigned v = 0; v < 16; ++v) {
      BitWord m(4);
      for (unsigned j = 0; j < 4; ++j) m[j] = (v >> (3 - j)) & 1U;  // ascending value order
      const auto c = oracle::multiply(expand_message(code, m), 3);
      double metric = 0.0;
      for (std::size_t i = 0; i < 8; ++i) metric += frame.llrs[i] * (2.0 * c[i] - 1.0);
      if (metric < best) best = metric, best_m = m;
    }
    ASSERT_EQ(ml.decode(frame.llrs), best_m);
  }
}

TEST(MlDecode, NoiselessAndLimits) {
  const auto code = build_polar_code(4, 11, 1.0);
  const MlDecoder ml(code);
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto frame = make_frame(code, 0.0, rng);
    ASSERT_EQ(ml.decode(frame.llrs), frame.message);
  }
  EXPECT_THROW(MlDecoder(build_polar_code(5, 21, 1.0)), ParameterError);
}

TEST(MlDecode, NeverWorseThanScOnBlocks) {
  // Block errors over common frames; ML must not lose by more than 3 sigma.
  const auto code = build_polar_code(3, 4, 1.0);
  const ScDecoder sc(code);
  const MlDecoder ml(code);
  const double sigma = sigma_from_snr(1.0, code.rate());
  Rng rng(4);
  int sc_err = 0, ml_err = 0;
  const int frames = 20000;
  for (int t = 0; t < frames; ++t) {
    const auto f = make_frame(code, sigma, rng);
    sc_err += sc.decode(f.llrs) != f.message;
    ml_err += ml.decode(f.llrs) != f.message;
  }
  const double p = static_cast<double>(sc_err) / frames;
  EXPECT_LE(ml_err, sc_err + 3.0 * std::sqrt(frames * p * (1 - p)));
  EXPECT_GT(sc_err, 0);
}
