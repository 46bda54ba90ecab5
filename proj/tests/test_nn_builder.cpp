// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "polarnn/channel.hpp"
#include "polarnn/decoders.hpp"
#include "polarnn/error.hpp"
#include "polarnn/nn_builder.hpp"

using namespace polarnn;

namespace {

std::vector<double> vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector run(const LayerBlueprint& bp, const std::vector<double>& in) {
  NeuralDecoder net;
  net.input_dim = bp.layer.inputs();
  net.output_dim = bp.layer.outputs();
  net.layers.push_back(bp.layer);
  return bp.readout.apply(forward(net, in));
}

}  // namespace

TEST(TrivialDecoder, RampSigns) {
  const BuildOptions opt{.l_max = 20.0, .eps = 0.01};
  const auto net = trivial_decoder(PolarCode(0, {0}), opt);
  EXPECT_EQ(net.layers.size(), 2u);
  EXPECT_DOUBLE_EQ(forward(net, std::vector<double>{2.0})[0], -1.0);
  EXPECT_DOUBLE_EQ(forward(net, std::vector<double>{-2.0})[0], 1.0);
  EXPECT_EQ(harden(vec(forward(net, std::vector<double>{0.0}))), BitWord{0});
}

TEST(TrivialDecoder, SweepStaysInRangeAndSaturates) {
  const BuildOptions opt{.l_max = 20.0, .eps = 1e-3};
  const auto net = trivial_decoder(PolarCode(0, {0}), opt);
  for (int i = -40000; i <= 40000; ++i) {
    const double llr = i * 5e-6;
    const double out = forward(net, std::vector<double>{llr})[0];
    ASSERT_LE(std::abs(out), 1.0 + 1e-12);
    if (llr >= opt.eps) ASSERT_NEAR(out, -1.0, 1e-12) << llr;
    if (llr <= -opt.eps) ASSERT_NEAR(out, 1.0, 1e-12) << llr;
    if (std::abs(llr) < opt.eps) ASSERT_NEAR(out, -llr / opt.eps, 1e-9);
  }
}

TEST(TrivialDecoder, FrozenAndErrors) {
  const auto net = trivial_decoder(PolarCode(0, {1}));
  EXPECT_EQ(net.output_dim, 0u);
  EXPECT_EQ(net.layers.size(), 1u);
  EXPECT_EQ(forward(net, std::vector<double>{3.0}).size(), 0);
  EXPECT_THROW(trivial_decoder(PolarCode(1, {1, 0})), ParameterError);
}

TEST(PropagationBlock, ComputesLeftLlrs) {
  const auto bp = propagation_block(4, 20.0);
  EXPECT_EQ(bp.layer.outputs(), 8u);
  const Vector out = run(bp, {3.0, -1.0, 2.0, -2.0});
  EXPECT_DOUBLE_EQ(out[0], 2.0);   // f(3, 2)
  EXPECT_DOUBLE_EQ(out[1], 1.0);   // f(-1, -2)
  for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(out[2 + j], (std::vector<double>{3, -1, 2, -2})[j]);

  const Vector zero = run(bp, {0, 0, 0, 0});
  EXPECT_EQ(zero.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(propagation_block(3), ParameterError);
}

TEST(PropagationBlock, MatchesFAndPreservesOnRandomInputs) {
  std::mt19937_64 rng(1);
  const double L = 20.0;
  std::uniform_real_distribution<double> u(-L, L);
  for (std::size_t N : {2u, 4u, 8u, 16u}) {
    const auto bp = propagation_block(N, L);
    std::size_t preserved = 0;
    for (const auto& s : bp.slots) preserved += s.kind == SlotKind::Preserved;
    EXPECT_EQ(preserved, N);
    EXPECT_EQ(bp.layer.outputs(), 2 * N);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> x(N);
      for (auto& v : x) v = u(rng);
      const Vector out = run(bp, x);
      for (std::size_t i = 0; i < N / 2; ++i)
        ASSERT_NEAR(out[static_cast<Eigen::Index>(i)], oracle::boxplus_sign_min(x[i], x[i + N / 2]), 1e-12);
      for (std::size_t j = 0; j < N; ++j)
        ASSERT_NEAR(out[static_cast<Eigen::Index>(N / 2 + j)], x[j], 1e-12);
    }
  }
}

TEST(XorLayer, ReadoutCoefficients) {
  EXPECT_EQ(xor_readout_coefficients(1), (std::vector<double>{1}));
  EXPECT_EQ(xor_readout_coefficients(2), (std::vector<double>{1, -2}));
  EXPECT_EQ(xor_readout_coefficients(3), (std::vector<double>{1, -2, 2}));
  EXPECT_TRUE(xor_readout_coefficients(0).empty());
}

TEST(XorLayer, ExhaustiveUpToTenBits) {
  for (std::size_t n = 1; n <= 10; ++n) {
    XorSubsets subsets{{}, {}};
    for (std::size_t i = 0; i < n; ++i) subsets[0].push_back(i);
    subsets[1].push_back(n - 1);  // single-element: pass-through
    const auto bp = xor_layer(subsets, n);
    for (unsigned v = 0; v < (1U << n); ++v) {
      std::vector<double> sym(n);
      for (std::size_t i = 0; i < n; ++i) sym[i] = ((v >> i) & 1U) ? 1.0 : -1.0;
      const Vector en = run(bp, sym);
      ASSERT_EQ(en[0], 2.0 * oracle::parity(static_cast<unsigned>(__builtin_popcount(v))) - 1.0)
          << n << " " << v;
      ASSERT_EQ(en[1], sym[n - 1]);
    }
  }
}

TEST(XorLayer, EmptySubsetsGiveFrozenSymbol) {
  const auto bp = xor_layer(XorSubsets{{}, {}, {}}, 0);
  EXPECT_EQ(bp.layer.outputs(), 0u);
  const Vector en = run(bp, {});
  EXPECT_EQ(en, Vector::Constant(3, -1.0));
  EXPECT_THROW(xor_layer(XorSubsets{{2}}, 2), ParameterError);
}

TEST(SignFlipBlock, MatchesGFunction) {
  const double L = 20.0;
  const auto bp = sign_flip_block(2, 1, L);
  // input [En; LLR[0], LLR[1]; y]
  const Vector one = run(bp, {1.0, 3.0, -1.0, 0.5});
  EXPECT_DOUBLE_EQ(one[0], -4.0);
  EXPECT_DOUBLE_EQ(one[1], 0.5);
  const Vector zero = run(bp, {-1.0, 3.0, -1.0, -0.5});
  EXPECT_DOUBLE_EQ(zero[0], 2.0);
  EXPECT_DOUBLE_EQ(zero[1], -0.5);
  for (double en : {-1.0, 1.0}) EXPECT_DOUBLE_EQ(run(bp, {en, 0.0, 7.0, 1.0})[0], 7.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-L, L);
  const auto big = sign_flip_block(8, 3, L);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> in;
    std::vector<double> en(4), llr(8), y(3);
    for (auto& v : en) v = (rng() & 1U) ? 1.0 : -1.0;
    for (auto& v : llr) v = u(rng);
    for (auto& v : y) v = (rng() & 1U) ? 1.0 : -1.0;
    in.insert(in.end(), en.begin(), en.end());
    in.insert(in.end(), llr.begin(), llr.end());
    in.insert(in.end(), y.begin(), y.end());
    const Vector out = run(big, in);
    for (int i = 0; i < 4; ++i) ASSERT_NEAR(out[i], g_function(llr[i], llr[4 + i], en[i]), 1e-12);
    for (int i = 0; i < 3; ++i) ASSERT_NEAR(out[4 + i], y[i], 1e-12);
  }
}

TEST(Concat, LayerCounts) {
  const auto t11 = trivial_decoder(PolarCode(0, {0}));
  const auto t10 = trivial_decoder(PolarCode(0, {1}));
  EXPECT_EQ(concat(t11, t11, PolarCode(1, {0, 0})).layers.size(), 7u);
  const auto c21 = concat(t10, t11, PolarCode(1, {1, 0}));
  EXPECT_EQ(c21.layers.size(), 6u);
  EXPECT_EQ(c21.output_dim, 1u);
  const auto c20 = concat(t10, t10, PolarCode(1, {1, 1}));
  EXPECT_EQ(c20.layers.size(), 5u);
  EXPECT_EQ(c20.output_dim, 0u);
}

TEST(Concat, StructuralErrors) {
  const auto t11 = trivial_decoder(PolarCode(0, {0}));
  const auto t10 = trivial_decoder(PolarCode(0, {1}));
  EXPECT_THROW(concat(t10, t11, PolarCode(1, {0, 0})), StructuralError);
  auto tanh_net = t11;
  tanh_net.layers[0].activation = Activation::Tanh;
  EXPECT_THROW(concat(tanh_net, t11, PolarCode(1, {0, 0})), StructuralError);
  auto relu_last = t11;
  relu_last.layers[1].activation = Activation::Relu;
  EXPECT_THROW(concat(t11, relu_last, PolarCode(1, {0, 0})), StructuralError);
  EXPECT_THROW(concat(t11, t11, PolarCode(0, {0})), ParameterError);
}

TEST(BuildDecoder, WorkedExample4x3) {
  const PolarCode code(2, {1, 0, 0, 0});
  const auto report = build_decoder_report(code);
  // (2,1) = 1 + 2 + 3, (2,2) = 2 + 2 + 3, (4,3) = 6 + 7 + 3
  EXPECT_EQ(report.unmerged.layers.size(), 16u);
  EXPECT_LT(report.net.layers.size(), report.unmerged.layers.size());
  const BitWord cw{0, 0, 1, 1};
  std::vector<double> llr(4);
  for (int i = 0; i < 4; ++i) llr[static_cast<std::size_t>(i)] = cw[static_cast<std::size_t>(i)] ? -kDefaultLlrLimit : kDefaultLlrLimit;
  EXPECT_EQ(nn_decode(report.net, llr), (BitWord{1, 0, 1}));
  EXPECT_EQ(nn_decode(report.unmerged, llr), (BitWord{1, 0, 1}));
  EXPECT_EQ(sc_decode(code, llr), (BitWord{1, 0, 1}));
  const Vector out = forward(report.net, llr);
  EXPECT_NEAR(out[0], 1.0, 1e-9);
  EXPECT_NEAR(out[1], -1.0, 1e-9);
  EXPECT_NEAR(out[2], 1.0, 1e-9);
}

TEST(BuildDecoder, LayerCountLawAtEveryNode) {
  for (auto [n, K] : {std::pair{2, 3}, {3, 4}, {3, 7}, {4, 11}, {5, 16}}) {
    const auto code = build_polar_code(n, static_cast<std::size_t>(K), 1.0);
    const auto report = build_decoder_report(code);
    for (const auto& node : report.nodes) {
      if (node.leaf) {
        EXPECT_EQ(node.layers, node.K == 0 ? 1u : 2u);
      } else {
        EXPECT_EQ(node.layers, node.left_layers + node.right_layers + 3) << node.path;
      }
    }
    EXPECT_EQ(report.unmerged.layers.size(), report.nodes.front().layers);
  }
}

TEST(BuildDecoder, MatchesScOutsideDeadZone) {
  for (auto [n, K] : {std::pair{1, 1}, {1, 2}, {2, 3}, {3, 4}, {3, 7}, {4, 11}}) {
    const auto code = build_polar_code(n, static_cast<std::size_t>(K), 1.0);
    const auto net = build_decoder(code);
    const ScDecoder sc(code);
    const double sigma = sigma_from_snr(1.0, code.rate());
    Rng rng(static_cast<std::uint64_t>(100 * n + K));
    for (int t = 0; t < 2000; ++t) {
      const auto f = make_frame(code, sigma, rng);
      const auto trace = forward_trace(net, f.llrs);
      BitWord u(code.length());
      const double sc_min = sc.decode_input_word(f.llrs, u);
      const double nn_min = min_probe_llr(net, trace);
      const BitWord nn = harden(vec(trace.output()));
      if (sc_min >= net.eps) {
        ASSERT_EQ(nn, extract_message(code, u)) << n << "," << K << " frame " << t;
        ASSERT_NEAR(nn_min, sc_min, 1e-9 * (1.0 + sc_min));
        for (Eigen::Index i = 0; i < trace.output().size(); ++i)
          ASSERT_NEAR(std::abs(trace.output()[i]), 1.0, 1e-9);
      }
    }
  }
}

TEST(BuildDecoder, PreservedSlotsReproduceSources) {
  const auto code = build_polar_code(3, 4, 1.0);
  BuildOptions opt;
  opt.merge = false;
  const auto net = build_decoder(code, {}, opt);
  const auto prop = propagation_block(8, opt.l_max);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-opt.l_max, opt.l_max);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(8);
    for (auto& v : x) v = u(rng);
    const auto trace = forward_trace(net, x);
    for (std::size_t s = 0; s < prop.slots.size(); ++s) {
      const auto& slot = prop.slots[s];
      if (slot.kind != SlotKind::Preserved) continue;
      ASSERT_NEAR(trace.post[0][static_cast<Eigen::Index>(s)] - slot.offset, x[slot.source], 1e-9);
    }
  }
}

TEST(BuildDecoder, LeafPolicyWithSuppliedSubDecoders) {
  // (16,11) from separately built (8,4) and (8,7) decoders.
  const auto code = build_polar_code(4, 11, 1.0);
  LeafPolicy policy;
  policy.max_leaf_size = 8;
  int calls = 0;
  policy.provider = [&](const PolarCode& leaf, double bound) -> std::optional<NeuralDecoder> {
    ++calls;
    BuildOptions o;
    o.l_max = bound;
    return build_decoder(leaf, {}, o);
  };
  const auto report = build_decoder_report(code, policy);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(report.nodes.size(), 3u);
  const auto full = build_decoder(code);
  Rng rng(8);
  const double sigma = sigma_from_snr(2.0, code.rate());
  for (int t = 0; t < 300; ++t) {
    const auto f = make_frame(code, sigma, rng);
    ASSERT_LE((forward(report.net, f.llrs) - forward(full, f.llrs)).cwiseAbs().maxCoeff(), 1e-9);
  }

  LeafPolicy missing;
  missing.max_leaf_size = 4;
  EXPECT_THROW(build_decoder(code, missing), ConfigError);
  LeafPolicy bad;
  bad.max_leaf_size = 3;
  EXPECT_THROW(build_decoder(code, bad), ParameterError);
}

TEST(BuildDecoder, BaseCaseIsTrivialDecoder) {
  const auto net = build_decoder(PolarCode(0, {0}));
  const auto triv = trivial_decoder(PolarCode(0, {0}));
  ASSERT_EQ(net.layers.size(), triv.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) EXPECT_EQ(net.layers[l].weights, triv.layers[l].weights);
}

TEST(BuildDecoder, WeightFileRoundTripKeepsBehaviour) {
  const auto code = build_polar_code(3, 4, 1.0);
  const auto result = build_decoder_report(code);
  std::stringstream ss;
  write_weights(ss, result.net);
  const auto back = read_weights(ss);
  EXPECT_EQ(back.probes.size(), result.net.probes.size());
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto f = make_frame(code, 0.8, rng);
    EXPECT_EQ(forward(back, f.llrs), forward(result.net, f.llrs));
  }
  const auto log = construction_log(result);
  EXPECT_NE(log.find("root: (8,4)"), std::string::npos);
  EXPECT_NE(log.find("propagation"), std::string::npos);
}

TEST(Harden, Threshold) {
  EXPECT_EQ(harden(std::vector<double>{0.9, -0.2}), (BitWord{1, 0}));
  EXPECT_EQ(harden(std::vector<double>{1.0, -1.0, 0.0}), (BitWord{1, 0, 0}));
}
