// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polarnn/nn_engine.hpp"
#include "polarnn/polar_code.hpp"

namespace polarnn {

struct BuildOptions {
  /// Bound on |channel LLR| at the root. Deeper right subcodes see up to
  /// twice their parent's bound, and their decoders are built for that.
  double l_max = kDefaultLlrLimit;
  /// Ramp half-width: leaf outputs are exactly +/-1 once |llr| >= eps.
  double eps = 1e-3;
  /// Apply merge_identity_layers to the finished decoder.
  bool merge = true;
};

/// Affine map y = a * x + c.
struct Affine {
  Matrix a;
  Vector c;

  static Affine identity(std::size_t n);
  Vector apply(const Vector& x) const { return a * x + c; }
};

enum class SlotKind { Computed, Preserved };

/// What one output unit of a blueprint layer carries.
struct SlotInfo {
  SlotKind kind;
  /// Input index the slot preserves (Preserved slots only).
  std::size_t source = 0;
  /// Offset added before the activation; the readout subtracts it again.
  double offset = 0.0;
};

/// One glue layer plus the affine readout that turns its activations into
/// the values downstream layers consume. The readout is always merged into
/// the next layer, so it never costs a layer of its own.
struct LayerBlueprint {
  DenseLayer layer;
  Affine readout;
  std::vector<SlotInfo> slots;
};

/// Decoder for a length-1 code. (1,0): one IDENTITY layer with no outputs.
/// (1,1): a two-unit ReLU ramp and readout, out = -clamp(llr/eps, -1, 1).
NeuralDecoder trivial_decoder(const PolarCode& code, const BuildOptions& options = {});

/// Decoder with no outputs for an all-frozen code of any length.
NeuralDecoder frozen_decoder(std::size_t N, const BuildOptions& options = {});

/// ReLU layer over N LLRs: Relu(a+b), Relu(a-b) for each pair (i, i+N/2) and
/// Relu(LLR[j] + l_max) for every j. Readout: [LLR_left (N/2); LLR (N)],
/// LLR_left[i] = Relu(a+b) - Relu(a-b) - b = f(a, b).
LayerBlueprint propagation_block(std::size_t N, double l_max = kDefaultLlrLimit);

/// Coefficients a_k with parity(S) = sum_k a_k Relu(S - k + 1), k = 1..n,
/// for integer S in [0, n], from the basis-function recursion.
std::vector<double> xor_readout_coefficients(std::size_t n);

/// Hidden ReLU layer over K1 message symbols (+/-1) computing, for every
/// output position j, Relu(S_j - k + 1), S_j = sum_{i in subset j} (x_i+1)/2.
/// Readout: encoded symbols En[j] = 2 * parity_j - 1 (-1 for empty subsets).
LayerBlueprint xor_layer(const XorSubsets& subsets, std::size_t K1);

/// ReLU layer over [En (N/2); LLR (N); left symbols (K1)].
/// Readout: [LLR_right (N/2); left symbols (K1)], where
/// LLR_right[i] = LLR[i+N/2] - Relu(LLR[i] + L En[i]) + Relu(LLR[i] - L En[i]) + L En[i]
///             = LLR[i+N/2] - sign(En[i]) LLR[i]   for |LLR[i]| <= L.
LayerBlueprint sign_flip_block(std::size_t N, std::size_t K1, double l_max = kDefaultLlrLimit);

/// Decoder for (N, K) from decoders of its left and right subcodes.
/// l_max bounds this node's input LLRs; nn2 must accept up to 2 * l_max.
/// Result has nn1.layers + nn2.layers + 3 layers and emits the K1 left
/// symbols followed by the K2 right symbols.
NeuralDecoder concat(const NeuralDecoder& nn1, const NeuralDecoder& nn2, const PolarCode& code,
                     double l_max = kDefaultLlrLimit);

struct LeafPolicy {
  /// Subcodes with N <= max_leaf_size stop the recursion. Power of two.
  std::size_t max_leaf_size = 1;
  /// Supplies decoders for non-trivial leaves (N > 1, K > 0). Receives the
  /// leaf code and the LLR bound at that node.
  std::function<std::optional<NeuralDecoder>(const PolarCode&, double)> provider;
};

struct BuildNode {
  std::string path;  // "" root, then L/R steps
  std::size_t N = 0;
  std::size_t K = 0;
  double l_max = 0.0;
  bool leaf = false;
  std::size_t layers = 0;  // before the final merge
  std::size_t left_layers = 0;
  std::size_t right_layers = 0;
};

struct BuildResult {
  NeuralDecoder net;       // final decoder (merged when options.merge)
  NeuralDecoder unmerged;  // straight concat output
  std::vector<BuildNode> nodes;
};

BuildResult build_decoder_report(const PolarCode& code, const LeafPolicy& policy = {},
                                 const BuildOptions& options = {});

NeuralDecoder build_decoder(const PolarCode& code, const LeafPolicy& policy = {},
                            const BuildOptions& options = {});

/// Human-readable per-layer provenance of a decoder and its build tree.
std::string construction_log(const BuildResult& result);

/// bit = 1 where soft > 0.
BitWord harden(std::span<const double> soft);

/// harden(forward(net, llrs)).
BitWord nn_decode(const NeuralDecoder& net, std::span<const double> llrs);

}  // namespace polarnn
