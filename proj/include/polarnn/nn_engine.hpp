// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "polarnn/channel.hpp"

namespace polarnn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
/// Column-per-sample batch.
using Batch = Eigen::MatrixXd;

enum class Activation { Relu, Tanh, Identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Affine map followed by an elementwise activation. weights is [output][input].
struct DenseLayer {
  Matrix weights;
  Vector bias;
  Activation activation = Activation::Identity;
  /// Holds hard-sign ramp units; such layers are skipped when training with freeze_ramp.
  bool ramp = false;
  /// Provenance for construction logs.
  std::string note;

  std::size_t inputs() const noexcept { return static_cast<std::size_t>(weights.cols()); }
  std::size_t outputs() const noexcept { return static_cast<std::size_t>(weights.rows()); }
};

/// A unit whose pre-activation equals llr / eps + 1 for the LLR entering a
/// hard-sign ramp. Used to check that every ramp saw |llr| >= eps.
struct RampProbe {
  std::size_t layer;
  std::size_t unit;
};

struct NeuralDecoder {
  std::vector<DenseLayer> layers;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  /// Saturation bound L_M of the LLRs this decoder accepts.
  double l_max = kDefaultLlrLimit;
  /// Half-width of the hard-sign ramps.
  double eps = 1e-3;
  std::vector<RampProbe> probes;

  std::size_t layer_count() const noexcept { return layers.size(); }

  /// Throws StructuralError if the layer shapes do not chain from input_dim
  /// to output_dim or any entry is non-finite.
  void validate() const;
};

Vector forward(const NeuralDecoder& net, std::span<const double> input);

/// Outputs for a batch of inputs, one column each.
Batch forward_batch(const NeuralDecoder& net, const Batch& inputs);

struct ForwardTrace {
  std::vector<Vector> pre;   // per layer, before activation
  std::vector<Vector> post;  // per layer, after activation
  const Vector& output() const { return post.back(); }
};

ForwardTrace forward_trace(const NeuralDecoder& net, std::span<const double> input);

/// Smallest |llr| seen at any probed ramp in a trace (+inf if no probes).
double min_probe_llr(const NeuralDecoder& net, const ForwardTrace& trace);

/// Fuses every non-final IDENTITY layer into its successor:
/// W' = W_next * W, b' = W_next * b + b_next.
NeuralDecoder merge_identity_layers(NeuralDecoder net);

enum class Loss { Mse };

struct GradientSet {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;

  static GradientSet zeros_like(const NeuralDecoder& net);
  double norm() const;
  void scale(double s);
  GradientSet& operator+=(const GradientSet& other);
};

/// Reverse-mode gradient of the mean squared error between the network
/// output and target. ReLU subgradient at 0 is 0.
std::pair<GradientSet, double> gradients(const NeuralDecoder& net, std::span<const double> input,
                                         std::span<const double> target, Loss loss = Loss::Mse);

/// Same, for the loss averaged over a batch (inputs/targets one column each).
std::pair<GradientSet, double> gradients_batch(const NeuralDecoder& net, const Batch& inputs,
                                               const Batch& targets, Loss loss = Loss::Mse);

double mse(std::span<const double> output, std::span<const double> target);

/// Text weight file. Comment lines ('#') may precede the header; lines
/// starting with "#@" carry decoder metadata (l_max, eps, probes, ramp flags,
/// notes). Numbers are written with 17 significant digits.
void write_weights(std::ostream& os, const NeuralDecoder& net,
                   std::span<const std::string> header_comments = {});

/// Free comment lines (without the leading "# ") are appended to *comments.
NeuralDecoder read_weights(std::istream& is, std::vector<std::string>* comments = nullptr);

}  // namespace polarnn
