// SPDX-License-Identifier: Apache-2.0
#include "polarnn/nn_builder.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <sstream>

#include "polarnn/error.hpp"

namespace polarnn {

Affine Affine::identity(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return {Matrix::Identity(m, m), Vector::Zero(m)};
}

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

DenseLayer make_layer(Index rows, Index cols, Activation act, std::string note = {}) {
  DenseLayer layer;
  layer.weights = Matrix::Zero(rows, cols);
  layer.bias = Vector::Zero(rows);
  layer.activation = act;
  layer.note = std::move(note);
  return layer;
}

/// A layer written against the logical vector view(previous output), turned
/// into a real layer by folding the view in.
DenseLayer realize(DenseLayer logical, const Affine& view) {
  logical.bias = logical.weights * view.c + logical.bias;
  logical.weights = logical.weights * view.a;
  return logical;
}

std::string prefixed(const std::string& prefix, const std::string& note) {
  return note.empty() ? prefix : prefix + note;
}

/// Appends the layers of a sub-decoder whose input is logical[0, sub.input_dim)
/// while carrying `carried` trailing logical values through each layer with a
/// +offset. On return the view's layout is [sub output; carried values].
void embed(std::vector<DenseLayer>& out, Affine& view, const NeuralDecoder& sub,
           std::size_t carried, double offset, const std::string& prefix) {
  std::size_t width = sub.input_dim;
  for (const auto& layer : sub.layers) {
    const Index rows = idx(layer.outputs());
    const Index extra = idx(carried);
    DenseLayer logical = make_layer(rows + extra, idx(width) + extra, layer.activation,
                                    prefixed(prefix, layer.note));
    logical.ramp = layer.ramp;
    logical.weights.topLeftCorner(rows, idx(width)) = layer.weights;
    logical.bias.head(rows) = layer.bias;
    for (Index j = 0; j < extra; ++j) {
      logical.weights(rows + j, idx(width) + j) = 1.0;
      logical.bias[rows + j] = offset;
    }
    out.push_back(realize(std::move(logical), view));

    view = Affine::identity(layer.outputs() + carried);
    view.c.tail(extra).setConstant(-offset);
    width = layer.outputs();
  }
}

void check_embeddable(const NeuralDecoder& nn, const char* which) {
  nn.validate();
  if (nn.layers.empty())
    throw StructuralError(std::string(which) + " has no layers");
  for (const auto& layer : nn.layers)
    if (layer.activation == Activation::Tanh)
      throw StructuralError(std::string(which) +
                            " has a TANH layer; only ReLU/identity layers can carry preserved values");
}

}  // namespace

// ---------------------------------------------------------------------------
// Leaves

NeuralDecoder trivial_decoder(const PolarCode& code, const BuildOptions& options) {
  if (code.length() != 1)
    throw ParameterError("trivial_decoder: code length must be 1, got " +
                         std::to_string(code.length()));
  if (code.message_size() == 0) return frozen_decoder(1, options);
  if (!(options.eps > 0.0)) throw ParameterError("trivial_decoder: eps must be positive");

  NeuralDecoder net;
  net.input_dim = 1;
  net.output_dim = 1;
  net.l_max = options.l_max;
  net.eps = options.eps;

  DenseLayer ramp = make_layer(2, 1, Activation::Relu, "ramp");
  ramp.weights << 1.0 / options.eps, 1.0 / options.eps;
  ramp.bias << 1.0, -1.0;
  ramp.ramp = true;

  DenseLayer readout = make_layer(1, 2, Activation::Identity, "ramp readout");
  readout.weights << -1.0, 1.0;
  readout.bias << 1.0;

  net.layers = {std::move(ramp), std::move(readout)};
  net.probes.push_back({0, 0});
  return net;
}

NeuralDecoder frozen_decoder(std::size_t N, const BuildOptions& options) {
  NeuralDecoder net;
  net.input_dim = N;
  net.output_dim = 0;
  net.l_max = options.l_max;
  net.eps = options.eps;
  net.layers.push_back(make_layer(0, idx(N), Activation::Identity, "frozen leaf"));
  return net;
}

// ---------------------------------------------------------------------------
// Glue blueprints

LayerBlueprint propagation_block(std::size_t N, double l_max) {
  if (N == 0 || N % 2 != 0)
    throw ParameterError("propagation_block: N must be even and positive, got " +
                         std::to_string(N));
  const Index n = idx(N), h = n / 2;
  LayerBlueprint bp;
  bp.layer = make_layer(2 * h + n, n, Activation::Relu, "propagation");
  auto& W = bp.layer.weights;
  for (Index i = 0; i < h; ++i) {
    W(i, i) = 1.0;
    W(i, i + h) = 1.0;
    W(h + i, i) = 1.0;
    W(h + i, i + h) = -1.0;
    bp.slots.push_back({SlotKind::Computed});
  }
  for (Index i = 0; i < h; ++i) bp.slots.push_back({SlotKind::Computed});
  for (Index j = 0; j < n; ++j) {
    W(2 * h + j, j) = 1.0;
    bp.layer.bias[2 * h + j] = l_max;
    bp.slots.push_back({SlotKind::Preserved, static_cast<std::size_t>(j), l_max});
  }

  // [LLR_left (h); LLR (n)]
  bp.readout.a = Matrix::Zero(h + n, 2 * h + n);
  bp.readout.c = Vector::Zero(h + n);
  for (Index i = 0; i < h; ++i) {
    bp.readout.a(i, i) = 1.0;
    bp.readout.a(i, h + i) = -1.0;
    bp.readout.a(i, 2 * h + h + i) = -1.0;
    bp.readout.c[i] = l_max;
  }
  for (Index j = 0; j < n; ++j) {
    bp.readout.a(h + j, 2 * h + j) = 1.0;
    bp.readout.c[h + j] = -l_max;
  }
  return bp;
}

std::vector<double> xor_readout_coefficients(std::size_t n) {
  if (n == 0) return {};
  // basis[i] holds f_i as coefficients over r_k = Relu(S - k + 1), k = 1..n.
  std::vector<std::vector<std::int64_t>> basis(n + 1, std::vector<std::int64_t>(n + 1, 0));
  for (std::size_t i = n; i >= 1; --i) {
    basis[i][i] = 1;
    for (std::size_t j = i + 1; j <= n; ++j) {
      const auto mult = static_cast<std::int64_t>(j - i + 1);
      for (std::size_t k = 1; k <= n; ++k) basis[i][k] -= mult * basis[j][k];
    }
  }
  std::vector<double> coef(n, 0.0);
  for (std::size_t i = 1; i <= n; i += 2)
    for (std::size_t k = 1; k <= n; ++k) coef[k - 1] += static_cast<double>(basis[i][k]);
  return coef;
}

LayerBlueprint xor_layer(const XorSubsets& subsets, std::size_t K1) {
  std::size_t hidden = 0;
  for (const auto& s : subsets) {
    for (auto i : s)
      if (i >= K1)
        throw ParameterError("xor_layer: subset references bit " + std::to_string(i) +
                             " but K1=" + std::to_string(K1));
    hidden += s.size();
  }
  LayerBlueprint bp;
  bp.layer = make_layer(idx(hidden), idx(K1), Activation::Relu, "xor");
  bp.readout.a = Matrix::Zero(idx(subsets.size()), idx(hidden));
  bp.readout.c = Vector::Constant(idx(subsets.size()), -1.0);

  Index unit = 0;
  for (std::size_t j = 0; j < subsets.size(); ++j) {
    const auto& s = subsets[j];
    const auto coef = xor_readout_coefficients(s.size());
    const double half_n = 0.5 * static_cast<double>(s.size());
    for (std::size_t k = 1; k <= s.size(); ++k, ++unit) {
      // S = sum (x+1)/2 = 0.5 sum x + n/2
      for (auto i : s) bp.layer.weights(unit, idx(i)) = 0.5;
      bp.layer.bias[unit] = half_n - static_cast<double>(k) + 1.0;
      bp.readout.a(idx(j), unit) = 2.0 * coef[k - 1];
      bp.slots.push_back({SlotKind::Computed});
    }
  }
  return bp;
}

LayerBlueprint sign_flip_block(std::size_t N, std::size_t K1, double l_max) {
  if (N == 0 || N % 2 != 0)
    throw ParameterError("sign_flip_block: N must be even and positive, got " +
                         std::to_string(N));
  const Index n = idx(N), h = n / 2, k1 = idx(K1);
  // input: [En (h); LLR (n); symbols (k1)]
  const Index en0 = 0, llr0 = h, sym0 = h + n;
  // output: [a+ (h); a- (h); En + 1 (h); LLR[h..n) + L (h); symbols + L (k1)]
  const Index ap = 0, am = h, ep = 2 * h, lo = 3 * h, so = 4 * h;
  LayerBlueprint bp;
  bp.layer = make_layer(4 * h + k1, h + n + k1, Activation::Relu, "sign flip");
  auto& W = bp.layer.weights;
  auto& b = bp.layer.bias;
  for (Index i = 0; i < h; ++i) {
    W(ap + i, llr0 + i) = 1.0;
    W(ap + i, en0 + i) = l_max;
    W(am + i, llr0 + i) = 1.0;
    W(am + i, en0 + i) = -l_max;
  }
  for (Index i = 0; i < 2 * h; ++i) bp.slots.push_back({SlotKind::Computed});
  for (Index i = 0; i < h; ++i) {
    W(ep + i, en0 + i) = 1.0;
    b[ep + i] = 1.0;
    bp.slots.push_back({SlotKind::Preserved, static_cast<std::size_t>(en0 + i), 1.0});
  }
  for (Index i = 0; i < h; ++i) {
    W(lo + i, llr0 + h + i) = 1.0;
    b[lo + i] = l_max;
    bp.slots.push_back({SlotKind::Preserved, static_cast<std::size_t>(llr0 + h + i), l_max});
  }
  for (Index i = 0; i < k1; ++i) {
    W(so + i, sym0 + i) = 1.0;
    b[so + i] = l_max;
    bp.slots.push_back({SlotKind::Preserved, static_cast<std::size_t>(sym0 + i), l_max});
  }

  // [LLR_right (h); symbols (k1)]
  bp.readout.a = Matrix::Zero(h + k1, 4 * h + k1);
  bp.readout.c = Vector::Zero(h + k1);
  for (Index i = 0; i < h; ++i) {
    bp.readout.a(i, lo + i) = 1.0;
    bp.readout.a(i, ap + i) = -1.0;
    bp.readout.a(i, am + i) = 1.0;
    bp.readout.a(i, ep + i) = l_max;
    bp.readout.c[i] = -l_max - l_max;  // (lo - L) + L * (ep - 1)
  }
  for (Index i = 0; i < k1; ++i) {
    bp.readout.a(h + i, so + i) = 1.0;
    bp.readout.c[h + i] = -l_max;
  }
  return bp;
}

// ---------------------------------------------------------------------------
// Concatenation

NeuralDecoder concat(const NeuralDecoder& nn1, const NeuralDecoder& nn2, const PolarCode& code,
                     double l_max) {
  if (code.length() < 2) throw ParameterError("concat: code length must be at least 2");
  const auto [left, right] = split(code);
  const std::size_t N = code.length(), h = N / 2;
  const std::size_t K1 = left.message_size(), K2 = right.message_size();
  if (nn1.input_dim != h || nn1.output_dim != K1)
    throw StructuralError("concat: left decoder is (" + std::to_string(nn1.input_dim) + "," +
                          std::to_string(nn1.output_dim) + "), code needs (" + std::to_string(h) +
                          "," + std::to_string(K1) + ")");
  if (nn2.input_dim != h || nn2.output_dim != K2)
    throw StructuralError("concat: right decoder is (" + std::to_string(nn2.input_dim) + "," +
                          std::to_string(nn2.output_dim) + "), code needs (" + std::to_string(h) +
                          "," + std::to_string(K2) + ")");
  check_embeddable(nn1, "left decoder");
  check_embeddable(nn2, "right decoder");
  if (nn2.layers.back().activation != Activation::Identity)
    throw StructuralError("concat: right decoder must end with an IDENTITY layer");

  char tag[64];
  std::snprintf(tag, sizeof tag, "(%zu,%zu) ", N, code.message_size());
  const std::string glue = tag;

  std::vector<DenseLayer> layers;
  Affine view = Affine::identity(N);

  // LLR_left and the carried channel LLRs.
  const LayerBlueprint prop = propagation_block(N, l_max);
  {
    DenseLayer layer = prop.layer;
    layer.note = glue + "propagation";
    layers.push_back(realize(std::move(layer), view));
    view = prop.readout;
  }
  embed(layers, view, nn1, N, l_max, "L/");  // view: [y1 (K1); LLR (N)]

  // Re-encode the left symbols; keep LLR and y1.
  const LayerBlueprint xr = xor_layer(xor_subsets(left), K1);
  {
    const Index H = idx(xr.layer.outputs()), n = idx(N), k1 = idx(K1);
    DenseLayer logical = make_layer(H + n + k1, k1 + n, Activation::Relu, glue + "xor");
    logical.weights.topLeftCorner(H, k1) = xr.layer.weights;
    logical.bias.head(H) = xr.layer.bias;
    for (Index j = 0; j < n; ++j) {
      logical.weights(H + j, k1 + j) = 1.0;
      logical.bias[H + j] = l_max;
    }
    for (Index j = 0; j < k1; ++j) {
      logical.weights(H + n + j, j) = 1.0;
      logical.bias[H + n + j] = l_max;
    }
    layers.push_back(realize(std::move(logical), view));

    // [En (h); LLR (N); y1 (K1)]
    const Index hh = idx(h);
    view.a = Matrix::Zero(hh + n + k1, H + n + k1);
    view.c = Vector::Zero(hh + n + k1);
    view.a.topLeftCorner(hh, H) = xr.readout.a;
    view.c.head(hh) = xr.readout.c;
    view.a.bottomRightCorner(n + k1, n + k1).setIdentity();
    view.c.tail(n + k1).setConstant(-l_max);
  }

  const LayerBlueprint flip = sign_flip_block(N, K1, l_max);
  {
    DenseLayer layer = flip.layer;
    layer.note = glue + "sign flip";
    layers.push_back(realize(std::move(layer), view));
    view = flip.readout;  // [LLR_right (h); y1 (K1)]
  }
  embed(layers, view, nn2, K1, l_max, "R/");  // view: [y2 (K2); y1 (K1)]

  // Fold the last view into the final IDENTITY layer, reordered to [y1; y2].
  {
    const Index k1 = idx(K1), k2 = idx(K2);
    Matrix order = Matrix::Zero(k1 + k2, k1 + k2);
    order.topRightCorner(k1, k1).setIdentity();
    order.bottomLeftCorner(k2, k2).setIdentity();
    const Matrix va = order * view.a;
    const Vector vc = order * view.c;
    DenseLayer& last = layers.back();
    last.bias = va * last.bias + vc;
    last.weights = va * last.weights;
  }

  NeuralDecoder net;
  net.layers = std::move(layers);
  net.input_dim = N;
  net.output_dim = K1 + K2;
  net.l_max = l_max;
  net.eps = nn1.probes.empty() ? nn2.eps : nn1.eps;
  for (const auto& p : nn1.probes) net.probes.push_back({p.layer + 1, p.unit});
  const std::size_t right0 = 1 + nn1.layers.size() + 2;
  for (const auto& p : nn2.probes) net.probes.push_back({p.layer + right0, p.unit});
  net.validate();
  return net;
}

// ---------------------------------------------------------------------------
// Recursive build

namespace {

struct Builder {
  const LeafPolicy& policy;
  const BuildOptions& options;
  std::vector<BuildNode> nodes;

  NeuralDecoder build(const PolarCode& code, double bound, const std::string& path) {
    BuildNode node;
    node.path = path;
    node.N = code.length();
    node.K = code.message_size();
    node.l_max = bound;
    const std::size_t slot = nodes.size();
    nodes.push_back(node);

    NeuralDecoder net;
    if (code.length() == 1) {
      BuildOptions leaf = options;
      leaf.l_max = bound;
      net = trivial_decoder(code, leaf);
      nodes[slot].leaf = true;
    } else if (code.length() <= policy.max_leaf_size) {
      nodes[slot].leaf = true;
      if (code.message_size() == 0) {
        BuildOptions leaf = options;
        leaf.l_max = bound;
        net = frozen_decoder(code.length(), leaf);
      } else {
        std::optional<NeuralDecoder> supplied;
        if (policy.provider) supplied = policy.provider(code, bound);
        if (!supplied)
          throw ConfigError("no sub-decoder supplied for leaf (" + std::to_string(code.length()) +
                            "," + std::to_string(code.message_size()) + ") at '" + path + "'");
        net = std::move(*supplied);
        if (net.input_dim != code.length() || net.output_dim != code.message_size())
          throw StructuralError("supplied leaf decoder has wrong dimensions at '" + path + "'");
      }
    } else {
      const auto [left, right] = split(code);
      NeuralDecoder nn1 = build(left, bound, path + "L");
      NeuralDecoder nn2 = build(right, 2.0 * bound, path + "R");
      nodes[slot].left_layers = nn1.layers.size();
      nodes[slot].right_layers = nn2.layers.size();
      net = concat(nn1, nn2, code, bound);
    }
    nodes[slot].layers = net.layers.size();
    return net;
  }
};

}  // namespace

BuildResult build_decoder_report(const PolarCode& code, const LeafPolicy& policy,
                                 const BuildOptions& options) {
  if (policy.max_leaf_size == 0 || !std::has_single_bit(policy.max_leaf_size))
    throw ParameterError("leaf policy: max_leaf_size must be a power of two >= 1");
  if (!(options.l_max > 0.0)) throw ParameterError("build: l_max must be positive");
  if (!(options.eps > 0.0)) throw ParameterError("build: eps must be positive");
  Builder b{policy, options, {}};
  BuildResult result;
  result.unmerged = b.build(code, options.l_max, "");
  result.net = options.merge ? merge_identity_layers(result.unmerged) : result.unmerged;
  result.nodes = std::move(b.nodes);
  return result;
}

NeuralDecoder build_decoder(const PolarCode& code, const LeafPolicy& policy,
                            const BuildOptions& options) {
  return build_decoder_report(code, policy, options).net;
}

std::string construction_log(const BuildResult& result) {
  std::ostringstream os;
  os << "build tree (node: N K l_max layers = left + right + 3)\n";
  for (const auto& n : result.nodes) {
    os << "  " << (n.path.empty() ? "root" : n.path) << ": (" << n.N << "," << n.K << ") l_max "
       << n.l_max << ' ';
    if (n.leaf)
      os << "leaf, " << n.layers << " layers\n";
    else
      os << n.layers << " = " << n.left_layers << " + " << n.right_layers << " + 3\n";
  }
  os << "layers (" << result.net.layers.size() << " after merge, " << result.unmerged.layers.size()
     << " before)\n";
  for (std::size_t l = 0; l < result.net.layers.size(); ++l) {
    const auto& layer = result.net.layers[l];
    os << "  " << l << ": " << layer.outputs() << "x" << layer.inputs() << ' '
       << to_string(layer.activation) << (layer.ramp ? " [ramp]" : "") << "  " << layer.note
       << '\n';
  }
  return os.str();
}

BitWord harden(std::span<const double> soft) {
  BitWord bits(soft.size());
  for (std::size_t i = 0; i < soft.size(); ++i) bits[i] = soft[i] > 0.0 ? 1 : 0;
  return bits;
}

BitWord nn_decode(const NeuralDecoder& net, std::span<const double> llrs) {
  const Vector out = forward(net, llrs);
  return harden({out.data(), static_cast<std::size_t>(out.size())});
}

}  // namespace polarnn
