// SPDX-License-Identifier: Apache-2.0
#include "polarnn/nn_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "polarnn/error.hpp"

namespace polarnn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw FormatError("unknown activation '" + std::string(name) + "'");
}

void NeuralDecoder::validate() const {
  std::size_t width = input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.inputs() != width)
      throw StructuralError("layer " + std::to_string(l) + " expects " +
                            std::to_string(layer.inputs()) + " inputs, previous width is " +
                            std::to_string(width));
    if (static_cast<std::size_t>(layer.bias.size()) != layer.outputs())
      throw StructuralError("layer " + std::to_string(l) + ": bias length != row count");
    if (!layer.weights.allFinite() || !layer.bias.allFinite())
      throw StructuralError("layer " + std::to_string(l) + " has non-finite entries");
    width = layer.outputs();
  }
  if (width != output_dim)
    throw StructuralError("last layer emits " + std::to_string(width) + " values, output_dim is " +
                          std::to_string(output_dim));
  for (const auto& p : probes)
    if (p.layer >= layers.size() || p.unit >= layers[p.layer].outputs())
      throw StructuralError("ramp probe out of range");
}

namespace {

template <typename Derived>
void activate(Eigen::MatrixBase<Derived>& z, Activation a) {
  switch (a) {
    case Activation::Relu: z = z.cwiseMax(0.0); break;
    case Activation::Tanh: z = z.array().tanh().matrix(); break;
    case Activation::Identity: break;
  }
}

void check_input(const NeuralDecoder& net, std::size_t n) {
  if (n != net.input_dim)
    throw StructuralError("input has " + std::to_string(n) + " values, network expects " +
                          std::to_string(net.input_dim));
}

}  // namespace

Vector forward(const NeuralDecoder& net, std::span<const double> input) {
  check_input(net, input.size());
  Vector x = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  for (const auto& layer : net.layers) {
    Vector z = layer.weights * x + layer.bias;
    activate(z, layer.activation);
    x = std::move(z);
  }
  return x;
}

Batch forward_batch(const NeuralDecoder& net, const Batch& inputs) {
  check_input(net, static_cast<std::size_t>(inputs.rows()));
  Batch x = inputs;
  for (const auto& layer : net.layers) {
    Batch z = layer.weights * x;
    z.colwise() += layer.bias;
    activate(z, layer.activation);
    x = std::move(z);
  }
  return x;
}

ForwardTrace forward_trace(const NeuralDecoder& net, std::span<const double> input) {
  check_input(net, input.size());
  ForwardTrace t;
  Vector x = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  for (const auto& layer : net.layers) {
    Vector z = layer.weights * x + layer.bias;
    t.pre.push_back(z);
    activate(z, layer.activation);
    t.post.push_back(z);
    x = std::move(z);
  }
  if (net.layers.empty()) t.post.push_back(x);
  return t;
}

double min_probe_llr(const NeuralDecoder& net, const ForwardTrace& trace) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : net.probes)
    m = std::min(m, std::abs(net.eps * (trace.pre[p.layer][static_cast<Eigen::Index>(p.unit)] - 1.0)));
  return m;
}

NeuralDecoder merge_identity_layers(NeuralDecoder net) {
  std::size_t l = 0;
  while (l + 1 < net.layers.size()) {
    if (net.layers[l].activation != Activation::Identity) {
      ++l;
      continue;
    }
    const DenseLayer& inner = net.layers[l];
    DenseLayer& outer = net.layers[l + 1];
    outer.bias = outer.weights * inner.bias + outer.bias;
    outer.weights = outer.weights * inner.weights;
    if (!inner.note.empty())
      outer.note = outer.note.empty() ? inner.note : inner.note + " + " + outer.note;
    net.layers.erase(net.layers.begin() + static_cast<std::ptrdiff_t>(l));
    for (auto& p : net.probes)
      if (p.layer > l) --p.layer;
  }
  return net;
}

// ---------------------------------------------------------------------------
// Gradients

GradientSet GradientSet::zeros_like(const NeuralDecoder& net) {
  GradientSet g;
  for (const auto& layer : net.layers) {
    g.weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    g.bias.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

double GradientSet::norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : bias) s += b.squaredNorm();
  return std::sqrt(s);
}

void GradientSet::scale(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : bias) b *= s;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (other.weights.size() != weights.size()) throw StructuralError("gradient sets differ in shape");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    bias[l] += other.bias[l];
  }
  return *this;
}

double mse(std::span<const double> output, std::span<const double> target) {
  if (output.size() != target.size()) throw StructuralError("mse: length mismatch");
  if (output.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double r = output[i] - target[i];
    s += r * r;
  }
  return s / static_cast<double>(output.size());
}

std::pair<GradientSet, double> gradients_batch(const NeuralDecoder& net, const Batch& inputs,
                                               const Batch& targets, Loss) {
  check_input(net, static_cast<std::size_t>(inputs.rows()));
  if (static_cast<std::size_t>(targets.rows()) != net.output_dim || targets.cols() != inputs.cols())
    throw StructuralError("gradients: target shape does not match network output");

  const std::size_t L = net.layers.size();
  std::vector<Batch> act(L + 1), pre(L);
  act[0] = inputs;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = net.layers[l];
    pre[l] = layer.weights * act[l];
    pre[l].colwise() += layer.bias;
    act[l + 1] = pre[l];
    activate(act[l + 1], layer.activation);
  }

  const double count = static_cast<double>(targets.size());
  const Batch residual = act[L] - targets;
  const double loss = count > 0 ? residual.squaredNorm() / count : 0.0;

  GradientSet g;
  g.weights.resize(L);
  g.bias.resize(L);
  Batch delta = count > 0 ? Batch(residual * (2.0 / count)) : Batch(residual);
  for (std::size_t l = L; l-- > 0;) {
    const auto& layer = net.layers[l];
    switch (layer.activation) {
      case Activation::Relu:
        delta = delta.cwiseProduct((pre[l].array() > 0.0).cast<double>().matrix());
        break;
      case Activation::Tanh:
        delta = delta.cwiseProduct((1.0 - act[l + 1].array().square()).matrix());
        break;
      case Activation::Identity: break;
    }
    g.weights[l] = delta * act[l].transpose();
    g.bias[l] = delta.rowwise().sum();
    if (l > 0) delta = layer.weights.transpose() * delta;
  }
  return {std::move(g), loss};
}

std::pair<GradientSet, double> gradients(const NeuralDecoder& net, std::span<const double> input,
                                         std::span<const double> target, Loss loss) {
  check_input(net, input.size());
  if (target.size() != net.output_dim) throw StructuralError("gradients: target length mismatch");
  const Batch x = Eigen::Map<const Eigen::VectorXd>(input.data(),
                                                    static_cast<Eigen::Index>(input.size()));
  const Batch t = Eigen::Map<const Eigen::VectorXd>(target.data(),
                                                    static_cast<Eigen::Index>(target.size()));
  return gradients_batch(net, x, t, loss);
}

// ---------------------------------------------------------------------------
// Weight files

namespace {

void put_number(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

double parse_number(const std::string& tok) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw FormatError("bad number '" + tok + "'");
  return v;
}

std::size_t parse_count(const std::string& tok) {
  std::size_t v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw FormatError("bad count '" + tok + "'");
  return v;
}

std::string next_token(std::istream& is, const char* what) {
  std::string tok;
  if (!(is >> tok)) throw FormatError(std::string("weight file truncated: expected ") + what);
  return tok;
}

}  // namespace

void write_weights(std::ostream& os, const NeuralDecoder& net,
                   std::span<const std::string> header_comments) {
  for (const auto& c : header_comments) os << "# " << c << '\n';
  os << "#@ l_max ";
  put_number(os, net.l_max);
  os << "\n#@ eps ";
  put_number(os, net.eps);
  os << '\n';
  for (const auto& p : net.probes) os << "#@ probe " << p.layer << ' ' << p.unit << '\n';
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (net.layers[l].ramp) os << "#@ ramp " << l << '\n';
    if (!net.layers[l].note.empty()) os << "#@ note " << l << ' ' << net.layers[l].note << '\n';
  }
  os << "polar-nn v1 " << net.input_dim << ' ' << net.output_dim << ' ' << net.layers.size()
     << '\n';
  for (const auto& layer : net.layers) {
    os << "layer " << layer.outputs() << ' ' << layer.inputs() << ' '
       << to_string(layer.activation) << '\n';
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        if (c) os << ' ';
        put_number(os, layer.weights(r, c));
      }
      os << '\n';
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      if (r) os << ' ';
      put_number(os, layer.bias[r]);
    }
    os << '\n';
  }
}

NeuralDecoder read_weights(std::istream& is, std::vector<std::string>* comments) {
  NeuralDecoder net;
  std::vector<std::pair<std::size_t, std::string>> notes;
  std::vector<std::size_t> ramps;
  std::string line;
  std::string header;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("#@", 0) == 0) {
      std::istringstream ms(line.substr(2));
      std::string key;
      ms >> key;
      if (key == "l_max") {
        net.l_max = parse_number(next_token(ms, "l_max"));
      } else if (key == "eps") {
        net.eps = parse_number(next_token(ms, "eps"));
      } else if (key == "probe") {
        RampProbe p{};
        p.layer = parse_count(next_token(ms, "probe layer"));
        p.unit = parse_count(next_token(ms, "probe unit"));
        net.probes.push_back(p);
      } else if (key == "ramp") {
        ramps.push_back(parse_count(next_token(ms, "ramp layer")));
      } else if (key == "note") {
        const std::size_t l = parse_count(next_token(ms, "note layer"));
        std::string text;
        std::getline(ms >> std::ws, text);
        notes.emplace_back(l, text);
      }
      continue;
    }
    if (line[0] == '#') {
      if (comments) comments->push_back(line.size() > 2 ? line.substr(2) : std::string());
      continue;
    }
    header = line;
    break;
  }
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "polar-nn" || version != "v1") throw FormatError("not a polar-nn v1 weight file");
  net.input_dim = parse_count(next_token(hs, "N"));
  net.output_dim = parse_count(next_token(hs, "K"));
  const std::size_t L = parse_count(next_token(hs, "L"));

  for (std::size_t l = 0; l < L; ++l) {
    if (next_token(is, "layer") != "layer") throw FormatError("expected 'layer' record");
    DenseLayer layer;
    const auto rows = static_cast<Eigen::Index>(parse_count(next_token(is, "rows")));
    const auto cols = static_cast<Eigen::Index>(parse_count(next_token(is, "cols")));
    layer.activation = parse_activation(next_token(is, "activation"));
    layer.weights.resize(rows, cols);
    layer.bias.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = parse_number(next_token(is, "weight"));
    for (Eigen::Index r = 0; r < rows; ++r) layer.bias[r] = parse_number(next_token(is, "bias"));
    net.layers.push_back(std::move(layer));
  }
  for (auto l : ramps) {
    if (l >= L) throw FormatError("ramp flag for missing layer");
    net.layers[l].ramp = true;
  }
  for (auto& [l, text] : notes) {
    if (l >= L) throw FormatError("note for missing layer");
    net.layers[l].note = text;
  }
  net.validate();
  return net;
}

}  // namespace polarnn
