// SPDX-License-Identifier: Apache-2.0
#include "polarnn/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "polarnn/decoders.hpp"
#include "polarnn/error.hpp"
#include "polarnn/nn_builder.hpp"

namespace polarnn {

namespace {

constexpr std::size_t kBlock = 1024;
constexpr std::size_t kBlocksPerRound = 16;
constexpr std::size_t kGradChunk = 64;

std::string join(std::span<const double> v) {
  std::string s;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    if (i) s += ';';
    s += buf;
  }
  return s;
}

std::vector<double> split_numbers(const std::string& field) {
  std::vector<double> out;
  if (field.empty()) return out;
  std::stringstream ss(field);
  std::string tok;
  while (std::getline(ss, tok, ';')) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw FormatError("dataset: bad number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

Batch columns(const std::vector<const std::vector<double>*>& cols, std::size_t rows) {
  Batch b(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows; ++i)
      b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*cols[j])[i];
  return b;
}

// Frames [first, first + count) of block `block`.
std::vector<Frame> block_frames(const PolarCode& code, double sigma, std::uint64_t seed,
                                std::size_t block, std::size_t count, double l_max) {
  Rng rng = substream(seed, block);
  std::vector<Frame> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) frames.push_back(make_frame(code, sigma, rng, l_max));
  return frames;
}

Sample to_sample(const Frame& f, Provenance p) {
  return {f.llrs, message_symbols(f.message), p};
}

}  // namespace

std::size_t Dataset::count(Provenance p) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [p](const Sample& s) { return s.provenance == p; }));
}

void Dataset::append(const Dataset& other) {
  items.insert(items.end(), other.items.begin(), other.items.end());
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  for (const auto& s : data.items)
    os << (s.provenance == Provenance::Mined ? "mined" : "random") << ',' << join(s.llrs) << ','
       << join(s.target) << '\n';
}

Dataset read_dataset_csv(std::istream& is) {
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto a = line.find(',');
    const auto b = a == std::string::npos ? a : line.find(',', a + 1);
    if (b == std::string::npos)
      throw FormatError("dataset line " + std::to_string(lineno) + ": expected 3 fields");
    Sample s;
    const std::string tag = line.substr(0, a);
    if (tag == "mined") {
      s.provenance = Provenance::Mined;
    } else if (tag != "random") {
      throw FormatError("dataset line " + std::to_string(lineno) + ": bad tag '" + tag + "'");
    }
    s.llrs = split_numbers(line.substr(a + 1, b - a - 1));
    s.target = split_numbers(line.substr(b + 1));
    if (!data.items.empty() && (s.llrs.size() != data.items[0].llrs.size() ||
                                s.target.size() != data.items[0].target.size()))
      throw FormatError("dataset line " + std::to_string(lineno) + ": inconsistent widths");
    data.items.push_back(std::move(s));
  }
  return data;
}

std::vector<double> message_symbols(std::span<const std::uint8_t> message) {
  std::vector<double> t(message.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = message[i] ? 1.0 : -1.0;
  return t;
}

Dataset gen_dataset(const PolarCode& code, double sigma, std::size_t count, std::uint64_t seed,
                    double l_max) {
  const std::size_t blocks = (count + kBlock - 1) / kBlock;
  Dataset data;
  data.items.resize(count);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t first = b * kBlock;
    const auto frames = block_frames(code, sigma, seed, b, std::min(kBlock, count - first), l_max);
    for (std::size_t i = 0; i < frames.size(); ++i)
      data.items[first + i] = to_sample(frames[i], Provenance::Random);
  }
  return data;
}

bool is_hard_case(const PolarCode& code, const NeuralDecoder& net, const Sample& s) {
  const BitWord target = harden(s.target);
  return nn_decode(net, s.llrs) != target && ml_decode(code, s.llrs) == target;
}

MineResult mine_hard_cases(const PolarCode& code, const NeuralDecoder& net, std::size_t want,
                           double sigma, std::uint64_t seed, std::size_t budget, double l_max) {
  if (code.message_size() > MlDecoder::kMaxMessageBits)
    throw ParameterError("mine_hard_cases: K exceeds the ML oracle bound");
  if (net.input_dim != code.length() || net.output_dim != code.message_size())
    throw StructuralError("mine_hard_cases: network does not match code");
  const MlDecoder ml(code);
  MineResult result;
  const std::size_t total_blocks = (budget + kBlock - 1) / kBlock;
  for (std::size_t start = 0; start < total_blocks && result.found < want;
       start += kBlocksPerRound) {
    const std::size_t stop = std::min(total_blocks, start + kBlocksPerRound);
    std::vector<std::vector<Sample>> finds(stop - start);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t b = start; b < stop; ++b) {
      const auto frames =
          block_frames(code, sigma, seed, b, std::min(kBlock, budget - b * kBlock), l_max);
      std::vector<const std::vector<double>*> cols;
      for (const auto& f : frames) cols.push_back(&f.llrs);
      const Batch out = forward_batch(net, columns(cols, code.length()));
      for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto col = out.col(static_cast<Eigen::Index>(i));
        const BitWord nn = harden(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
        if (nn == frames[i].message) continue;
        if (ml.decode(frames[i].llrs) != frames[i].message) continue;
        finds[b - start].push_back(to_sample(frames[i], Provenance::Mined));
      }
    }
    for (std::size_t b = start; b < stop; ++b) {
      result.frames_drawn += std::min(kBlock, budget - b * kBlock);
      for (auto& s : finds[b - start]) {
        ++result.found;
        if (result.data.size() < want) result.data.items.push_back(std::move(s));
      }
    }
  }
  return result;
}

std::string to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

Optimizer parse_optimizer(const std::string& s) {
  if (s == "adam") return Optimizer::Adam;
  if (s == "sgd") return Optimizer::Sgd;
  throw ConfigError("unknown optimizer '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(mined_fraction >= 0.0 && mined_fraction <= 1.0))
    throw ConfigError("mined_fraction must lie in [0,1]");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  auto num = [&] {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty()) throw ConfigError("bad value for " + key + ": " + value);
    return v;
  };
  auto count = [&] {
    const double v = num();
    if (v < 0 || v != std::floor(v)) throw ConfigError(key + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
  };
  if (key == "snr_db") snr_db = num();
  else if (key == "batch_size") batch_size = count();
  else if (key == "iterations") iterations = count();
  else if (key == "learning_rate") learning_rate = num();
  else if (key == "optimizer") optimizer = parse_optimizer(value);
  else if (key == "mined_fraction") mined_fraction = num();
  else if (key == "seed") seed = count();
  else if (key == "freeze_ramp") {
    if (value != "true" && value != "false") throw ConfigError("freeze_ramp must be true|false");
    freeze_ramp = value == "true";
  } else if (key == "clip_norm") clip_norm = num();
  else if (key == "eval_interval") eval_interval = count();
  else if (key == "beta1") beta1 = num();
  else if (key == "beta2") beta2 = num();
  else if (key == "adam_eps") adam_eps = num();
  else throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig TrainConfig::parse(std::istream& is) {
  TrainConfig c;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line without '=': " + line);
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

std::string TrainConfig::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "snr_db=" << snr_db << " batch_size=" << batch_size << " iterations=" << iterations
     << " learning_rate=" << learning_rate << " optimizer=" << polarnn::to_string(optimizer)
     << " mined_fraction=" << mined_fraction << " seed=" << seed
     << " freeze_ramp=" << (freeze_ramp ? "true" : "false")
     << " keep_sparsity=" << (keep_sparsity ? "true" : "false") << " clip_norm=" << clip_norm
     << " eval_interval=" << eval_interval;
  return os.str();
}

double dataset_ber(const NeuralDecoder& net, const Dataset& data) {
  if (data.empty() || net.output_dim == 0) return 0.0;
  const std::size_t blocks = (data.size() + kBlock - 1) / kBlock;
  std::size_t errors = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : errors)
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t first = b * kBlock;
    const std::size_t n = std::min(kBlock, data.size() - first);
    std::vector<const std::vector<double>*> cols;
    for (std::size_t i = 0; i < n; ++i) cols.push_back(&data.items[first + i].llrs);
    const Batch out = forward_batch(net, columns(cols, net.input_dim));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < net.output_dim; ++k)
        errors += (out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) > 0.0) !=
                  (data.items[first + i].target[k] > 0.0);
  }
  return static_cast<double>(errors) / static_cast<double>(data.size() * net.output_dim);
}

TrainResult train(const NeuralDecoder& net, const Dataset& data, const TrainConfig& config,
                  const Dataset* holdout) {
  config.validate();
  net.validate();
  TrainResult result{net, {}};
  if (config.iterations == 0) return result;
  if (data.empty()) throw ConfigError("train: empty dataset");

  std::vector<std::size_t> random_pool, mined_pool;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.items[i];
    if (s.llrs.size() != net.input_dim || s.target.size() != net.output_dim)
      throw StructuralError("train: dataset does not match network dimensions");
    (s.provenance == Provenance::Mined ? mined_pool : random_pool).push_back(i);
  }

  const std::size_t B = config.batch_size;
  std::size_t n_mined = static_cast<std::size_t>(std::llround(config.mined_fraction * static_cast<double>(B)));
  if (mined_pool.empty()) n_mined = 0;
  if (random_pool.empty()) n_mined = B;

  NeuralDecoder& w = result.net;
  GradientSet m = GradientSet::zeros_like(w), v = GradientSet::zeros_like(w);
  std::vector<Matrix> support;
  if (config.keep_sparsity)
    for (const auto& layer : w.layers) support.push_back((layer.weights.array() != 0.0).cast<double>().matrix());
  Rng rng(config.seed);
  const std::size_t chunks = (B + kGradChunk - 1) / kGradChunk;

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    std::vector<std::size_t> picks(B);
    for (std::size_t j = 0; j < B; ++j) {
      const auto& pool = j < n_mined ? mined_pool : random_pool;
      picks[j] = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    }

    // Fixed chunking keeps the summation order independent of thread count.
    std::vector<GradientSet> parts(chunks);
    std::vector<double> losses(chunks);
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t lo = c * kGradChunk, hi = std::min(B, lo + kGradChunk);
      std::vector<const std::vector<double>*> xs, ts;
      for (std::size_t j = lo; j < hi; ++j) {
        xs.push_back(&data.items[picks[j]].llrs);
        ts.push_back(&data.items[picks[j]].target);
      }
      auto [g, loss] = gradients_batch(w, columns(xs, w.input_dim), columns(ts, w.output_dim));
      const double share = static_cast<double>(hi - lo) / static_cast<double>(B);
      g.scale(share);
      parts[c] = std::move(g);
      losses[c] = loss * share;
    }
    GradientSet grad = std::move(parts[0]);
    double loss = losses[0];
    for (std::size_t c = 1; c < chunks; ++c) {
      grad += parts[c];
      loss += losses[c];
    }

    if (!std::isfinite(loss) || !std::isfinite(grad.norm())) {
      long bad = -1;
      for (std::size_t j = 0; j < B && bad < 0; ++j) {
        const Vector out = forward(w, data.items[picks[j]].llrs);
        if (!out.allFinite()) bad = static_cast<long>(j);
      }
      throw TrainingError("train: non-finite loss at iteration " + std::to_string(it) +
                              (bad >= 0 ? ", batch index " + std::to_string(bad) : std::string()),
                          static_cast<long>(it), bad);
    }

    if (config.freeze_ramp) {
      for (std::size_t l = 0; l < w.layers.size(); ++l) {
        if (!w.layers[l].ramp) continue;
        grad.weights[l].setZero();
        grad.bias[l].setZero();
      }
    }
    if (config.keep_sparsity)
      for (std::size_t l = 0; l < w.layers.size(); ++l) grad.weights[l] = grad.weights[l].cwiseProduct(support[l]);
    if (config.clip_norm > 0.0) {
      const double norm = grad.norm();
      if (norm > config.clip_norm) grad.scale(config.clip_norm / norm);
    }

    const double lr = config.learning_rate;
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
      if (config.freeze_ramp && w.layers[l].ramp) continue;
      auto& layer = w.layers[l];
      if (config.optimizer == Optimizer::Sgd) {
        layer.weights -= lr * grad.weights[l];
        layer.bias -= lr * grad.bias[l];
        continue;
      }
      const double t = static_cast<double>(it);
      const double c1 = 1.0 - std::pow(config.beta1, t);
      const double c2 = 1.0 - std::pow(config.beta2, t);
      auto step = [&](auto& param, auto& mom, auto& vel, const auto& g) {
        mom = config.beta1 * mom + (1.0 - config.beta1) * g;
        vel = config.beta2 * vel + (1.0 - config.beta2) * g.cwiseProduct(g);
        param.array() -= lr * (mom.array() / c1) / ((vel.array() / c2).sqrt() + config.adam_eps);
      };
      step(layer.weights, m.weights[l], v.weights[l], grad.weights[l]);
      step(layer.bias, m.bias[l], v.bias[l], grad.bias[l]);
    }

    HistoryRow row{it, loss, -1.0};
    const bool eval = it == config.iterations ||
                      (config.eval_interval > 0 && it % config.eval_interval == 0);
    if (holdout && eval) row.holdout_ber = dataset_ber(w, *holdout);
    result.history.push_back(row);
  }
  return result;
}

void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& history) {
  os << "iteration,loss,holdout_ber\n";
  char buf[64];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,", r.iteration, r.loss);
    os << buf;
    if (r.holdout_ber >= 0.0) {
      std::snprintf(buf, sizeof buf, "%.17g", r.holdout_ber);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace polarnn
