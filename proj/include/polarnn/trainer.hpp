// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "polarnn/channel.hpp"
#include "polarnn/nn_engine.hpp"
#include "polarnn/polar_code.hpp"

namespace polarnn {

enum class Provenance { Random, Mined };

struct Sample {
  std::vector<double> llrs;
  std::vector<double> target;  // message symbols, bit b -> 2b-1
  Provenance provenance = Provenance::Random;
};

struct Dataset {
  std::vector<Sample> items;

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }
  std::size_t count(Provenance p) const;
  void append(const Dataset& other);
};

/// One row per sample: "random|mined,<llr;...>,<target;...>".
void write_dataset_csv(std::ostream& os, const Dataset& data);
Dataset read_dataset_csv(std::istream& is);

std::vector<double> message_symbols(std::span<const std::uint8_t> message);

/// `count` random frames. Frames come in fixed blocks, each with its own
/// substream, so the result depends only on the seed.
Dataset gen_dataset(const PolarCode& code, double sigma, std::size_t count, std::uint64_t seed,
                    double l_max = kDefaultLlrLimit);

struct MineResult {
  Dataset data;
  std::size_t frames_drawn = 0;
  std::size_t found = 0;  // before truncation to `want`
  double find_rate() const {
    return frames_drawn ? static_cast<double>(found) / static_cast<double>(frames_drawn) : 0.0;
  }
};

/// Frames the network gets wrong while ML gets them right.
MineResult mine_hard_cases(const PolarCode& code, const NeuralDecoder& net, std::size_t want,
                           double sigma, std::uint64_t seed, std::size_t budget,
                           double l_max = kDefaultLlrLimit);

/// True when the sample is a hard case for `net` (NN wrong, ML right).
bool is_hard_case(const PolarCode& code, const NeuralDecoder& net, const Sample& s);

enum class Optimizer { Sgd, Adam };
std::string to_string(Optimizer o);
Optimizer parse_optimizer(const std::string& s);

struct TrainConfig {
  double snr_db = 1.0;
  std::size_t batch_size = 256;
  std::size_t iterations = 200;
  double learning_rate = 1e-6;
  Optimizer optimizer = Optimizer::Sgd;
  double mined_fraction = 0.25;
  std::uint64_t seed = 1;
  bool freeze_ramp = true;
  bool keep_sparsity = true;  // zero weights stay zero
  double clip_norm = 10.0;        // <= 0 disables clipping
  std::size_t eval_interval = 0;  // 0: holdout only after the last iteration
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  /// key=value per line, '#' comments. Unknown keys are a ConfigError.
  static TrainConfig parse(std::istream& is);
  void set(const std::string& key, const std::string& value);
  std::string to_string() const;
};

struct HistoryRow {
  std::size_t iteration = 0;  // 1-based
  double loss = 0.0;
  double holdout_ber = -1.0;  // < 0 when not evaluated at this iteration
};

struct TrainResult {
  NeuralDecoder net;
  std::vector<HistoryRow> history;
};

/// Bit error rate of harden(net) against the dataset targets.
double dataset_ber(const NeuralDecoder& net, const Dataset& data);

/// Minibatch descent on MSE. Each batch draws round(mined_fraction * batch)
/// items from the mined pool and the rest from the random pool.
TrainResult train(const NeuralDecoder& net, const Dataset& data, const TrainConfig& config,
                  const Dataset* holdout = nullptr);

/// iteration,loss,holdout_ber (empty field when not evaluated).
void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& history);

}  // namespace polarnn
