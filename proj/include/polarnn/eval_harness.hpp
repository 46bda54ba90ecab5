// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "polarnn/channel.hpp"
#include "polarnn/decoders.hpp"
#include "polarnn/nn_engine.hpp"
#include "polarnn/polar_code.hpp"

namespace polarnn {

struct StopRule {
  std::size_t min_frames = 10000;
  std::size_t min_bit_errors = 100;
  std::size_t max_frames = 10'000'000;  // hard cap, 0 = none
};

struct BerPoint {
  double snr_db = 0.0;
  std::string decoder;
  std::size_t frames = 0;
  std::size_t bits = 0;
  std::size_t bit_errors = 0;
  // Against the first decoder of a comparison (zero for the first itself).
  std::size_t differing_frames = 0;
  std::size_t differing_bits = 0;

  double ber() const { return bits ? static_cast<double>(bit_errors) / static_cast<double>(bits) : 0.0; }
};

/// Decodes a block of frames. Must be safe to call concurrently.
struct DecoderSpec {
  std::string name;
  std::function<std::vector<BitWord>(const std::vector<Frame>&)> decode_block;
};

DecoderSpec sc_decoder_spec(const PolarCode& code, FVariant variant = FVariant::SignMin,
                            std::string name = "sc");
DecoderSpec ml_decoder_spec(const PolarCode& code, std::string name = "ml");
/// harden(forward(net, llrs)), batched.
DecoderSpec nn_decoder_spec(const NeuralDecoder& net, std::string name = "nn");

/// One BER point per SNR. Frames are drawn in blocks whose random streams are
/// keyed by (seed, snr index, block), and the stop rule is checked after each
/// round of blocks, so the result does not depend on the worker count.
std::vector<BerPoint> run_ber(const DecoderSpec& decoder, const PolarCode& code,
                              std::span<const double> snr_list, const StopRule& stop,
                              std::uint64_t seed, double l_max = kDefaultLlrLimit);

/// Single-threaded reference of run_ber; produces identical counts.
std::vector<BerPoint> run_ber_serial(const DecoderSpec& decoder, const PolarCode& code,
                                     std::span<const double> snr_list, const StopRule& stop,
                                     std::uint64_t seed, double l_max = kDefaultLlrLimit);

/// Every decoder sees the same frames. A point stops when all decoders meet
/// the stop rule. Rows are ordered by SNR, then by decoder.
std::vector<BerPoint> compare_decoders(const PolarCode& code,
                                       const std::vector<DecoderSpec>& decoders,
                                       std::span<const double> snr_list, const StopRule& stop,
                                       std::uint64_t seed, double l_max = kDefaultLlrLimit);

/// snr_db,decoder,frames,bits,bit_errors,ber
void write_ber_csv(std::ostream& os, const std::vector<BerPoint>& points);

/// Standard error of a BER estimate, treating bits as independent.
double ber_sigma(const BerPoint& p);

/// Constructed NN against SC on random frames.
struct EquivalenceReport {
  std::size_t frames = 0;
  std::size_t bits = 0;
  std::size_t differing_bits = 0;
  std::size_t differing_frames = 0;
  std::size_t guarded_frames = 0;      // trace shows an intermediate |LLR| < eps
  std::size_t unexplained_frames = 0;  // differ although the guard was clear
  double disagreement_rate() const {
    return bits ? static_cast<double>(differing_bits) / static_cast<double>(bits) : 0.0;
  }
};

EquivalenceReport check_equivalence(const PolarCode& code, const NeuralDecoder& net,
                                    double snr_db, std::size_t frames, std::uint64_t seed);

struct Kernel {
  std::string name;
  std::function<void(std::span<const double>, std::span<const double>, std::span<double>)> run;
};

struct BenchRow {
  std::string variant;
  std::size_t batch = 0;
  std::size_t reps = 0;
  double median_ns_per_op = 0.0;
  double rel_speed = 0.0;  // time of the first kernel / time of this one
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

/// Times each kernel over the same random LLR arrays. All kernels are checked
/// against the first (within 1e-12) before any timing; a mismatch throws
/// EquivalenceError.
BenchReport bench_kernels(const std::vector<Kernel>& kernels, std::size_t batch,
                          std::size_t reps, std::uint64_t seed = 1);

/// bench_kernels over the four f variants, SIGN_MIN first.
BenchReport bench_f_variants(std::size_t batch, std::size_t reps, std::uint64_t seed = 1);

/// variant,batch,reps,median_ns_per_op,rel_speed
void write_bench_csv(std::ostream& os, const BenchReport& report);

}  // namespace polarnn
