// SPDX-License-Identifier: Apache-2.0
#include "polarnn/eval_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "polarnn/error.hpp"
#include "polarnn/nn_builder.hpp"

namespace polarnn {

namespace {

constexpr std::size_t kBlock = 256;
constexpr std::size_t kBlocksPerRound = 16;

std::vector<Frame> draw_block(const PolarCode& code, double sigma, std::uint64_t seed,
                              std::size_t snr_index, std::size_t block, std::size_t count,
                              double l_max) {
  Rng rng = substream(seed, snr_index, block);
  std::vector<Frame> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) frames.push_back(make_frame(code, sigma, rng, l_max));
  return frames;
}

struct Tally {
  std::size_t frames = 0, bit_errors = 0, differing_frames = 0, differing_bits = 0;
};

std::size_t block_size(const StopRule& stop, std::size_t block) {
  if (stop.max_frames == 0) return kBlock;
  const std::size_t first = block * kBlock;
  return first >= stop.max_frames ? 0 : std::min(kBlock, stop.max_frames - first);
}

// Shared engine for run_ber and compare_decoders.
std::vector<BerPoint> simulate(const std::vector<DecoderSpec>& decoders, const PolarCode& code,
                               std::span<const double> snr_list, const StopRule& stop,
                               std::uint64_t seed, double l_max, bool parallel) {
  if (snr_list.empty()) throw ParameterError("simulate: empty SNR list");
  if (decoders.empty()) throw ParameterError("simulate: no decoders");
  const std::size_t D = decoders.size();
  const std::size_t K = code.message_size();
  std::vector<BerPoint> points;
  for (std::size_t s = 0; s < snr_list.size(); ++s) {
    const double sigma = sigma_from_snr(snr_list[s], code.rate());
    std::vector<Tally> total(D);
    for (std::size_t start = 0;; start += kBlocksPerRound) {
      std::vector<std::vector<Tally>> parts(kBlocksPerRound, std::vector<Tally>(D));
      auto work = [&](std::size_t j) {
        const std::size_t b = start + j;
        const std::size_t count = block_size(stop, b);
        if (count == 0) return;
        const auto frames = draw_block(code, sigma, seed, s, b, count, l_max);
        std::vector<std::vector<BitWord>> decided(D);
        for (std::size_t d = 0; d < D; ++d) decided[d] = decoders[d].decode_block(frames);
        for (std::size_t d = 0; d < D; ++d) {
          Tally& t = parts[j][d];
          t.frames = count;
          for (std::size_t i = 0; i < count; ++i) {
            const BitWord& got = decided[d][i];
            std::size_t diff = 0;
            for (std::size_t k = 0; k < K; ++k) {
              t.bit_errors += got[k] != frames[i].message[k];
              diff += got[k] != decided[0][i][k];
            }
            t.differing_bits += diff;
            t.differing_frames += diff > 0;
          }
        }
      };
      if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::size_t j = 0; j < kBlocksPerRound; ++j) work(j);
      } else {
        for (std::size_t j = 0; j < kBlocksPerRound; ++j) work(j);
      }
      for (const auto& part : parts)
        for (std::size_t d = 0; d < D; ++d) {
          total[d].frames += part[d].frames;
          total[d].bit_errors += part[d].bit_errors;
          total[d].differing_frames += part[d].differing_frames;
          total[d].differing_bits += part[d].differing_bits;
        }
      const bool capped = stop.max_frames && total[0].frames >= stop.max_frames;
      const bool done = std::all_of(total.begin(), total.end(), [&](const Tally& t) {
        return t.frames >= stop.min_frames && t.bit_errors >= stop.min_bit_errors;
      });
      if (capped || done || K == 0) break;
    }
    for (std::size_t d = 0; d < D; ++d)
      points.push_back({snr_list[s], decoders[d].name, total[d].frames, total[d].frames * K,
                        total[d].bit_errors, total[d].differing_frames, total[d].differing_bits});
  }
  return points;
}

}  // namespace

DecoderSpec sc_decoder_spec(const PolarCode& code, FVariant variant, std::string name) {
  auto sc = std::make_shared<const ScDecoder>(code, variant);
  return {std::move(name), [sc](const std::vector<Frame>& frames) {
            std::vector<BitWord> out;
            out.reserve(frames.size());
            for (const auto& f : frames) out.push_back(sc->decode(f.llrs));
            return out;
          }};
}

DecoderSpec ml_decoder_spec(const PolarCode& code, std::string name) {
  auto ml = std::make_shared<const MlDecoder>(code);
  return {std::move(name), [ml](const std::vector<Frame>& frames) {
            std::vector<BitWord> out;
            out.reserve(frames.size());
            for (const auto& f : frames) out.push_back(ml->decode(f.llrs));
            return out;
          }};
}

DecoderSpec nn_decoder_spec(const NeuralDecoder& net, std::string name) {
  auto shared = std::make_shared<const NeuralDecoder>(net);
  return {std::move(name), [shared](const std::vector<Frame>& frames) {
            const auto& n = *shared;
            Batch in(static_cast<Eigen::Index>(n.input_dim), static_cast<Eigen::Index>(frames.size()));
            for (std::size_t i = 0; i < frames.size(); ++i)
              for (std::size_t r = 0; r < n.input_dim; ++r)
                in(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = frames[i].llrs[r];
            const Batch out = forward_batch(n, in);
            std::vector<BitWord> words(frames.size(), BitWord(n.output_dim));
            for (std::size_t i = 0; i < frames.size(); ++i)
              for (std::size_t k = 0; k < n.output_dim; ++k)
                words[i][k] = out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) > 0.0;
            return words;
          }};
}

std::vector<BerPoint> run_ber(const DecoderSpec& decoder, const PolarCode& code,
                              std::span<const double> snr_list, const StopRule& stop,
                              std::uint64_t seed, double l_max) {
  return simulate({decoder}, code, snr_list, stop, seed, l_max, true);
}

std::vector<BerPoint> run_ber_serial(const DecoderSpec& decoder, const PolarCode& code,
                                     std::span<const double> snr_list, const StopRule& stop,
                                     std::uint64_t seed, double l_max) {
  return simulate({decoder}, code, snr_list, stop, seed, l_max, false);
}

std::vector<BerPoint> compare_decoders(const PolarCode& code,
                                       const std::vector<DecoderSpec>& decoders,
                                       std::span<const double> snr_list, const StopRule& stop,
                                       std::uint64_t seed, double l_max) {
  return simulate(decoders, code, snr_list, stop, seed, l_max, true);
}

void write_ber_csv(std::ostream& os, const std::vector<BerPoint>& points) {
  os << "snr_db,decoder,frames,bits,bit_errors,ber\n";
  char buf[160];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.6g,%s,%zu,%zu,%zu,%.9g\n", p.snr_db, p.decoder.c_str(),
                  p.frames, p.bits, p.bit_errors, p.ber());
    os << buf;
  }
}

double ber_sigma(const BerPoint& p) {
  if (p.bits == 0) return 0.0;
  const double b = p.ber();
  return std::sqrt(b * (1.0 - b) / static_cast<double>(p.bits));
}

EquivalenceReport check_equivalence(const PolarCode& code, const NeuralDecoder& net,
                                    double snr_db, std::size_t frames, std::uint64_t seed) {
  if (net.input_dim != code.length() || net.output_dim != code.message_size())
    throw StructuralError("check_equivalence: network does not match code");
  const ScDecoder sc(code);
  const double sigma = sigma_from_snr(snr_db, code.rate());
  const std::size_t blocks = (frames + kBlock - 1) / kBlock;
  std::vector<EquivalenceReport> parts(blocks);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t count = std::min(kBlock, frames - b * kBlock);
    const auto block = draw_block(code, sigma, seed, 0, b, count, net.l_max);
    EquivalenceReport& r = parts[b];
    BitWord u(code.length());
    for (const auto& f : block) {
      const auto trace = forward_trace(net, f.llrs);
      const Vector& out = trace.output();
      sc.decode_input_word(f.llrs, u);
      const BitWord ref = extract_message(code, u);
      std::size_t diff = 0;
      for (std::size_t k = 0; k < ref.size(); ++k)
        diff += (out[static_cast<Eigen::Index>(k)] > 0.0) != (ref[k] != 0);
      const bool guarded = min_probe_llr(net, trace) < net.eps;
      ++r.frames;
      r.bits += ref.size();
      r.differing_bits += diff;
      r.differing_frames += diff > 0;
      r.guarded_frames += guarded;
      r.unexplained_frames += diff > 0 && !guarded;
    }
  }
  EquivalenceReport total;
  for (const auto& r : parts) {
    total.frames += r.frames;
    total.bits += r.bits;
    total.differing_bits += r.differing_bits;
    total.differing_frames += r.differing_frames;
    total.guarded_frames += r.guarded_frames;
    total.unexplained_frames += r.unexplained_frames;
  }
  return total;
}

BenchReport bench_kernels(const std::vector<Kernel>& kernels, std::size_t batch,
                          std::size_t reps, std::uint64_t seed) {
  if (batch == 0 || reps == 0) throw ParameterError("bench: batch and reps must be positive");
  if (kernels.empty()) throw ParameterError("bench: no kernels");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::vector<double> a(batch), b(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
  }
  // A few exact ties and zeros so sign handling is part of the check.
  for (std::size_t i = 0; i < std::min<std::size_t>(batch, 8); ++i) {
    a[i] = static_cast<double>(i % 3) - 1.0;
    b[i] = i % 2 ? a[i] : -a[i];
  }

  std::vector<std::vector<double>> outs(kernels.size(), std::vector<double>(batch));
  for (std::size_t k = 0; k < kernels.size(); ++k) kernels[k].run(a, b, outs[k]);
  for (std::size_t k = 1; k < kernels.size(); ++k)
    for (std::size_t i = 0; i < batch; ++i)
      if (!(std::abs(outs[k][i] - outs[0][i]) <= 1e-12))
        throw EquivalenceError("bench: kernel '" + kernels[k].name + "' disagrees with '" +
                               kernels[0].name + "' at index " + std::to_string(i));

  BenchReport report;
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    std::vector<double> times(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      kernels[k].run(a, b, outs[k]);
      const auto t1 = std::chrono::steady_clock::now();
      times[r] = std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(batch);
    }
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(reps / 2), times.end());
    report.rows.push_back({kernels[k].name, batch, reps, std::max(times[reps / 2], 1e-6), 0.0});
  }
  for (auto& row : report.rows) row.rel_speed = report.rows[0].median_ns_per_op / row.median_ns_per_op;
  return report;
}

BenchReport bench_f_variants(std::size_t batch, std::size_t reps, std::uint64_t seed) {
  std::vector<Kernel> kernels;
  for (FVariant v : kAllFVariants)
    kernels.push_back({std::string(to_string(v)), [v](std::span<const double> a, std::span<const double> b,
                                                      std::span<double> out) { f_batch(v, a, b, out); }});
  return bench_kernels(kernels, batch, reps, seed);
}

void write_bench_csv(std::ostream& os, const BenchReport& report) {
  os << "variant,batch,reps,median_ns_per_op,rel_speed\n";
  char buf[160];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.6g,%.6g\n", r.variant.c_str(), r.batch, r.reps,
                  r.median_ns_per_op, r.rel_speed);
    os << buf;
  }
}

}  // namespace polarnn
