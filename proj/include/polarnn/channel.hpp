// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "polarnn/parallel.hpp"
#include "polarnn/polar_code.hpp"

namespace polarnn {

/// Default saturation constant L_M: channel LLRs are clamped to [-L_M, L_M].
inline constexpr double kDefaultLlrLimit = 20.0;

/// Noise standard deviation for Eb/N0 = snr_db at the given code rate.
double sigma_from_snr(double snr_db, double rate);

struct ChannelConfig {
  double snr_db;
  double rate;
  double sigma;

  static ChannelConfig from_snr(double snr_db, double rate) {
    return {snr_db, rate, sigma_from_snr(snr_db, rate)};
  }
};

/// BPSK (bit b -> 2b-1) plus N(0, sigma^2) noise.
std::vector<double> transmit(std::span<const std::uint8_t> codeword, double sigma, Rng& rng);

/// llr = -2 y / sigma^2, clamped to [-l_max, l_max]. Positive favors bit 0.
std::vector<double> llr_from_received(std::span<const double> received, double sigma,
                                      double l_max = kDefaultLlrLimit);

struct Frame {
  BitWord message;
  BitWord codeword;
  std::vector<double> received;
  std::vector<double> llrs;
};

/// Uniform random message through encoder and channel. sigma == 0 gives
/// noiseless symbols whose LLRs saturate at +/-l_max.
Frame make_frame(const PolarCode& code, double sigma, Rng& rng, double l_max = kDefaultLlrLimit);

/// "message,codeword,llr0;llr1;..." debugging dump.
std::string frame_csv_row(const Frame& frame);

}  // namespace polarnn
