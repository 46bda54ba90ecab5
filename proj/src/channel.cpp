// SPDX-License-Identifier: Apache-2.0
#include "polarnn/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "polarnn/error.hpp"

namespace polarnn {

double sigma_from_snr(double snr_db, double rate) {
  if (!(rate > 0.0)) throw ParameterError("sigma_from_snr: rate must be positive");
  return std::sqrt(1.0 / (2.0 * rate * std::pow(10.0, snr_db / 10.0)));
}

std::vector<double> transmit(std::span<const std::uint8_t> codeword, double sigma, Rng& rng) {
  if (sigma < 0.0) throw ParameterError("transmit: sigma must be non-negative");
  std::vector<double> y(codeword.size());
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 2.0 * codeword[i] - 1.0;
    if (sigma > 0.0) y[i] += noise(rng);
  }
  return y;
}

std::vector<double> llr_from_received(std::span<const double> received, double sigma,
                                      double l_max) {
  if (!(sigma > 0.0)) throw ParameterError("llr_from_received: sigma must be positive");
  const double scale = -2.0 / (sigma * sigma);
  std::vector<double> llrs(received.size());
  for (std::size_t i = 0; i < llrs.size(); ++i)
    llrs[i] = std::clamp(scale * received[i], -l_max, l_max);
  return llrs;
}

Frame make_frame(const PolarCode& code, double sigma, Rng& rng, double l_max) {
  Frame f;
  f.message.resize(code.message_size());
  for (auto& b : f.message) b = static_cast<std::uint8_t>(rng() >> 63);
  f.codeword = encode(code, f.message);
  f.received = transmit(f.codeword, sigma, rng);
  if (sigma > 0.0) {
    f.llrs = llr_from_received(f.received, sigma, l_max);
  } else {
    f.llrs.resize(f.codeword.size());
    for (std::size_t i = 0; i < f.llrs.size(); ++i) f.llrs[i] = f.codeword[i] ? -l_max : l_max;
  }
  return f;
}

std::string frame_csv_row(const Frame& frame) {
  std::string row;
  for (auto b : frame.message) row += static_cast<char>('0' + b);
  row += ',';
  for (auto b : frame.codeword) row += static_cast<char>('0' + b);
  row += ',';
  char buf[32];
  for (std::size_t i = 0; i < frame.llrs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", frame.llrs[i]);
    if (i) row += ';';
    row += buf;
  }
  return row;
}

}  // namespace polarnn
