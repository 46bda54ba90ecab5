// SPDX-License-Identifier: Apache-2.0
#include "polarnn/polar_code.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "polarnn/error.hpp"

namespace polarnn {

PolarCode::PolarCode(int n, std::vector<std::uint8_t> frozen, double design_snr_db)
    : n_(n), frozen_(std::move(frozen)), design_snr_db_(design_snr_db) {
  if (n < 0 || n > 24)
    throw ParameterError("polar code: n must be in [0, 24], got " + std::to_string(n));
  if (frozen_.size() != (std::size_t{1} << n))
    throw ParameterError("polar code: frozen mask length " + std::to_string(frozen_.size()) +
                         " != 2^" + std::to_string(n));
  for (std::size_t i = 0; i < frozen_.size(); ++i) {
    if (frozen_[i] > 1) throw ParameterError("polar code: frozen mask entries must be 0 or 1");
    if (!frozen_[i]) info_.push_back(i);
  }
}

double PolarCode::rate() const noexcept {
  return static_cast<double>(message_size()) / static_cast<double>(length());
}

std::string PolarCode::mask_string() const {
  std::string s(frozen_.size(), '0');
  for (std::size_t i = 0; i < frozen_.size(); ++i)
    if (frozen_[i]) s[i] = '1';
  return s;
}

std::vector<double> bhattacharyya_parameters(int n, double design_snr_db) {
  if (n < 0 || n > 24) throw ParameterError("bhattacharyya: n out of range");
  const std::size_t N = std::size_t{1} << n;
  std::vector<double> z(N);
  z[0] = std::exp(-std::pow(10.0, design_snr_db / 10.0));
  // Each level doubles the populated prefix: the first half of a block takes
  // the degraded channel, the second half the upgraded one.
  for (std::size_t width = 1; width < N; width *= 2) {
    for (std::size_t b = 0; b < width; ++b) {
      const std::size_t stride = N / width;
      const double parent = z[b * stride];
      z[b * stride] = 2.0 * parent - parent * parent;
      z[b * stride + stride / 2] = parent * parent;
    }
  }
  return z;
}

PolarCode build_polar_code(int n, std::size_t K, double design_snr_db) {
  if (n < 0 || n > 24) throw ParameterError("build_polar_code: n out of range");
  const std::size_t N = std::size_t{1} << n;
  if (K > N)
    throw ParameterError("build_polar_code: K=" + std::to_string(K) + " exceeds N=" +
                         std::to_string(N));
  const auto z = bhattacharyya_parameters(n, design_snr_db);
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (z[a] != z[b]) return z[a] < z[b];
    return a > b;
  });
  std::vector<std::uint8_t> frozen(N, 1);
  for (std::size_t i = 0; i < K; ++i) frozen[order[i]] = 0;
  return PolarCode(n, std::move(frozen), design_snr_db);
}

void polar_transform(std::span<std::uint8_t> u) {
  const std::size_t N = u.size();
  for (std::size_t h = 1; h < N; h *= 2)
    for (std::size_t i = 0; i < N; i += 2 * h)
      for (std::size_t j = i; j < i + h; ++j) u[j] ^= u[j + h];
}

BitWord expand_message(const PolarCode& code, std::span<const std::uint8_t> message) {
  if (message.size() != code.message_size())
    throw ParameterError("message length " + std::to_string(message.size()) + " != K=" +
                         std::to_string(code.message_size()));
  BitWord u(code.length(), 0);
  const auto& info = code.info_positions();
  for (std::size_t j = 0; j < info.size(); ++j) {
    if (message[j] > 1) throw ParameterError("message bits must be 0 or 1");
    u[info[j]] = message[j];
  }
  return u;
}

BitWord extract_message(const PolarCode& code, std::span<const std::uint8_t> u) {
  if (u.size() != code.length()) throw ParameterError("input word length != N");
  BitWord m;
  m.reserve(code.message_size());
  for (auto i : code.info_positions()) m.push_back(u[i]);
  return m;
}

BitWord encode(const PolarCode& code, std::span<const std::uint8_t> message) {
  BitWord u = expand_message(code, message);
  polar_transform(u);
  return u;
}

std::pair<PolarCode, PolarCode> split(const PolarCode& code) {
  if (code.length() < 2) throw ParameterError("split: a length-1 code cannot be split");
  const auto& f = code.frozen();
  const auto half = f.begin() + static_cast<std::ptrdiff_t>(f.size() / 2);
  return {PolarCode(code.log2_length() - 1, {f.begin(), half}, code.design_snr_db()),
          PolarCode(code.log2_length() - 1, {half, f.end()}, code.design_snr_db())};
}

XorSubsets xor_subsets(const PolarCode& code) {
  XorSubsets subsets(code.length());
  const std::size_t K = code.message_size();
  BitWord unit(K, 0);
  for (std::size_t i = 0; i < K; ++i) {
    unit[i] = 1;
    const BitWord row = encode(code, unit);
    unit[i] = 0;
    for (std::size_t j = 0; j < row.size(); ++j)
      if (row[j]) subsets[j].push_back(i);
  }
  return subsets;
}

std::string to_descriptor(const PolarCode& code) {
  char snr[32];
  std::snprintf(snr, sizeof snr, "%.17g", code.design_snr_db());
  std::ostringstream os;
  os << "n=" << code.log2_length() << " K=" << code.message_size() << " design_snr_db=" << snr
     << " frozen=" << code.mask_string();
  return os.str();
}

PolarCode parse_descriptor(const std::string& text) {
  std::istringstream is(text);
  std::string tok;
  int n = -1;
  long K = -1;
  double snr = 0.0;
  std::string mask;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("code descriptor: bad token '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    try {
      if (key == "n")
        n = std::stoi(val);
      else if (key == "K")
        K = std::stol(val);
      else if (key == "design_snr_db")
        snr = std::stod(val);
      else if (key == "frozen")
        mask = val;
      else
        throw FormatError("code descriptor: unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw FormatError("code descriptor: bad value for '" + key + "'");
    }
  }
  if (n < 0 || mask.empty()) throw FormatError("code descriptor: missing n or frozen");
  std::vector<std::uint8_t> frozen;
  for (char c : mask) {
    if (c != '0' && c != '1') throw FormatError("code descriptor: frozen mask must be 0/1");
    frozen.push_back(c == '1');
  }
  PolarCode code(n, std::move(frozen), snr);
  if (K >= 0 && static_cast<std::size_t>(K) != code.message_size())
    throw FormatError("code descriptor: K does not match frozen mask");
  return code;
}

}  // namespace polarnn
