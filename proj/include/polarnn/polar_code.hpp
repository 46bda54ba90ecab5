// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace polarnn {

/// Sequence of bits in {0,1}. Messages have K entries, codewords N.
using BitWord = std::vector<std::uint8_t>;

/// For each codeword position, the message-bit indices whose XOR forms it.
using XorSubsets = std::vector<std::vector<std::size_t>>;

/// A polar code (N, K): N = 2^n positions, K of them carry message bits.
/// Immutable once constructed.
class PolarCode {
 public:
  /// Frozen mask entries are 0/1; 1 marks a frozen position (always bit 0).
  PolarCode(int n, std::vector<std::uint8_t> frozen, double design_snr_db = 0.0);

  int log2_length() const noexcept { return n_; }
  std::size_t length() const noexcept { return frozen_.size(); }
  std::size_t message_size() const noexcept { return info_.size(); }
  double design_snr_db() const noexcept { return design_snr_db_; }
  double rate() const noexcept;

  const std::vector<std::uint8_t>& frozen() const noexcept { return frozen_; }
  bool is_frozen(std::size_t i) const { return frozen_.at(i) != 0; }

  /// Unfrozen positions in increasing order; message bit j lands at info_positions()[j].
  const std::vector<std::size_t>& info_positions() const noexcept { return info_; }

  /// Frozen mask rendered as a 0/1 string.
  std::string mask_string() const;

  friend bool operator==(const PolarCode& a, const PolarCode& b) {
    return a.n_ == b.n_ && a.frozen_ == b.frozen_;
  }

 private:
  int n_;
  std::vector<std::uint8_t> frozen_;
  std::vector<std::size_t> info_;
  double design_snr_db_;
};

/// Frozen set from the Bhattacharyya recursion at the given design SNR.
/// The K positions with the smallest parameter are unfrozen; ties unfreeze
/// the higher index.
PolarCode build_polar_code(int n, std::size_t K, double design_snr_db);

/// Per-position Bhattacharyya parameters used by build_polar_code.
std::vector<double> bhattacharyya_parameters(int n, double design_snr_db);

/// In-place GF(2) butterfly: u <- u * F^{(x)n}, F = [[1,0],[1,1]], natural order.
void polar_transform(std::span<std::uint8_t> u);

/// Scatter the message onto unfrozen positions and apply the polar transform.
BitWord encode(const PolarCode& code, std::span<const std::uint8_t> message);

/// Place message bits at the info positions of an all-zero N-word.
BitWord expand_message(const PolarCode& code, std::span<const std::uint8_t> message);

/// Pick the message bits back out of a full input word u.
BitWord extract_message(const PolarCode& code, std::span<const std::uint8_t> u);

/// Left and right subcodes of length N/2 (first/second half of the mask).
std::pair<PolarCode, PolarCode> split(const PolarCode& code);

XorSubsets xor_subsets(const PolarCode& code);

/// Text descriptor: "n=<n> K=<K> design_snr_db=<x> frozen=<0/1 string>".
std::string to_descriptor(const PolarCode& code);
PolarCode parse_descriptor(const std::string& text);

}  // namespace polarnn
