// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "polarnn/polar_code.hpp"

namespace polarnn {

/// Four arithmetically different forms of the same left-propagation rule
///   f(a, b) = sign(a) sign(b) min(|a|, |b|),  sign(0) = 0.
enum class FVariant { SignMin, MinMax, AbsHalf, Relu };

inline constexpr std::array<FVariant, 4> kAllFVariants = {FVariant::SignMin, FVariant::MinMax,
                                                          FVariant::AbsHalf, FVariant::Relu};

std::string_view to_string(FVariant v);
FVariant parse_fvariant(std::string_view name);

double f_function(double a, double b, FVariant variant = FVariant::SignMin);

/// Right propagation: -sign(en_symbol) * llr_top + llr_bottom.
double g_function(double llr_top, double llr_bottom, double en_symbol);

/// Elementwise f over equal-length arrays. Serial reference.
void f_batch_serial(FVariant variant, std::span<const double> a, std::span<const double> b,
                    std::span<double> out);

/// Elementwise f over equal-length arrays, OpenMP-parallel and SIMD-annotated.
void f_batch(FVariant variant, std::span<const double> a, std::span<const double> b,
             std::span<double> out);

/// Successive-cancellation decoder. Stateless apart from the code, so one
/// instance may be shared across threads.
class ScDecoder {
 public:
  explicit ScDecoder(PolarCode code, FVariant variant = FVariant::SignMin);

  const PolarCode& code() const noexcept { return code_; }

  BitWord decode(std::span<const double> llrs) const;

  /// Full N-bit input word u (frozen positions are 0). Returns the smallest
  /// |LLR| seen at any information-bit decision.
  double decode_input_word(std::span<const double> llrs, std::span<std::uint8_t> u) const;

 private:
  PolarCode code_;
  FVariant variant_;
};

BitWord sc_decode(const PolarCode& code, std::span<const double> llrs,
                  FVariant variant = FVariant::SignMin);

/// Exhaustive maximum-likelihood decoder: the message whose codeword symbols
/// s = 2c-1 minimise sum(llr * s). Ties go to the smallest message value,
/// reading message bit 0 as the most significant bit.
class MlDecoder {
 public:
  static constexpr std::size_t kMaxMessageBits = 20;

  explicit MlDecoder(PolarCode code);

  const PolarCode& code() const noexcept { return code_; }
  BitWord decode(std::span<const double> llrs) const;

 private:
  PolarCode code_;
  std::vector<BitWord> rows_;  // codeword of each unit message
};

BitWord ml_decode(const PolarCode& code, std::span<const double> llrs);

}  // namespace polarnn
