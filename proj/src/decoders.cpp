// SPDX-License-Identifier: Apache-2.0
#include "polarnn/decoders.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "polarnn/error.hpp"

namespace polarnn {

namespace {

inline double sgn(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline double f_sign_min(double a, double b) {
  return sgn(a) * sgn(b) * std::min(std::abs(a), std::abs(b));
}
inline double f_min_max(double a, double b) { return std::max(std::min(a, b), -std::max(a, b)); }
inline double f_abs_half(double a, double b) {
  return 0.5 * std::abs(a + b) - 0.5 * std::abs(a - b);
}
inline double f_relu(double a, double b) { return relu(a + b) - relu(a - b) - b; }

void check_batch(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  if (a.size() != b.size() || a.size() != out.size())
    throw ParameterError("f_batch: operand lengths differ");
}

// Below this many elements the thread team costs more than it saves.
constexpr std::size_t kParallelThreshold = 1 << 14;

template <typename F>
void parallel_apply(F f, const double* a, const double* b, double* out, std::ptrdiff_t n) {
#pragma omp parallel for simd schedule(static) if (n >= std::ptrdiff_t(kParallelThreshold))
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
}

}  // namespace

std::string_view to_string(FVariant v) {
  switch (v) {
    case FVariant::SignMin: return "sign_min";
    case FVariant::MinMax: return "min_max";
    case FVariant::AbsHalf: return "abs_half";
    case FVariant::Relu: return "relu";
  }
  return "?";
}

FVariant parse_fvariant(std::string_view name) {
  for (auto v : kAllFVariants)
    if (to_string(v) == name) return v;
  throw ParameterError("unknown f variant '" + std::string(name) + "'");
}

double f_function(double a, double b, FVariant variant) {
  switch (variant) {
    case FVariant::SignMin: return f_sign_min(a, b);
    case FVariant::MinMax: return f_min_max(a, b);
    case FVariant::AbsHalf: return f_abs_half(a, b);
    case FVariant::Relu: return f_relu(a, b);
  }
  return 0.0;
}

double g_function(double llr_top, double llr_bottom, double en_symbol) {
  return -sgn(en_symbol) * llr_top + llr_bottom;
}

void f_batch_serial(FVariant variant, std::span<const double> a, std::span<const double> b,
                    std::span<double> out) {
  check_batch(a, b, out);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f_function(a[i], b[i], variant);
}

void f_batch(FVariant variant, std::span<const double> a, std::span<const double> b,
             std::span<double> out) {
  check_batch(a, b, out);
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  switch (variant) {
    case FVariant::SignMin: parallel_apply(f_sign_min, a.data(), b.data(), out.data(), n); break;
    case FVariant::MinMax: parallel_apply(f_min_max, a.data(), b.data(), out.data(), n); break;
    case FVariant::AbsHalf: parallel_apply(f_abs_half, a.data(), b.data(), out.data(), n); break;
    case FVariant::Relu: parallel_apply(f_relu, a.data(), b.data(), out.data(), n); break;
  }
}

// ---------------------------------------------------------------------------
// Successive cancellation

namespace {

struct ScWork {
  FVariant variant;
  double min_leaf = std::numeric_limits<double>::infinity();
};

// llr: m node inputs. u: m output bits. work: >= m doubles, bits: >= m bytes.
void sc_node(ScWork& w, const double* llr, const std::uint8_t* frozen, std::uint8_t* u,
             std::size_t m, double* work, std::uint8_t* bits) {
  if (m == 1) {
    if (frozen[0]) {
      u[0] = 0;
    } else {
      u[0] = llr[0] < 0.0 ? 1 : 0;
      w.min_leaf = std::min(w.min_leaf, std::abs(llr[0]));
    }
    return;
  }
  const std::size_t h = m / 2;
  if (std::all_of(frozen, frozen + m, [](std::uint8_t f) { return f != 0; })) {
    std::fill(u, u + m, std::uint8_t{0});
    return;
  }
  for (std::size_t i = 0; i < h; ++i) work[i] = f_function(llr[i], llr[i + h], w.variant);
  sc_node(w, work, frozen, u, h, work + h, bits + h);

  std::copy(u, u + h, bits);
  polar_transform({bits, h});
  for (std::size_t i = 0; i < h; ++i)
    work[i] = g_function(llr[i], llr[i + h], bits[i] ? 1.0 : -1.0);
  sc_node(w, work, frozen + h, u + h, h, work + h, bits + h);
}

}  // namespace

ScDecoder::ScDecoder(PolarCode code, FVariant variant) : code_(std::move(code)), variant_(variant) {}

double ScDecoder::decode_input_word(std::span<const double> llrs, std::span<std::uint8_t> u) const {
  const std::size_t N = code_.length();
  if (llrs.size() != N)
    throw ParameterError("sc_decode: got " + std::to_string(llrs.size()) + " LLRs for N=" +
                         std::to_string(N));
  if (u.size() != N) throw ParameterError("sc_decode: output word length != N");
  std::vector<double> work(N);
  std::vector<std::uint8_t> bits(N);
  ScWork w{variant_};
  sc_node(w, llrs.data(), code_.frozen().data(), u.data(), N, work.data(), bits.data());
  return w.min_leaf;
}

BitWord ScDecoder::decode(std::span<const double> llrs) const {
  BitWord u(code_.length());
  decode_input_word(llrs, u);
  return extract_message(code_, u);
}

BitWord sc_decode(const PolarCode& code, std::span<const double> llrs, FVariant variant) {
  return ScDecoder(code, variant).decode(llrs);
}

// ---------------------------------------------------------------------------
// Maximum likelihood

MlDecoder::MlDecoder(PolarCode code) : code_(std::move(code)) {
  const std::size_t K = code_.message_size();
  if (K > kMaxMessageBits)
    throw ParameterError("ml_decode: K=" + std::to_string(K) + " exceeds the enumeration limit " +
                         std::to_string(kMaxMessageBits));
  BitWord unit(K, 0);
  for (std::size_t j = 0; j < K; ++j) {
    unit[j] = 1;
    rows_.push_back(encode(code_, unit));
    unit[j] = 0;
  }
}

BitWord MlDecoder::decode(std::span<const double> llrs) const {
  const std::size_t N = code_.length();
  const std::size_t K = code_.message_size();
  if (llrs.size() != N) throw ParameterError("ml_decode: LLR count != N");

  // Gray-code walk: each step toggles one message bit, i.e. XORs one row.
  BitWord cw(N, 0);
  auto metric_of = [&] {
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) m += cw[i] ? llrs[i] : -llrs[i];
    return m;
  };
  std::uint64_t best_value = 0;
  double best_metric = metric_of();
  const std::uint64_t count = std::uint64_t{1} << K;
  for (std::uint64_t i = 1; i < count; ++i) {
    const auto bit = static_cast<std::size_t>(std::countr_zero(i));
    const BitWord& row = rows_[K - 1 - bit];
    for (std::size_t p = 0; p < N; ++p) cw[p] ^= row[p];
    const std::uint64_t value = i ^ (i >> 1);
    const double m = metric_of();
    if (m < best_metric || (m == best_metric && value < best_value)) {
      best_metric = m;
      best_value = value;
    }
  }
  BitWord message(K);
  for (std::size_t j = 0; j < K; ++j) message[j] = (best_value >> (K - 1 - j)) & 1U;
  return message;
}

BitWord ml_decode(const PolarCode& code, std::span<const double> llrs) {
  return MlDecoder(code).decode(llrs);
}

}  // namespace polarnn
