#pragma once

// Data-parallel inner loops shared by the batch engines: batched autoregression
// updates, series accumulation, coupling-violation counts, ECDF counts and
// moment sums. Each kernel has a scalar reference and an AVX2 variant; the
// variant is chosen once at runtime from CPUID and can be overridden with
// set_isa() or the environment variable MBP_SIMD=scalar.

#include <cstddef>
#include <span>

namespace mbp::kernels {

enum class Isa { Scalar, Avx2 };

struct SumPair {
    double sum = 0.0;
    double sum_sq = 0.0;
};

const char* isa_name(Isa isa) noexcept;
// Best variant the CPU supports.
Isa detected_isa() noexcept;
Isa active_isa() noexcept;
// Throws std::invalid_argument if `isa` is not supported by this CPU/build.
void set_isa(Isa isa);

// y[i] += a * x[i]
void axpy(double a, std::span<const double> x, std::span<double> y);
// state[i] = fma(scale, state[i], shift) + noise[i]
void affine_noise(std::span<double> state, double scale, double shift,
                  std::span<const double> noise);
// m[i] = max(m[i], |a * x[i]|)
void running_max_abs(double a, std::span<const double> x, std::span<double> m);
// #{i : a[i] > b[i]}
std::size_t count_greater(std::span<const double> a, std::span<const double> b);
// #{i : x[i] <= t}
std::size_t count_less_equal(std::span<const double> x, double t);
// (Σ x, Σ x²)
SumPair sum_and_squares(std::span<const double> x);

namespace scalar {
void axpy(double a, std::span<const double> x, std::span<double> y);
void affine_noise(std::span<double> state, double scale, double shift,
                  std::span<const double> noise);
void running_max_abs(double a, std::span<const double> x, std::span<double> m);
std::size_t count_greater(std::span<const double> a, std::span<const double> b);
std::size_t count_less_equal(std::span<const double> x, double t);
SumPair sum_and_squares(std::span<const double> x);
} // namespace scalar

#if defined(MBP_HAVE_AVX2)
namespace avx2 {
void axpy(double a, std::span<const double> x, std::span<double> y);
void affine_noise(std::span<double> state, double scale, double shift,
                  std::span<const double> noise);
void running_max_abs(double a, std::span<const double> x, std::span<double> m);
std::size_t count_greater(std::span<const double> a, std::span<const double> b);
std::size_t count_less_equal(std::span<const double> x, double t);
SumPair sum_and_squares(std::span<const double> x);
} // namespace avx2
#endif

} // namespace mbp::kernels
