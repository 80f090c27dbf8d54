#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "mbp/kernels.hpp"

namespace mbp::kernels {

namespace {

Isa initial_isa() noexcept {
    if (const char* env = std::getenv("MBP_SIMD"); env != nullptr && std::strcmp(env, "scalar") == 0) {
        return Isa::Scalar;
    }
    return detected_isa();
}

std::atomic<Isa>& current() noexcept {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

} // namespace

const char* isa_name(Isa isa) noexcept {
    return isa == Isa::Avx2 ? "avx2" : "scalar";
}

Isa detected_isa() noexcept {
#if defined(MBP_HAVE_AVX2)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::Avx2;
#endif
    return Isa::Scalar;
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
    if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) {
        throw std::invalid_argument("AVX2 kernels are not available on this CPU or build");
    }
    current().store(isa, std::memory_order_relaxed);
}

#if defined(MBP_HAVE_AVX2)
#define MBP_DISPATCH(fn, ...) \
    (active_isa() == Isa::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define MBP_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void axpy(double a, std::span<const double> x, std::span<double> y) {
    MBP_DISPATCH(axpy, a, x, y);
}

void affine_noise(std::span<double> state, double scale, double shift,
                  std::span<const double> noise) {
    MBP_DISPATCH(affine_noise, state, scale, shift, noise);
}

void running_max_abs(double a, std::span<const double> x, std::span<double> m) {
    MBP_DISPATCH(running_max_abs, a, x, m);
}

std::size_t count_greater(std::span<const double> a, std::span<const double> b) {
    return MBP_DISPATCH(count_greater, a, b);
}

std::size_t count_less_equal(std::span<const double> x, double t) {
    return MBP_DISPATCH(count_less_equal, x, t);
}

SumPair sum_and_squares(std::span<const double> x) {
    return MBP_DISPATCH(sum_and_squares, x);
}

#undef MBP_DISPATCH

} // namespace mbp::kernels
