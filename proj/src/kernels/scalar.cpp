#include <algorithm>
#include <cmath>

#include "mbp/kernels.hpp"

namespace mbp::kernels::scalar {

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::fma(a, x[i], y[i]);
}

void affine_noise(std::span<double> state, double scale, double shift,
                  std::span<const double> noise) {
    for (std::size_t i = 0; i < state.size(); ++i) {
        state[i] = std::fma(scale, state[i], shift) + noise[i];
    }
}

void running_max_abs(double a, std::span<const double> x, std::span<double> m) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::max(m[i], std::abs(a * x[i]));
}

std::size_t count_greater(std::span<const double> a, std::span<const double> b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += a[i] > b[i] ? 1 : 0;
    return n;
}

std::size_t count_less_equal(std::span<const double> x, double t) {
    std::size_t n = 0;
    for (double v : x) n += v <= t ? 1 : 0;
    return n;
}

SumPair sum_and_squares(std::span<const double> x) {
    SumPair s;
    for (double v : x) {
        s.sum += v;
        s.sum_sq += v * v;
    }
    return s;
}

} // namespace mbp::kernels::scalar
