#include "kslight/hermite.hpp"

#include <cmath>
#include <stdexcept>

namespace kslight {

namespace {

// ψ_n(x) = 2^{1/4} φ_n(√2 x) with φ_n the unit-frequency oscillator functions.
const double kNorm0 = std::pow(2.0 / 3.14159265358979323846, 0.25);

}  // namespace

double hermite_psi(int n, double x) {
    if (n < 0) throw std::invalid_argument("hermite_psi: n must be non-negative");
    const double xi = std::sqrt(2.0) * x;
    double prev = 0.0;
    double cur = kNorm0 * std::exp(-x * x);
    for (int k = 0; k < n; ++k) {
        const double next = std::sqrt(2.0 / (k + 1)) * xi * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

std::vector<double> hermite_table(int max_n, std::span<const double> xs) {
    if (max_n < 0) throw std::invalid_argument("hermite_table: max_n must be non-negative");
    const std::size_t m = xs.size();
    std::vector<double> table(static_cast<std::size_t>(max_n + 1) * m);
    for (std::size_t i = 0; i < m; ++i) table[i] = kNorm0 * std::exp(-xs[i] * xs[i]);
    if (max_n >= 1) {
        for (std::size_t i = 0; i < m; ++i) table[m + i] = 2.0 * xs[i] * table[i];
    }
    for (int k = 1; k < max_n; ++k) {
        const double c1 = std::sqrt(2.0 / (k + 1)) * std::sqrt(2.0);
        const double c2 = std::sqrt(static_cast<double>(k) / (k + 1));
        const double* cur = &table[static_cast<std::size_t>(k) * m];
        const double* prev = &table[static_cast<std::size_t>(k - 1) * m];
        double* next = &table[static_cast<std::size_t>(k + 1) * m];
        for (std::size_t i = 0; i < m; ++i) next[i] = c1 * xs[i] * cur[i] - c2 * prev[i];
    }
    return table;
}

}  // namespace kslight
