#pragma once

// Deterministic random streams and grid-based inverse-CDF sampling.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "kslight/quadrature.hpp"

namespace kslight {

/// SplitMix64 finalizer; used to derive independent stream seeds.
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// mt19937_64 stream identified by (seed, stream index). The mapping to
/// doubles is fixed here (53 high bits) so sequences are reproducible across
/// standard-library implementations.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream);

    /// Uniform on [0, 1).
    [[nodiscard]] double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer on [0, n).
    [[nodiscard]] std::size_t index(std::size_t n) noexcept;

private:
    std::mt19937_64 engine_;
};

/// Piecewise-linear density on a uniform grid, sampled through the exact
/// inverse of its (piecewise-quadratic) CDF.
class InverseCdfSampler {
public:
    InverseCdfSampler(const Grid1D& grid, std::span<const double> density);

    /// Maps u ∈ [0, 1) to a value inside the grid.
    [[nodiscard]] double sample(double u) const;
    [[nodiscard]] double cdf(double x) const;
    [[nodiscard]] const Grid1D& grid() const noexcept { return grid_; }

private:
    Grid1D grid_;
    std::vector<double> density_;
    std::vector<double> cumulative_;  ///< normalized CDF at the nodes
};

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF.
[[nodiscard]] double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Asymptotic KS critical value at significance 0.01: 1.6276/√n.
[[nodiscard]] double ks_critical_value_1pct(std::size_t n);

}  // namespace kslight
