#include "kslight/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "kslight/errors.hpp"

namespace kslight {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 1))) {}

std::size_t RandomStream::index(std::size_t n) noexcept {
    const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return std::min(i, n - 1);
}

InverseCdfSampler::InverseCdfSampler(const Grid1D& grid, std::span<const double> density)
    : grid_(grid), density_(density.begin(), density.end()) {
    grid_.validate();
    if (density_.size() != grid_.points) throw InvalidConfig("density length does not match grid");
    for (auto& d : density_) {
        if (!std::isfinite(d)) throw InvalidConfig("density must be finite");
        d = std::max(d, 0.0);
    }
    cumulative_.assign(density_.size(), 0.0);
    const double h = grid_.step();
    for (std::size_t i = 1; i < density_.size(); ++i) {
        cumulative_[i] = cumulative_[i - 1] + 0.5 * h * (density_[i - 1] + density_[i]);
    }
    const double total = cumulative_.back();
    if (!(total > 0.0)) throw InvalidConfig("density has zero mass on the grid");
    for (auto& c : cumulative_) c /= total;
    for (auto& d : density_) d /= total;
}

double InverseCdfSampler::sample(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    i = std::min(i, density_.size() - 2);
    const double h = grid_.step();
    const double f0 = density_[i];
    const double f1 = density_[i + 1];
    const double need = (u - cumulative_[i]) / h;  // ∫₀ᵗ (f0 + (f1−f0)s) ds = need
    double t = 0.0;
    const double slope = f1 - f0;
    if (std::abs(slope) < 1e-12 * std::max(f0, f1)) {
        t = f0 > 0.0 ? need / f0 : 0.0;
    } else {
        // slope/2 t² + f0 t − need = 0, stable root.
        const double disc = std::max(0.0, f0 * f0 + 2.0 * slope * need);
        t = 2.0 * need / (f0 + std::sqrt(disc));
    }
    t = std::clamp(t, 0.0, 1.0);
    return grid_.at(i) + t * h;
}

double InverseCdfSampler::cdf(double x) const {
    if (x <= grid_.lo) return 0.0;
    if (x >= grid_.hi) return 1.0;
    const double h = grid_.step();
    const auto i = std::min(static_cast<std::size_t>((x - grid_.lo) / h), density_.size() - 2);
    const double t = (x - grid_.at(i)) / h;
    const double f0 = density_[i];
    const double f1 = density_[i + 1];
    return std::min(1.0, cumulative_[i] + h * (f0 * t + 0.5 * (f1 - f0) * t * t));
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw InvalidConfig("KS statistic needs samples");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

double ks_critical_value_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

}  // namespace kslight
