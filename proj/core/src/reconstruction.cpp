#include "kslight/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "kslight/errors.hpp"

namespace kslight {

namespace {

constexpr double kPiR = 3.14159265358979323846;

struct Projection {
    double angle = 0.0;
    std::vector<double> values;
    double weight = 0.0;
};

std::vector<Projection> gather_projections(std::span<const HomodyneRecord> records, int sign) {
    // Fold direction into [0, π); the opposite direction flips the value.
    std::map<long long, Projection> by_angle;
    for (const auto& r : records) {
        double a = std::fmod(sign * r.chi, 2.0 * kPiR);
        if (a < 0.0) a += 2.0 * kPiR;
        double v = r.value;
        if (a >= kPiR) {
            a -= kPiR;
            v = -v;
        }
        const auto key = static_cast<long long>(std::llround(a * 1e9)) % static_cast<long long>(std::llround(kPiR * 1e9));
        auto& p = by_angle[key];
        p.angle = static_cast<double>(key) * 1e-9;
        p.values.push_back(v);
    }
    std::vector<Projection> out;
    out.reserve(by_angle.size());
    for (auto& [k, p] : by_angle) out.push_back(std::move(p));
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double prev = i == 0 ? out[n - 1].angle - kPiR : out[i - 1].angle;
        const double next = i + 1 == n ? out[0].angle + kPiR : out[i + 1].angle;
        out[i].weight = 0.5 * (next - prev);
    }
    if (n == 1) out[0].weight = kPiR;
    return out;
}

}  // namespace

std::string_view to_string(ReconstructionMethod m) noexcept {
    return m == ReconstructionMethod::Scatter ? "scatter" : "back-projection";
}

ReconstructionMethod parse_method(std::string_view text) {
    if (text == "scatter") return ReconstructionMethod::Scatter;
    if (text == "back-projection" || text == "fbp") return ReconstructionMethod::BackProjection;
    throw InvalidConfig("unknown reconstruction method '" + std::string(text) + "'");
}

double Histogram2D::integral() const {
    double s = 0.0;
    for (double d : density) s += d;
    return s * width() * width();
}

Histogram2D reconstruct_joint(std::span<const HomodyneRecord> records, const ReconstructOptions& options) {
    if (records.empty()) throw InvalidConfig("no records to reconstruct");
    if (options.bins < 2) throw InvalidConfig("need at least 2 bins");
    if (options.sign != 1 && options.sign != -1) throw InvalidConfig("sign must be +1 or -1");
    double half = 0.0;
    if (options.half_width) {
        half = *options.half_width;
        if (!(half > 0.0) || !std::isfinite(half)) throw InvalidConfig("half width must be positive");
    } else {
        for (const auto& r : records) half = std::max(half, std::abs(r.value));
        half = half > 0.0 ? half * (1.0 + 1e-9) : 1.0;
    }

    Histogram2D h;
    h.lo = -half;
    h.hi = half;
    h.bins = options.bins;
    h.method = options.method;
    h.counts.assign(h.bins * h.bins, 0);
    h.density.assign(h.bins * h.bins, 0.0);
    const double w = h.width();

    for (const auto& r : records) {
        const double v = options.signed_values ? r.value : std::abs(r.value);
        const double a = options.sign * r.chi;
        const double x = v * std::cos(a);
        const double y = v * std::sin(a);
        const double fi = std::floor((x - h.lo) / w);
        const double fj = std::floor((y - h.lo) / w);
        if (fi < 0 || fj < 0 || fi >= static_cast<double>(h.bins) || fj >= static_cast<double>(h.bins)) {
            ++h.dropped;
            continue;
        }
        ++h.counts[static_cast<std::size_t>(fi) * h.bins + static_cast<std::size_t>(fj)];
    }

    if (options.method == ReconstructionMethod::Scatter) {
        const double kept = static_cast<double>(records.size() - h.dropped);
        if (kept <= 0.0) throw InvalidConfig("every scatter point fell outside the histogram");
        for (std::size_t k = 0; k < h.counts.size(); ++k) h.density[k] = static_cast<double>(h.counts[k]) / (kept * w * w);
        return h;
    }

    const auto projections = gather_projections(records, options.sign);
    if (projections.size() < options.min_angles) {
        throw InsufficientAngles("back-projection needs at least " + std::to_string(options.min_angles) +
                                 " distinct angles, got " + std::to_string(projections.size()));
    }

    // Detector bins share the image bin width and cover the image diagonal.
    const auto half_bins = static_cast<std::ptrdiff_t>(std::ceil(half * std::sqrt(2.0) / w)) + 1;
    const auto ns = static_cast<std::size_t>(2 * half_bins + 1);
    std::vector<double> kernel(ns);  // h[|n|], Ram-Lak
    for (std::size_t n = 0; n < ns; ++n) {
        if (n == 0) {
            kernel[n] = 1.0 / (4.0 * w * w);
        } else if (n % 2 == 1) {
            kernel[n] = -1.0 / (static_cast<double>(n * n) * kPiR * kPiR * w * w);
        }
    }

    std::vector<double> image(h.bins * h.bins, 0.0);
    std::vector<double> proj(ns);
    std::vector<double> filtered(ns);
    for (const auto& p : projections) {
        std::fill(proj.begin(), proj.end(), 0.0);
        for (double v : p.values) {
            const double k = std::floor(v / w + 0.5) + static_cast<double>(half_bins);
            if (k >= 0.0 && k < static_cast<double>(ns)) proj[static_cast<std::size_t>(k)] += 1.0;
        }
        const double scale = 1.0 / (static_cast<double>(p.values.size()) * w);
        for (auto& v : proj) v *= scale;
        for (std::size_t k = 0; k < ns; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < ns; ++j) {
                const std::size_t d = k > j ? k - j : j - k;
                s += kernel[d] * proj[j];
            }
            filtered[k] = w * s;
        }
        const double c = std::cos(p.angle);
        const double sn = std::sin(p.angle);
        for (std::size_t i = 0; i < h.bins; ++i) {
            const double x = h.center(i);
            for (std::size_t j = 0; j < h.bins; ++j) {
                const double s = x * c + h.center(j) * sn;
                const double pos = s / w + static_cast<double>(half_bins);
                const double fl = std::floor(pos);
                const auto k0 = static_cast<std::ptrdiff_t>(fl);
                if (k0 < 0 || k0 + 1 >= static_cast<std::ptrdiff_t>(ns)) continue;
                const double t = pos - fl;
                const double q = (1.0 - t) * filtered[static_cast<std::size_t>(k0)] + t * filtered[static_cast<std::size_t>(k0) + 1];
                image[i * h.bins + j] += p.weight * q;
            }
        }
    }
    double total = 0.0;
    for (double v : image) total += v;
    total *= w * w;
    if (!(total > 0.0) || !std::isfinite(total)) throw InvalidConfig("back-projection produced no mass");
    for (std::size_t k = 0; k < image.size(); ++k) h.density[k] = image[k] / total;
    return h;
}

}  // namespace kslight
