#include "kslight/weak.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "kslight/errors.hpp"
#include "kslight/hermite.hpp"
#include "kslight/homodyne.hpp"
#include "kslight/sampling.hpp"
#include "parallel.hpp"

namespace kslight {

namespace {

constexpr double kPiW = 3.14159265358979323846;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// f_n(q) = (−i)ⁿ ψ_n(q), the 𝓟-representation eigenfunctions.
Eigen::VectorXcd momentum_functions(int nmax, double q) {
    Eigen::VectorXcd f(nmax + 1);
    for (int n = 0; n <= nmax; ++n) f(n) = axis_phase(Axis::Momentum, n) * hermite_psi(n, q);
    return f;
}

// W_bc = ∫_{−w}^{w} f_b conj(f_c) dq, composite Simpson.
Eigen::MatrixXcd window_matrix(int nmax, double w) {
    constexpr int kIntervals = 2000;
    const double h = 2.0 * w / kIntervals;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(nmax + 1, nmax + 1);
    for (int k = 0; k <= kIntervals; ++k) {
        const double q = -w + h * k;
        const double weight = (k == 0 || k == kIntervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        const Eigen::VectorXcd f = momentum_functions(nmax, q);
        out += (weight * h / 3.0) * f * f.adjoint();
    }
    return out;
}

double meter_mean(const Eigen::MatrixXcd& rho, double trace) {
    cplx a{};
    for (Eigen::Index m = 1; m < rho.rows(); ++m) a += std::sqrt(static_cast<double>(m)) * rho(m, m - 1);
    return trace > 1e-300 ? a.real() / trace : 0.0;
}

// Signal (mode 0) ⊗ postselected partner (mode 1) ⊗ meter (mode 2), sliced
// as T_a(b, m).
std::vector<Eigen::MatrixXcd> slice_by_first(const FockState& joint) {
    const auto lv = static_cast<Eigen::Index>(joint.levels());
    std::vector<Eigen::MatrixXcd> t(static_cast<std::size_t>(lv), Eigen::MatrixXcd(lv, lv));
    auto amps = joint.amplitudes();
    for (Eigen::Index a = 0; a < lv; ++a) {
        for (Eigen::Index b = 0; b < lv; ++b) {
            for (Eigen::Index m = 0; m < lv; ++m) t[static_cast<std::size_t>(a)](b, m) = amps[static_cast<std::size_t>((a * lv + b) * lv + m)];
        }
    }
    return t;
}

struct ChiScan {
    std::vector<WeakScanRecord> records;
    std::vector<double> amplitude;
    double window_mass = 0.0;
};

ChiScan scan_one(const FockState& state, double chi, std::size_t chi_index, const WeakConfig& cfg) {
    const FockState rotated = apply_rotation(state, chi, 1, 0, 1);
    const FockState joint = weak_couple(rotated, cfg.gamma_w, 0);
    const int nmax = joint.cutoff();
    const auto t = slice_by_first(joint);
    const Eigen::MatrixXcd w = window_matrix(nmax, cfg.window);

    ChiScan out;
    const Eigen::MatrixXcd rho4 = reduced_density(joint, 1);
    out.window_mass = (rho4.cwiseProduct(w)).sum().real();
    if (!(out.window_mass >= 1e-9)) {
        throw EmptyPostselection("postselection window holds " + std::to_string(out.window_mass) + " at chi " +
                                 std::to_string(chi));
    }

    const std::size_t np = cfg.p_grid.points;
    out.records.resize(np);
    out.amplitude.resize(np);
    std::vector<Eigen::MatrixXcd> meter_rho(cfg.sampled ? np : 0);
    for (std::size_t i = 0; i < np; ++i) {
        const double p = cfg.p_grid.at(i);
        const Eigen::VectorXcd fp = momentum_functions(nmax, p);
        Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(nmax + 1, nmax + 1);
        for (int a = 0; a <= nmax; ++a) b += fp(a) * t[static_cast<std::size_t>(a)];
        const Eigen::MatrixXcd rho = b.transpose() * w * b.conjugate();
        const double tr = std::max(0.0, rho.trace().real());
        auto& r = out.records[i];
        r.chi = chi;
        r.p = p;
        r.probability = tr;
        r.meter_expectation = meter_mean(rho, tr);
        // |Ψ(p, 0)| of the rotated signal: the w → 0, Γ_w → 0 limit of √(P/2w).
        out.amplitude[i] = std::abs(wavefunction_at(rotated, Axis::Momentum, p, 0.0));
        if (cfg.sampled) meter_rho[i] = rho;
    }

    if (cfg.sampled) {
        // Draw (p bin, meter value) pairs from the exact joint statistics.
        std::vector<double> weights(np);
        for (std::size_t i = 0; i < np; ++i) weights[i] = out.records[i].probability;
        std::vector<double> cumulative(np);
        double acc = 0.0;
        for (std::size_t i = 0; i < np; ++i) cumulative[i] = (acc += weights[i]);
        const Grid1D meter_grid = Grid1D::symmetric(support_half_width(nmax), 512);
        std::vector<std::size_t> counts(np, 0);
        std::vector<double> sums(np, 0.0);
        std::vector<std::unique_ptr<InverseCdfSampler>> samplers(np);
        RandomStream rng(cfg.seed, chi_index);
        for (std::size_t s = 0; s < cfg.n_samples; ++s) {
            const double u = rng.uniform() * acc;
            const auto bin = std::min<std::size_t>(
                static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()), np - 1);
            if (!samplers[bin]) {
                const Density1D d = density_from_matrix(meter_rho[bin] / std::max(meter_rho[bin].trace().real(), 1e-300),
                                                        Axis::FieldStrength, meter_grid);
                samplers[bin] = std::make_unique<InverseCdfSampler>(meter_grid, d.values);
            }
            sums[bin] += samplers[bin]->sample(rng.uniform());
            ++counts[bin];
        }
        const double dp = cfg.p_grid.step();
        for (std::size_t i = 0; i < np; ++i) {
            auto& r = out.records[i];
            r.probability = static_cast<double>(counts[i]) / (static_cast<double>(cfg.n_samples) * dp) * out.window_mass;
            r.meter_expectation = counts[i] > 0 ? sums[i] / static_cast<double>(counts[i]) : 0.0;
            out.amplitude[i] = std::sqrt(r.probability / (2.0 * cfg.window));
        }
    }

    double peak = 0.0;
    for (const auto& r : out.records) peak = std::max(peak, r.probability);
    for (auto& r : out.records) r.masked = r.probability < cfg.mask_threshold * peak;
    if (cfg.sampled) {
        // Fewer than two events cannot give a meter mean.
        for (std::size_t i = 0; i < np; ++i) {
            if (out.records[i].probability * static_cast<double>(cfg.n_samples) * cfg.p_grid.step() / out.window_mass < 2.0) {
                out.records[i].masked = true;
            }
        }
    }
    return out;
}

struct RayValue {
    double phase = kNaN;
    double amplitude = kNaN;
    bool masked = true;
};

RayValue evaluate(const PhaseCurve& c, double p) {
    RayValue v;
    const std::size_t n = c.p.size();
    if (n < 2 || p < c.p.front() || p > c.p.back()) return v;
    auto it = std::upper_bound(c.p.begin(), c.p.end(), p);
    std::size_t k = it == c.p.begin() ? 0 : static_cast<std::size_t>(it - c.p.begin()) - 1;
    k = std::min(k, n - 2);
    const double t = (p - c.p[k]) / (c.p[k + 1] - c.p[k]);
    if (t == 0.0) {
        v.phase = c.phase[k];
        v.amplitude = c.amplitude[k];
        v.masked = c.masked[k] != 0;
        return v;
    }
    if (t == 1.0) {
        v.phase = c.phase[k + 1];
        v.amplitude = c.amplitude[k + 1];
        v.masked = c.masked[k + 1] != 0;
        return v;
    }
    v.phase = (1.0 - t) * c.phase[k] + t * c.phase[k + 1];
    v.amplitude = (1.0 - t) * c.amplitude[k] + t * c.amplitude[k + 1];
    v.masked = c.masked[k] != 0 || c.masked[k + 1] != 0;
    return v;
}

}  // namespace

cplx weak_value(const Eigen::MatrixXcd& op, const Eigen::VectorXcd& pre, const Eigen::VectorXcd& post) {
    if (op.rows() != op.cols() || op.rows() != pre.size() || pre.size() != post.size()) {
        throw InvalidConfig("weak value: operator and states must share a dimension");
    }
    const cplx overlap = post.dot(pre);  // conjugates post
    const double scale = post.norm() * pre.norm();
    if (!(scale > 0.0) || std::abs(overlap) <= 1e-12 * scale) {
        throw OrthogonalPostselection("postselected state is orthogonal to the prepared state");
    }
    return post.dot(op * pre) / overlap;
}

FockState weak_couple(const FockState& signal, double gamma_w, int signal_mode) {
    if (!std::isfinite(gamma_w)) throw InvalidConfig("gamma_w must be finite");
    if (signal_mode < 0 || signal_mode >= signal.modes()) throw InvalidConfig("signal mode out of range");
    const int need = signal.max_occupation(0.0) + 2;
    const FockState base = signal.cutoff() >= need ? signal : signal.with_cutoff(need);
    const FockState joint = base.with_vacuum_mode();
    return apply_rotation(joint, gamma_w, -1, signal_mode, joint.modes() - 1);
}

WeakConfig::WeakConfig() : chi_grid(uniform_angles(12, kPiW)) {}

void WeakConfig::validate() const {
    if (!(gamma_w > 0.0) || !std::isfinite(gamma_w)) throw InvalidConfig("gamma_w must be positive");
    if (chi_grid.empty()) throw InvalidConfig("chi grid must not be empty");
    for (double c : chi_grid) {
        if (!std::isfinite(c)) throw InvalidConfig("chi grid entries must be finite");
    }
    p_grid.validate();
    if (p_grid.lo > 0.0 || p_grid.hi < 0.0) throw InvalidConfig("p grid must contain 0");
    if (!(window > 0.0) || !std::isfinite(window)) throw InvalidConfig("window must be positive");
    if (!(mask_threshold >= 0.0 && mask_threshold < 1.0)) throw InvalidConfig("mask threshold must be in [0, 1)");
    if (!(node_ratio > 0.0 && node_ratio < 1.0)) throw InvalidConfig("node ratio must be in (0, 1)");
    if (!(r_max > 0.0)) throw InvalidConfig("r_max must be positive");
    if (sampled && n_samples == 0) throw InvalidConfig("sampled mode needs samples");
    if (workers == 0) throw InvalidConfig("workers must be positive");
}

PhaseCurve reconstruct_phase_1d(std::span<const WeakScanRecord> records, double gamma_w) {
    if (!(gamma_w > 0.0)) throw InvalidConfig("gamma_w must be positive");
    PhaseCurve c;
    const std::size_t n = records.size();
    if (n == 0) return c;
    c.chi = records.front().chi;
    c.p.resize(n);
    c.phase.assign(n, 0.0);
    c.probability.resize(n);
    c.amplitude.assign(n, kNaN);
    c.masked.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.p[i] = records[i].p;
        c.probability[i] = records[i].probability;
        c.masked[i] = records[i].masked ? 1 : 0;
        if (i > 0 && !(c.p[i] > c.p[i - 1])) throw InvalidConfig("records must be sorted by p");
        if (records[i].chi != c.chi) throw InvalidConfig("records must share one chi");
    }
    if (n == 1) return c;
    const double g = meter_gain(gamma_w);
    // φ′ = −E/g
    auto slope = [&](std::size_t i) { return -records[i].meter_expectation / g; };
    std::size_t i0 = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(c.p[i]) < std::abs(c.p[i0])) i0 = i;
    }
    for (std::size_t i = i0 + 1; i < n; ++i) c.phase[i] = c.phase[i - 1] + 0.5 * (slope(i) + slope(i - 1)) * (c.p[i] - c.p[i - 1]);
    for (std::size_t i = i0; i-- > 0;) c.phase[i] = c.phase[i + 1] - 0.5 * (slope(i) + slope(i + 1)) * (c.p[i + 1] - c.p[i]);
    // Shift so that φ(0) = 0 when 0 is not a node.
    const double offset = -slope(i0) * c.p[i0];
    if (offset != 0.0) {
        for (auto& v : c.phase) v -= offset;
    }
    return c;
}

bool has_phase_node(const PhaseCurve& curve, double r_max, double node_ratio, double mask_threshold) {
    const auto& pr = curve.probability;
    const std::size_t n = pr.size();
    if (n < 3) return false;
    const double peak = *std::max_element(pr.begin(), pr.end());
    if (!(peak > 0.0)) return true;
    const double floor = 10.0 * mask_threshold * peak;
    std::vector<double> left(n), right(n);
    left[0] = pr[0];
    for (std::size_t i = 1; i < n; ++i) left[i] = std::max(left[i - 1], pr[i]);
    right[n - 1] = pr[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) right[i] = std::max(right[i + 1], pr[i]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (std::abs(curve.p[i]) >= r_max) continue;
        if (!(pr[i] < pr[i - 1] && pr[i] <= pr[i + 1])) continue;
        const double flank = std::min(left[i - 1], right[i + 1]);
        if (flank >= floor && pr[i] < node_ratio * flank) return true;
    }
    return false;
}

WeakScan weak_scan(const FockState& state, const WeakConfig& config) {
    config.validate();
    if (state.modes() != 2) throw InvalidConfig("weak scan needs a two-mode state");
    const std::size_t nchi = config.chi_grid.size();
    std::vector<ChiScan> per_chi(nchi);
    detail::parallel_for(nchi, config.workers, [&](std::size_t k) {
        per_chi[k] = scan_one(state, config.chi_grid[k], k, config);
    });

    WeakScan out;
    for (std::size_t k = 0; k < nchi; ++k) {
        auto& s = per_chi[k];
        PhaseCurve curve = reconstruct_phase_1d(s.records, config.gamma_w);
        curve.amplitude = s.amplitude;
        const std::size_t zero = static_cast<std::size_t>(std::min_element(curve.p.begin(), curve.p.end(), [](double a, double b) {
                                                              return std::abs(a) < std::abs(b);
                                                          }) - curve.p.begin());
        curve.failed = curve.masked[zero] != 0 ||
                       has_phase_node(curve, config.r_max, config.node_ratio, config.mask_threshold);
        for (std::size_t i = 0; i < s.records.size(); ++i) {
            auto& r = s.records[i];
            r.phase = r.masked ? kNaN : curve.phase[i];
            out.records.push_back(r);
        }
        out.window_mass.push_back(s.window_mass);
        out.curves.push_back(std::move(curve));
    }
    return out;
}

PhaseSurface assemble_joint_phase(std::span<const PhaseCurve> curves, const AssembleOptions& options) {
    options.p1.validate();
    options.p2.validate();
    struct Ray {
        const PhaseCurve* curve;
        double angle;  // line angle in [0, π)
        bool flip;     // curve direction is the opposite of the line direction
    };
    std::vector<Ray> rays;
    std::vector<double> failed_lines;
    PhaseSurface s;
    s.p1 = options.p1;
    s.p2 = options.p2;
    for (const auto& c : curves) {
        double a = std::fmod(c.chi, 2.0 * kPiW);
        if (a < 0.0) a += 2.0 * kPiW;
        bool flip = false;
        if (a >= kPiW) {
            a -= kPiW;
            flip = true;
        }
        if (c.failed) {
            failed_lines.push_back(a);
            s.failed_chi.push_back(c.chi);
        } else {
            rays.push_back({&c, a, flip});
            s.used_chi.push_back(c.chi);
        }
    }
    if (rays.empty()) {
        throw NotReconstructible("no rotation angle gives a usable phase reference (angular-only or noded state)");
    }
    if (rays.size() < 4) {
        throw TooFewAngles("only " + std::to_string(rays.size()) + " usable angles, need at least 4");
    }
    std::sort(rays.begin(), rays.end(), [](const Ray& a, const Ray& b) { return a.angle < b.angle; });

    auto ray_value = [](const Ray& r, double signed_radius) {
        return evaluate(*r.curve, r.flip ? -signed_radius : signed_radius);
    };
    auto failed_between = [&](double lo, double hi) {
        for (double f : failed_lines) {
            for (double shift : {-kPiW, 0.0, kPiW}) {
                const double x = f + shift;
                if (x > lo && x < hi) return true;
            }
        }
        return false;
    };

    const std::size_t n1 = options.p1.points, n2 = options.p2.points;
    s.phase.assign(n1 * n2, kNaN);
    s.amplitude.assign(n1 * n2, kNaN);
    s.masked.assign(n1 * n2, 1);
    s.interpolated.assign(n1 * n2, 0);
    const std::size_t nr = rays.size();
    for (std::size_t i = 0; i < n1; ++i) {
        const double x = options.p1.at(i);
        for (std::size_t j = 0; j < n2; ++j) {
            const double y = options.p2.at(j);
            const std::size_t idx = s.index(i, j);
            double theta = std::atan2(y, x);
            if (theta < 0.0) theta += 2.0 * kPiW;
            double alpha = theta;
            double radius = std::hypot(x, y);
            if (alpha >= kPiW) {
                alpha -= kPiW;
                radius = -radius;
            }
            // Bracketing usable rays, cyclic with period π (wrap flips p).
            std::size_t hi = static_cast<std::size_t>(
                std::upper_bound(rays.begin(), rays.end(), alpha, [](double a, const Ray& r) { return a < r.angle; }) - rays.begin());
            const Ray* lo_ray;
            const Ray* hi_ray;
            double lo_angle, hi_angle, lo_r = radius, hi_r = radius;
            if (hi == 0) {
                lo_ray = &rays[nr - 1];
                lo_angle = lo_ray->angle - kPiW;
                lo_r = -radius;
                hi_ray = &rays[0];
                hi_angle = hi_ray->angle;
            } else if (hi == nr) {
                lo_ray = &rays[nr - 1];
                lo_angle = lo_ray->angle;
                hi_ray = &rays[0];
                hi_angle = hi_ray->angle + kPiW;
                hi_r = -radius;
            } else {
                lo_ray = &rays[hi - 1];
                lo_angle = lo_ray->angle;
                hi_ray = &rays[hi];
                hi_angle = hi_ray->angle;
            }
            const double t = (alpha - lo_angle) / (hi_angle - lo_angle);
            RayValue v;
            if (t == 0.0) {
                v = ray_value(*lo_ray, lo_r);
            } else {
                const RayValue a = ray_value(*lo_ray, lo_r);
                const RayValue b = ray_value(*hi_ray, hi_r);
                v.phase = (1.0 - t) * a.phase + t * b.phase;
                v.amplitude = (1.0 - t) * a.amplitude + t * b.amplitude;
                v.masked = a.masked || b.masked;
                s.interpolated[idx] = failed_between(lo_angle, hi_angle) ? 1 : 0;
            }
            const bool outside = std::abs(x) > options.r_max || std::abs(y) > options.r_max;
            s.amplitude[idx] = v.amplitude;
            s.masked[idx] = (v.masked || outside || !std::isfinite(v.phase)) ? 1 : 0;
            s.phase[idx] = s.masked[idx] ? kNaN : v.phase;
        }
    }
    return s;
}

}  // namespace kslight
