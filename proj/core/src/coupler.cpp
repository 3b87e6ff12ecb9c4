#include "kslight/coupler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "kslight/errors.hpp"

namespace kslight {

namespace {

constexpr cplx kI{0.0, 1.0};

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void CouplerSettings::validate() const {
    if (!(kappa > 0.0) || !finite(kappa)) throw InvalidSettings("kappa must be positive and finite");
    if (!(length > 0.0) || !finite(length)) throw InvalidSettings("length must be positive and finite");
    if (!(wavelength > 0.0) || !finite(wavelength)) {
        throw InvalidSettings("wavelength must be positive and finite");
    }
    if (!finite(delta) || !finite(phi1) || !finite(phi2)) {
        throw InvalidSettings("delta and phase shifts must be finite");
    }
}

// --- TransferMatrix2 -----------------------------------------------------------

TransferMatrix2 TransferMatrix2::adjoint() const {
    return {std::conj(m_[0]), std::conj(m_[2]), std::conj(m_[1]), std::conj(m_[3]), non_unitary_};
}

std::array<cplx, 2> TransferMatrix2::apply(const std::array<cplx, 2>& in) const {
    return {m_[0] * in[0] + m_[1] * in[1], m_[2] * in[0] + m_[3] * in[1]};
}

double TransferMatrix2::unitarity_defect() const {
    const TransferMatrix2 g = adjoint() * (*this);
    double worst = 0.0;
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) {
            const cplx expected = (r == c) ? cplx{1.0} : cplx{};
            worst = std::max(worst, std::abs(g(r, c) - expected));
        }
    }
    return worst;
}

double TransferMatrix2::spectral_norm() const {
    const TransferMatrix2 g = adjoint() * (*this);
    const double a = g(0, 0).real();
    const double d = g(1, 1).real();
    const double half_gap = 0.5 * (a - d);
    const double top = 0.5 * (a + d) + std::sqrt(half_gap * half_gap + std::norm(g(0, 1)));
    return std::sqrt(std::max(top, 0.0));
}

TransferMatrix2 operator*(const TransferMatrix2& a, const TransferMatrix2& b) {
    return {a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0), a(0, 0) * b(0, 1) + a(0, 1) * b(1, 1),
            a(1, 0) * b(0, 0) + a(1, 1) * b(1, 0), a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1),
            a.non_unitary() || b.non_unitary()};
}

TransferMatrix2 operator-(const TransferMatrix2& a, const TransferMatrix2& b) {
    return {a(0, 0) - b(0, 0), a(0, 1) - b(0, 1), a(1, 0) - b(1, 0), a(1, 1) - b(1, 1), true};
}

TransferMatrix2 operator*(cplx s, const TransferMatrix2& m) {
    return {s * m(0, 0), s * m(0, 1), s * m(1, 0), s * m(1, 1), m.non_unitary()};
}

double max_abs_diff(const TransferMatrix2& a, const TransferMatrix2& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, std::abs(a.entries()[k] - b.entries()[k]));
    return worst;
}

namespace {

cplx alignment_phase(const TransferMatrix2& a, const TransferMatrix2& b) {
    cplx overlap{};
    for (std::size_t k = 0; k < 4; ++k) overlap += std::conj(b.entries()[k]) * a.entries()[k];
    if (std::abs(overlap) == 0.0) return cplx{1.0};
    return overlap / std::abs(overlap);
}

}  // namespace

double phase_aligned_distance(const TransferMatrix2& a, const TransferMatrix2& b) {
    return (a - alignment_phase(a, b) * b).spectral_norm();
}

double phase_aligned_max_diff(const TransferMatrix2& a, const TransferMatrix2& b) {
    return max_abs_diff(a, alignment_phase(a, b) * b);
}

// --- closed form ---------------------------------------------------------------

CellResponse cell_response(const CouplerSettings& settings) {
    settings.validate();
    const double kappa = settings.kappa;
    const double delta = settings.delta;
    CellResponse r;
    r.beta_r = std::hypot(kappa, delta);
    const double x = r.beta_r * settings.length;
    const double s = std::sin(x);
    const double c = std::cos(x);
    const double ratio = delta / r.beta_r;
    r.u = std::sqrt(c * c + ratio * ratio * s * s);
    r.v = std::abs(kappa) / r.beta_r * s;

    // atan((δ/β_r) tan x) on the branch that keeps θ continuous through
    // x = π/2 + nπ.
    if (delta != 0.0) {
        const double principal = std::atan(ratio * s / c);
        const double turns = std::floor(x / kPi + 0.5);
        r.theta = principal + (delta > 0.0 ? 1.0 : -1.0) * turns * kPi;
    }

    r.a_coef = r.u * r.u - r.v * r.v;
    r.b_coef = 2.0 * r.u * r.v;
    r.big_theta = 4.0 * std::atan2(r.v, r.u);
    r.chi = std::atan2(r.b_coef, r.a_coef);
    return r;
}

TransferMatrix2 transfer_matrix(const CouplerSettings& settings) {
    const CellResponse r = cell_response(settings);
    const double a = r.a_coef;
    const double b = r.b_coef;
    return {cplx{a}, kI * b * std::exp(kI * (r.theta + settings.phi2)),
            kI * b * std::exp(-kI * (r.theta - settings.phi1)),
            a * std::exp(kI * (settings.phi1 + settings.phi2))};
}

std::pair<double, double> su2_phases(double theta, double big_phi) {
    const double phi1 = big_phi + theta + 0.5 * kPi;
    return {phi1, -phi1};
}

TransferMatrix2 su2_matrix(const CouplerSettings& settings, double big_phi) {
    if (!finite(big_phi)) throw InvalidSettings("Phi must be finite");
    const CellResponse r = cell_response(settings);
    const double a = r.a_coef;
    const double b = r.b_coef;
    return {cplx{a}, b * std::exp(-kI * big_phi), -b * std::exp(kI * big_phi), cplx{a}};
}

TransferMatrix2 su2_target(double big_theta, double big_phi) {
    const double a = std::cos(0.5 * big_theta);
    const double b = std::sin(0.5 * big_theta);
    return {cplx{a}, b * std::exp(-kI * big_phi), -b * std::exp(kI * big_phi), cplx{a}};
}

// --- calibration ---------------------------------------------------------------

namespace {

// Θ/2 through atan2(v, u); u ≥ 0 keeps it continuous in δ.
double effective_chi(const CouplerSettings& base, double delta) {
    CouplerSettings s = base;
    s.delta = delta;
    const CellResponse r = cell_response(s);
    return 2.0 * std::atan2(r.v, r.u);
}

struct Scan {
    std::vector<double> delta;
    std::vector<double> chi;
};

Scan prescan(const CouplerSettings& base, double lo, double hi, std::size_t points) {
    Scan scan;
    points = std::max<std::size_t>(points, 2);
    scan.delta.resize(points);
    scan.chi.resize(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(points - 1);
        scan.delta[i] = lo + (hi - lo) * t;
        scan.chi[i] = effective_chi(base, scan.delta[i]);
    }
    return scan;
}

int direction(double d) { return d > 0.0 ? 1 : (d < 0.0 ? -1 : 0); }

}  // namespace

DeltaWindow default_delta_window(const CouplerSettings& base, double target_chi,
                                 const SolveOptions& options) {
    base.validate();
    // Bound the sweep so that β_r·L advances by about 4π at most; the pre-scan
    // then resolves every oscillation of χ(δ).
    const double kl = base.kappa * base.length;
    const double x_max = kl + 4.0 * kPi;
    const double by_phase = std::sqrt(std::max(x_max * x_max - kl * kl, 0.0)) / base.length;
    const double hi = std::min(options.auto_window_kappas * base.kappa, by_phase);
    const Scan scan = prescan(base, 0.0, hi, options.prescan_points);

    std::size_t start = 0;
    int run_dir = 0;
    auto brackets = [&](std::size_t a, std::size_t b) {
        const auto [mn, mx] = std::minmax(scan.chi[a], scan.chi[b]);
        return target_chi >= mn && target_chi <= mx;
    };
    for (std::size_t i = 1; i < scan.chi.size(); ++i) {
        const int d = direction(scan.chi[i] - scan.chi[i - 1]);
        if (d == 0) continue;
        if (run_dir == 0) {
            run_dir = d;
        } else if (d != run_dir) {
            if (brackets(start, i - 1)) return {scan.delta[start], scan.delta[i - 1]};
            start = i - 1;
            run_dir = d;
        }
    }
    if (brackets(start, scan.chi.size() - 1)) return {scan.delta[start], scan.delta.back()};
    throw TargetUnreachable("no monotone branch of chi(delta) in [0, " + std::to_string(hi) +
                            "] rad/m reaches chi = " + std::to_string(target_chi));
}

namespace {

// The default window ends at sampled extrema of χ; a rescan may resolve the
// turning point inside the end cells, so the monotonicity check is skipped there.
CouplerSettings solve_in_window(double target_theta, double target_phi, const CouplerSettings& base,
                                DeltaWindow window, const SolveOptions& options, bool check_monotone) {
    base.validate();
    if (!(target_theta >= 0.0 && target_theta <= kPi)) {
        throw InvalidSettings("target Theta must lie in [0, pi]");
    }
    if (!finite(target_phi)) throw InvalidSettings("target Phi must be finite");
    if (!(window.hi > window.lo)) throw InvalidSettings("delta window must have hi > lo");
    const double target = 0.5 * target_theta;

    const Scan scan = prescan(base, window.lo, window.hi, options.prescan_points);
    int run_dir = 0;
    for (std::size_t i = 1; check_monotone && i < scan.chi.size(); ++i) {
        const int d = direction(scan.chi[i] - scan.chi[i - 1]);
        if (d == 0) continue;
        if (run_dir == 0) {
            run_dir = d;
        } else if (d != run_dir) {
            throw NonMonotoneWindow("chi(delta) reverses direction near delta = " +
                                    std::to_string(scan.delta[i - 1]) + " rad/m; narrow the window");
        }
    }

    std::size_t bracket = scan.chi.size();
    for (std::size_t i = 1; i < scan.chi.size(); ++i) {
        const auto [mn, mx] = std::minmax(scan.chi[i - 1], scan.chi[i]);
        if (target >= mn && target <= mx) {
            bracket = i;
            break;
        }
    }
    if (bracket == scan.chi.size()) {
        throw TargetUnreachable("chi(delta) never crosses " + std::to_string(target) + " in the window");
    }

    double lo = scan.delta[bracket - 1];
    double hi = scan.delta[bracket];
    double f_lo = scan.chi[bracket - 1] - target;
    const double scale = std::max({std::abs(lo), std::abs(hi), base.kappa});
    for (int iter = 0; iter < 200 && (hi - lo) > options.relative_tolerance * scale; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = effective_chi(base, mid) - target;
        if (f_mid == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    const double lo_err = std::abs(effective_chi(base, lo) - target);
    const double hi_err = std::abs(effective_chi(base, hi) - target);

    CouplerSettings out = base;
    out.delta = lo_err <= hi_err ? lo : hi;
    const CellResponse r = cell_response(out);
    std::tie(out.phi1, out.phi2) = su2_phases(r.theta, target_phi);
    return out;
}

}  // namespace

CouplerSettings solve_settings(double target_theta, double target_phi, const CouplerSettings& base,
                               DeltaWindow window, const SolveOptions& options) {
    return solve_in_window(target_theta, target_phi, base, window, options, true);
}

CouplerSettings solve_settings(double target_theta, double target_phi, const CouplerSettings& base,
                               const SolveOptions& options) {
    const DeltaWindow window = default_delta_window(base, 0.5 * target_theta, options);
    return solve_in_window(target_theta, target_phi, base, window, options, false);
}

// --- coupled-mode oracle -------------------------------------------------------

void CoupledModeSystem::validate() const {
    if (segments.empty()) throw InvalidSettings("coupled-mode system needs at least one segment");
    for (const auto& seg : segments) {
        if (!(seg.length > 0.0)) throw InvalidSettings("segment lengths must be positive");
        if (seg.delta_sign != 1 && seg.delta_sign != -1) {
            throw InvalidSettings("segment delta_sign must be +1 or -1");
        }
    }
    if (std::abs(coupling[1] - std::conj(coupling[2])) > 1e-12 * (1.0 + std::abs(coupling[1])) ||
        std::abs(coupling[0].imag()) > 0.0 || std::abs(coupling[3].imag()) > 0.0) {
        throw InvalidSettings("coupling matrix must be Hermitian");
    }
    if (steps_per_segment == 0) throw InvalidSettings("steps_per_segment must be positive");
}

CoupledModeSystem coupled_mode_system(const CouplerSettings& settings, double mean_beta) {
    settings.validate();
    CoupledModeSystem sys;
    sys.betas = {mean_beta + settings.delta, mean_beta - settings.delta};
    sys.coupling = {cplx{}, cplx{settings.kappa}, cplx{settings.kappa}, cplx{}};
    sys.segments = {{settings.length, -1}, {settings.length, +1}};
    sys.input_phase = settings.phi2;
    sys.output_phase = settings.phi1;
    return sys;
}

namespace {

using Vec2 = std::array<cplx, 2>;

Vec2 integrate(const CoupledModeSystem& sys, Vec2 a, std::size_t steps) {
    a[1] *= std::exp(kI * sys.input_phase);
    const double mean = 0.5 * (sys.betas[0] + sys.betas[1]);
    const double half = 0.5 * (sys.betas[0] - sys.betas[1]);
    // The common propagation constant multiplies the identity, so it commutes
    // with the coupling and is applied exactly; RK4 only sees the
    // co-moving-frame equations, whose scale is set by κ and Δβ.
    for (const auto& seg : sys.segments) {
        const cplx k00 = sys.coupling[0] + seg.delta_sign * half;
        const cplx k11 = sys.coupling[3] - seg.delta_sign * half;
        const cplx k01 = sys.coupling[1];
        const cplx k10 = sys.coupling[2];
        auto rhs = [&](const Vec2& y) -> Vec2 {
            return {kI * (k00 * y[0] + k01 * y[1]), kI * (k10 * y[0] + k11 * y[1])};
        };
        const double h = seg.length / static_cast<double>(steps);
        for (std::size_t n = 0; n < steps; ++n) {
            const Vec2 s1 = rhs(a);
            const Vec2 s2 = rhs({a[0] + 0.5 * h * s1[0], a[1] + 0.5 * h * s1[1]});
            const Vec2 s3 = rhs({a[0] + 0.5 * h * s2[0], a[1] + 0.5 * h * s2[1]});
            const Vec2 s4 = rhs({a[0] + h * s3[0], a[1] + h * s3[1]});
            for (std::size_t k = 0; k < 2; ++k) a[k] += h / 6.0 * (s1[k] + 2.0 * s2[k] + 2.0 * s3[k] + s4[k]);
        }
        const cplx common = std::exp(kI * (mean * seg.length));
        a[0] *= common;
        a[1] *= common;
    }
    a[1] *= std::exp(kI * sys.output_phase);
    return a;
}

}  // namespace

std::array<cplx, 2> ode_oracle(const CoupledModeSystem& system, const std::array<cplx, 2>& input) {
    system.validate();
    const Vec2 coarse = integrate(system, input, system.steps_per_segment);
    const Vec2 fine = integrate(system, input, 2 * system.steps_per_segment);
    const double change = std::max(std::abs(fine[0] - coarse[0]), std::abs(fine[1] - coarse[1]));
    if (change > 1e-8) {
        throw StepTooCoarse("halving the step changed the output by " + std::to_string(change));
    }
    return fine;
}

TransferMatrix2 ode_transfer_matrix(const CoupledModeSystem& system) {
    const Vec2 c0 = ode_oracle(system, {cplx{1.0}, cplx{}});
    const Vec2 c1 = ode_oracle(system, {cplx{}, cplx{1.0}});
    return {c0[0], c1[0], c0[1], c1[1]};
}

// --- defects -------------------------------------------------------------------

bool DefectMzi::first_order_valid() const noexcept {
    return std::abs(eps1) <= 0.1 && std::abs(eps2) <= 0.1;
}

TransferMatrix2 defective_3db(double eps) {
    if (!(std::abs(eps) < 1.0)) throw InvalidSettings("|eps| must be < 1");
    const double n = 1.0 / std::sqrt(2.0);
    const cplx diag{n * (1.0 - eps)};
    const cplx off = kI * (n * (1.0 + eps));
    return {diag, off, off, diag, true};
}

TransferMatrix2 defective_mzi(const DefectMzi& d) {
    const double c = std::cos(d.eta);
    const double s = std::sin(d.eta);
    const double sum = d.eps1 + d.eps2;
    const double diff = d.eps2 - d.eps1;
    return {cplx{c, sum * s}, cplx{s, diff * c}, cplx{s, -diff * c}, cplx{-c, sum * s}, true};
}

MziResidual mzi_residual(const DefectMzi& d) {
    return {std::abs(d.eps2 - d.eps1) * std::abs(std::cos(d.eta)),
            std::abs(d.eps1 + d.eps2) * std::abs(std::sin(d.eta))};
}

double mzi_best_output_compensation(const DefectMzi& defect) {
    const TransferMatrix2 actual = defective_mzi(defect);
    const TransferMatrix2 ideal = defective_mzi({0.0, 0.0, defect.eta});
    auto cost = [&](double phi) {
        const TransferMatrix2 shifter{cplx{1.0}, cplx{}, cplx{}, std::exp(kI * phi)};
        return phase_aligned_distance(shifter * actual, ideal);
    };
    constexpr std::size_t kScan = 3600;
    double best_phi = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kScan; ++i) {
        const double phi = 2.0 * kPi * static_cast<double>(i) / kScan;
        const double c = cost(phi);
        if (c < best) {
            best = c;
            best_phi = phi;
        }
    }
    // Golden-section refinement on the bracketing scan cell.
    const double step = 2.0 * kPi / kScan;
    double a = best_phi - step;
    double b = best_phi + step;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a);
    double x2 = a + g * (b - a);
    double f1 = cost(x1);
    double f2 = cost(x2);
    for (int i = 0; i < 100; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = cost(x2);
        }
    }
    return std::min({best, f1, f2});
}

std::vector<SweepRow> sweep_response(const CouplerSettings& base, double lo, double hi,
                                     std::size_t points) {
    base.validate();
    if (points < 2) throw InvalidSettings("sweep needs at least two points");
    std::vector<SweepRow> rows(points);
    const double k0 = base.k0();
    for (std::size_t i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(points - 1);
        CouplerSettings s = base;
        rows[i].delta_over_k0 = lo + (hi - lo) * t;
        s.delta = rows[i].delta_over_k0 * k0;
        const CellResponse r = cell_response(s);
        rows[i].a_coef = r.a_coef;
        rows[i].b_coef = r.b_coef;
        rows[i].theta = r.theta;
    }
    return rows;
}

}  // namespace kslight
