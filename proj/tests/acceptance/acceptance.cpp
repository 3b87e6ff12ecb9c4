// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance --only N   run criterion N (1..8)
//
// Exit status is 0 only when every criterion that ran passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <kslight/coupler.hpp>
#include <kslight/fitting.hpp>
#include <kslight/fock_state.hpp>
#include <kslight/hermite.hpp>
#include <kslight/homodyne.hpp>
#include <kslight/quadrature.hpp>
#include <kslight/reconstruction.hpp>
#include <kslight/sampling.hpp>
#include <kslight/weak.hpp>

#include "oracles.hpp"

using namespace kslight;

namespace {

// Pinned tolerances and budgets.
namespace tol {
constexpr double kIdentity = 1e-12;
constexpr double kUnitary = 1e-10;
constexpr double kUnitarySeconds = 1.0;
constexpr double kOde = 1e-6;
constexpr double kOdeSeconds = 10.0;
constexpr double kCalibration = 1e-8;
constexpr double kCalibrationSeconds = 5.0;
constexpr double kMzi = 1e-12;
constexpr double kMeanTarget = 4.00;
constexpr double kMean = 0.05;
constexpr double kWidthConsistency = 0.005;
constexpr double kReportedWidth = 1.035;
constexpr double kHomodyneSeconds = 60.0;
constexpr double kWeakPhase = 0.05;
constexpr double kWeakRadius = 2.5;
constexpr double kWeakSeconds = 120.0;
constexpr double kScaleLo = 3.0;
constexpr double kScaleHi = 5.0;
constexpr double kHermite = 1e-10;
constexpr double kFourier = 1e-6;
constexpr double kFidelity = 1e-9;
}  // namespace tol

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

CouplerSettings random_settings(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> kl(0.05, 8.0);
    std::uniform_real_distribution<double> ratio(-4.0, 4.0);
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    std::uniform_real_distribution<double> log_len(-5.0, -1.0);
    CouplerSettings s;
    s.wavelength = 650e-9;
    s.length = std::pow(10.0, log_len(rng));
    s.kappa = kl(rng) / s.length;
    s.delta = ratio(rng) * s.kappa;
    s.phi1 = phase(rng);
    s.phi2 = phase(rng);
    return s;
}

CouplerSettings device() {
    CouplerSettings s;
    s.wavelength = 650e-9;
    s.kappa = 0.1 * s.k0();
    s.length = 2e-3;
    return s;
}

FockState circular4(int cutoff) {
    const std::vector<cplx> a{cplx(4.0), cplx(0.0, 4.0)};
    return coherent_product(a, cutoff);
}

// ---------------------------------------------------------------------------

Outcome unitarity() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240501);
    double worst_uv = 0.0, worst_ab = 0.0, worst_u = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const CouplerSettings s = random_settings(rng);
        const CellResponse r = cell_response(s);
        worst_uv = std::max(worst_uv, std::abs(r.u * r.u + r.v * r.v - 1.0));
        worst_ab = std::max(worst_ab, std::abs(r.a_coef * r.a_coef + r.b_coef * r.b_coef - 1.0));
        worst_u = std::max(worst_u, transfer_matrix(s).unitarity_defect());
    }
    const double t = seconds_since(t0);
    Outcome o;
    o.pass = worst_uv < tol::kIdentity && worst_ab < tol::kIdentity && worst_u < tol::kUnitary && t < tol::kUnitarySeconds;
    o.detail = "max|u2+v2-1| " + fmt("%.2e", worst_uv) + ", max|A2+B2-1| " + fmt("%.2e", worst_ab) +
               ", max unitarity defect " + fmt("%.2e", worst_u) + ", " + fmt("%.3f s", t);
    return o;
}

Outcome oracle_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        CouplerSettings s = random_settings(rng);
        std::uniform_real_distribution<double> beta(0.0, 5e6);
        const TransferMatrix2 ode = ode_transfer_matrix(coupled_mode_system(s, beta(rng)));
        worst = std::max(worst, phase_aligned_max_diff(transfer_matrix(s), ode));
    }
    const double t = seconds_since(t0);
    return {worst < tol::kOde && t < tol::kOdeSeconds,
            "max phase-aligned entry difference " + fmt("%.2e", worst) + " over 100 settings, " + fmt("%.2f s", t)};
}

Outcome calibration() {
    const auto t0 = Clock::now();
    const CouplerSettings base = device();
    double worst = 0.0;
    for (double theta : {kPi / 4, kPi / 2, 2.0}) {
        const double phi = 0.3;
        const TransferMatrix2 target = su2_target(theta, phi);
        for (double scale : {0.95, 1.05}) {
            CouplerSettings k = base;
            k.kappa *= scale;
            CouplerSettings l = base;
            l.length *= scale;
            worst = std::max(worst, phase_aligned_distance(su2_matrix(solve_settings(theta, phi, k), phi), target));
            worst = std::max(worst, phase_aligned_distance(su2_matrix(solve_settings(theta, phi, l), phi), target));
        }
    }
    // Defective MZI: the off-diagonal imaginary part is fixed by the coupler
    // defects, and no output phase setting removes it.
    const DefectMzi mzi{0.01, 0.02, 0.0};
    const TransferMatrix2 m = defective_mzi(mzi);
    const double residual = std::abs(m(0, 1).imag());
    const double expected = std::abs(mzi.eps2 - mzi.eps1);
    const double best_comp = mzi_best_output_compensation(mzi);
    const double t = seconds_since(t0);
    Outcome o;
    o.pass = worst < tol::kCalibration && std::abs(residual - expected) < tol::kMzi &&
             std::abs(mzi_residual(mzi).offdiag_imag - expected) < tol::kMzi && best_comp > 0.5 * expected &&
             t < tol::kCalibrationSeconds;
    o.detail = "max distance after re-solve " + fmt("%.2e", worst) + " (12 perturbed devices), MZI residual " +
               fmt("%.5f", residual) + " vs |e2-e1| " + fmt("%.5f", expected) + ", best output-phase residual " +
               fmt("%.5f", best_comp) + ", " + fmt("%.2f s", t);
    return o;
}

Outcome homodyne_reconstruction() {
    const auto t0 = Clock::now();
    HomodyneConfig cfg;
    cfg.strategy = SamplingStrategy::PhaseRandom;
    cfg.n_samples = 100000;
    cfg.chi_list = uniform_angles(32, kPi);
    cfg.seed = 2024;
    const auto records = run_campaign(circular4(coherent_cutoff(4.0)), cfg);
    ReconstructOptions ro;
    ro.method = ReconstructionMethod::BackProjection;
    ro.bins = 81;
    const Histogram2D h = reconstruct_joint(records, ro);
    FitOptions lm_opt;
    FitOptions nm_opt;
    nm_opt.solver = FitSolver::NelderMead;
    const FitResult lm = fit_moments(h, lm_opt);
    const FitResult nm = fit_moments(h, nm_opt);
    const double t = seconds_since(t0);
    const double dw1 = std::abs(lm.width1 - nm.width1) / lm.width1;
    const double dw2 = std::abs(lm.width2 - nm.width2) / lm.width2;
    Outcome o;
    o.pass = std::abs(lm.mean1 - tol::kMeanTarget) < tol::kMean && std::abs(lm.mean2 - tol::kMeanTarget) < tol::kMean &&
             std::abs(nm.mean1 - tol::kMeanTarget) < tol::kMean && std::abs(nm.mean2 - tol::kMeanTarget) < tol::kMean &&
             dw1 < tol::kWidthConsistency && dw2 < tol::kWidthConsistency && t < tol::kHomodyneSeconds;
    o.detail = "means " + fmt("%.4f", lm.mean1) + ", " + fmt("%.4f", lm.mean2) + " (NM " + fmt("%.4f", nm.mean1) + ", " +
               fmt("%.4f", nm.mean2) + "); widths LM " + fmt("%.4f", lm.width1) + ", " + fmt("%.4f", lm.width2) +
               " NM " + fmt("%.4f", nm.width1) + ", " + fmt("%.4f", nm.width2) + " (rel diff " +
               fmt("%.1e", std::max(dw1, dw2)) + "; reference width " + fmt("%.3f", tol::kReportedWidth) + "), " +
               fmt("%.1f s", t);
    return o;
}

// Exact CDF from a density given pointwise, by dense trapezoid integration.
class TabulatedCdf {
public:
    TabulatedCdf(const std::function<double(double)>& pdf, double lo, double hi, std::size_t n) : lo_(lo), h_((hi - lo) / (n - 1)) {
        c_.assign(n, 0.0);
        double prev = pdf(lo);
        for (std::size_t i = 1; i < n; ++i) {
            const double cur = pdf(lo + h_ * i);
            c_[i] = c_[i - 1] + 0.5 * h_ * (prev + cur);
            prev = cur;
        }
        for (auto& v : c_) v /= c_.back();
    }
    double operator()(double x) const {
        const double f = (x - lo_) / h_;
        if (f <= 0.0) return 0.0;
        if (f >= static_cast<double>(c_.size() - 1)) return 1.0;
        const auto i = static_cast<std::size_t>(f);
        const double t = f - static_cast<double>(i);
        return (1.0 - t) * c_[i] + t * c_[i + 1];
    }

private:
    double lo_, h_;
    std::vector<double> c_;
};

Outcome sampler_soundness() {
    const auto t0 = Clock::now();
    struct Point {
        double chi, psi;
    };
    const Point points[] = {{0.0, 0.0}, {0.7, 1.3}, {2.2, 4.0}};
    const std::size_t n = 100000;
    const double crit = ks_critical_value_1pct(n);
    double worst = 0.0;
    bool pass = true;
    std::string detail;
    std::uint64_t seed = 99;
    auto check = [&](const char* name, const FockState& s, const std::function<std::function<double(double)>(Point)>& cdf) {
        double w = 0.0;
        for (const Point& p : points) {
            HomodyneConfig cfg;
            cfg.strategy = SamplingStrategy::Standard;
            cfg.n_samples = n;
            cfg.chi_list = {p.chi};
            cfg.psi_list = {p.psi};
            cfg.seed = seed++;
            const auto rec = run_campaign(s, cfg);
            std::vector<double> v(rec.size());
            for (std::size_t i = 0; i < rec.size(); ++i) v[i] = rec[i].value;
            w = std::max(w, ks_statistic(v, cdf(p)));
        }
        worst = std::max(worst, w);
        pass = pass && w < crit;
        detail += std::string(detail.empty() ? "" : ", ") + name + " " + fmt("%.5f", w);
    };

    check("vacuum", FockState(2, 2), [](Point) { return [](double x) { return oracle::normal_cdf(x, 0.0, 0.5); }; });
    check("coherent", circular4(coherent_cutoff(4.0)), [](Point p) {
        const cplx up = (std::cos(p.chi) * 4.0 + std::sin(p.chi) * cplx(0.0, 4.0)) * std::polar(1.0, -p.psi);
        const double mean = up.real();
        return [mean](double x) { return oracle::normal_cdf(x, mean, 0.5); };
    });
    // noon2 after the rotation: the partner-mode sectors 0, 1, 2 do not
    // interfere, leaving weights (c⁴+s⁴)/2, 2c²s², (c⁴+s⁴)/2 on ψ₂², ψ₁², ψ₀².
    check("noon2", noon2(), [](Point p) {
        const double c = std::cos(p.chi), s = std::sin(p.chi);
        const double w2 = 0.5 * (c * c * c * c + s * s * s * s);
        const double w1 = 2.0 * c * c * s * s;
        auto pdf = [=](double x) {
            const double h0 = oracle::hermite_function(0, x), h1 = oracle::hermite_function(1, x), h2 = oracle::hermite_function(2, x);
            return w2 * h2 * h2 + w1 * h1 * h1 + w2 * h0 * h0;
        };
        auto table = std::make_shared<TabulatedCdf>(pdf, -8.0, 8.0, 160001);
        return [table](double x) { return (*table)(x); };
    });
    const double t = seconds_since(t0);
    return {pass, "KS max per state " + detail + " (1% critical " + fmt("%.5f", crit) + "), " + fmt("%.1f s", t)};
}

struct PhaseCheck {
    double worst = 0.0;
    std::size_t bins = 0;
};

PhaseCheck compare_ray(const PhaseCurve& c) {
    PhaseCheck out;
    for (std::size_t i = 0; i < c.p.size(); ++i) {
        if (c.masked[i] || std::abs(c.p[i]) >= tol::kWeakRadius) continue;
        out.worst = std::max(out.worst, std::abs(oracle::phase_gap(c.phase[i], oracle::noon2_ray_phase(c.chi, c.p[i]))));
        ++out.bins;
    }
    return out;
}

Outcome weak_value_reconstruction() {
    const auto t0 = Clock::now();
    WeakConfig cfg;
    cfg.gamma_w = 0.05;
    const WeakScan scan = weak_scan(noon2(12), cfg);
    PhaseCheck at0, at60;
    for (const auto& c : scan.curves) {
        if (std::abs(c.chi) < 1e-12) at0 = compare_ray(c);
        if (std::abs(c.chi - kPi / 3) < 1e-12) at60 = compare_ray(c);
    }
    std::vector<double> failed;
    for (const auto& c : scan.curves) {
        if (c.failed) failed.push_back(c.chi);
    }
    const bool diagonals = failed.size() == 2 && std::abs(failed[0] - kPi / 4) < 1e-12 && std::abs(failed[1] - 3 * kPi / 4) < 1e-12;
    const PhaseSurface surface = assemble_joint_phase(scan.curves);
    std::size_t bridged = 0;
    for (auto b : surface.interpolated) bridged += b;
    const double t = seconds_since(t0);
    Outcome o;
    o.pass = at0.bins > 0 && at60.bins > 0 && at0.worst < tol::kWeakPhase && at60.worst < tol::kWeakPhase && diagonals &&
             bridged > 0 && t < tol::kWeakSeconds;
    std::string f;
    for (double c : failed) f += (f.empty() ? "" : ",") + fmt("%.4f", c);
    o.detail = "max phase error chi=0 " + fmt("%.4f", at0.worst) + " rad (" + std::to_string(at0.bins) + " bins), chi=pi/3 " +
               fmt("%.4f", at60.worst) + " rad (" + std::to_string(at60.bins) + " bins); failed chi {" + f + "}, " +
               std::to_string(bridged) + " bridged cells, " + fmt("%.1f s", t);
    return o;
}

// Phase gradient along the ray from the closed-form wavefunction.
double ray_slope(double chi, double p) {
    const double h = 1e-5;
    const auto psi = [&](double q) { return oracle::noon2_momentum(q * std::cos(chi), q * std::sin(chi)); };
    return std::arg(psi(p + h) / psi(p - h)) / (2.0 * h);
}

struct Deviation {
    double relative = 0.0;
    double absolute = 0.0;
};

Deviation response_deviation(double gamma) {
    WeakConfig cfg;
    cfg.gamma_w = gamma;
    cfg.window = 1e-3;
    cfg.chi_grid = {0.0, kPi / 3};
    const WeakScan scan = weak_scan(noon2(12), cfg);
    std::vector<double> rel, abs_dev;
    const double g = meter_gain(gamma);
    for (const auto& r : scan.records) {
        if (r.masked || std::abs(r.p) >= tol::kWeakRadius) continue;
        const double slope = ray_slope(r.chi, r.p);
        if (std::abs(slope) < 0.1) continue;
        const double first_order = -g * slope;
        rel.push_back(std::abs(r.meter_expectation - first_order) / std::abs(first_order));
        abs_dev.push_back(std::abs(r.meter_expectation - first_order));
    }
    auto median = [](std::vector<double> v) {
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
        return v[v.size() / 2];
    };
    if (rel.empty()) return {NAN, NAN};
    return {median(rel), median(abs_dev)};
}

Outcome weak_response_scaling() {
    const auto t0 = Clock::now();
    const Deviation d1 = response_deviation(0.1);
    const Deviation d2 = response_deviation(0.05);
    const Deviation d3 = response_deviation(0.025);
    const double r1 = d1.relative / d2.relative;
    const double r2 = d2.relative / d3.relative;
    const double t = seconds_since(t0);
    Outcome o;
    o.pass = r1 >= tol::kScaleLo && r1 <= tol::kScaleHi && r2 >= tol::kScaleLo && r2 <= tol::kScaleHi;
    o.detail = "relative deviation " + fmt("%.3e", d1.relative) + ", " + fmt("%.3e", d2.relative) + ", " +
               fmt("%.3e", d3.relative) + " -> ratios " + fmt("%.3f", r1) + ", " + fmt("%.3f", r2) +
               " (absolute ratios " + fmt("%.3f", d1.absolute / d2.absolute) + ", " + fmt("%.3f", d2.absolute / d3.absolute) +
               "), " + fmt("%.1f s", t);
    return o;
}

FockState random_state(std::mt19937_64& rng, int cutoff, int max_total) {
    std::normal_distribution<double> g;
    FockState s(2, cutoff);
    auto amps = s.amplitudes();
    for (std::size_t k = 0; k < s.size(); ++k) {
        const int n1 = s.occupation(k, 0), n2 = s.occupation(k, 1);
        amps[k] = n1 + n2 <= max_total ? cplx(g(rng), g(rng)) : cplx{};
    }
    s.normalize();
    return s;
}

Outcome state_engine() {
    const auto t0 = Clock::now();
    // Orthonormality on a dense trapezoid grid (spectrally accurate here).
    const std::size_t np = 8001;
    const double half = 10.0, h = 2.0 * half / (np - 1);
    std::vector<double> xs(np);
    for (std::size_t i = 0; i < np; ++i) xs[i] = -half + h * static_cast<double>(i);
    const std::vector<double> table = hermite_table(20, xs);
    double ortho = 0.0;
    for (int m = 0; m <= 20; ++m) {
        for (int n = m; n <= 20; ++n) {
            double s = 0.0;
            for (std::size_t i = 0; i < np; ++i) s += table[static_cast<std::size_t>(m) * np + i] * table[static_cast<std::size_t>(n) * np + i];
            ortho = std::max(ortho, std::abs(s * h - (m == n ? 1.0 : 0.0)));
        }
    }

    // 𝓟 wavefunction against the Fourier transform of the 𝓔 wavefunction,
    // with the partner mode in vacuum.
    std::mt19937_64 rng(5);
    double fourier = 0.0;
    {
        std::normal_distribution<double> g;
        FockState s(2, 6);
        auto amps = s.amplitudes();
        for (std::size_t k = 0; k < s.size(); ++k) amps[k] = s.occupation(k, 1) == 0 ? cplx(g(rng), g(rng)) : cplx{};
        s.normalize();
        const double v0 = oracle::hermite_function(0, 0.0);
        const auto psi_x = [&](double x) { return wavefunction_at(s, Axis::FieldStrength, x, 0.0) / v0; };
        for (double p = -3.0; p <= 3.0; p += 0.25) {
            const cplx direct = wavefunction_at(s, Axis::Momentum, p, 0.0) / v0;
            fourier = std::max(fourier, std::abs(direct - oracle::fourier_to_momentum(psi_x, p)));
        }
    }

    // Rotation group: R(a)R(b) = R(a+b) and R(a)R(−a) = 1, both signs.
    double fid = 1.0;
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    for (int trial = 0; trial < 10; ++trial) {
        const FockState s = random_state(rng, 8, 8);
        const double a = angle(rng), b = angle(rng);
        for (int sign : {1, -1}) {
            const FockState ab = apply_rotation(apply_rotation(s, a, sign), b, sign);
            fid = std::min(fid, fidelity(ab, apply_rotation(s, a + b, sign)));
            fid = std::min(fid, fidelity(apply_rotation(apply_rotation(s, a, sign), -a, sign), s));
        }
    }
    const double t = seconds_since(t0);
    Outcome o;
    o.pass = ortho < tol::kHermite && fourier < tol::kFourier && fid > 1.0 - tol::kFidelity;
    o.detail = "Hermite orthonormality " + fmt("%.2e", ortho) + " (n<=20), Fourier E<->P " + fmt("%.2e", fourier) +
               ", min group fidelity 1-" + fmt("%.1e", 1.0 - fid) + ", " + fmt("%.2f s", t);
    return o;
}

struct Criterion {
    const char* name;
    Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{{"unitarity", unitarity},
                                          {"oracle_equivalence", oracle_equivalence},
                                          {"calibration", calibration},
                                          {"homodyne_reconstruction", homodyne_reconstruction},
                                          {"sampler_soundness", sampler_soundness},
                                          {"weak_value_reconstruction", weak_value_reconstruction},
                                          {"weak_response_scaling", weak_response_scaling},
                                          {"state_engine", state_engine}};

    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--only", only, "run a single criterion")->check(CLI::Range(1, static_cast<int>(criteria.size())));
    CLI11_PARSE(app, argc, argv);

    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only != 0 && static_cast<std::size_t>(only) != k + 1) continue;
        Outcome o;
        try {
            o = criteria[k].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
