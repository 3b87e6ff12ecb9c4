#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <kslight/errors.hpp>
#include <kslight/fock_state.hpp>
#include <kslight/hermite.hpp>
#include <kslight/quadrature.hpp>

#include "oracles.hpp"

using namespace kslight;

namespace {

double simpson(const std::function<double(double)>& f, double lo, double hi, int intervals = 4000) {
    const double h = (hi - lo) / intervals;
    double s = f(lo) + f(hi);
    for (int k = 1; k < intervals; ++k) s += (k % 2 ? 4.0 : 2.0) * f(lo + h * k);
    return s * h / 3.0;
}

// Random state with at most `cutoff` quanta in total, so every rotation of it
// stays inside the truncated space.
FockState random_state(int cutoff, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    FockState s(2, cutoff);
    auto amps = s.amplitudes();
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.occupation(k, 0) + s.occupation(k, 1) <= cutoff) amps[k] = {g(rng), g(rng)};
    }
    s.normalize();
    return s;
}

}  // namespace

TEST(Hermite, VacuumValue) { EXPECT_NEAR(hermite_psi(0, 0.0), std::pow(2.0 / kPi, 0.25), 1e-15); }

TEST(Hermite, MatchesExplicitPolynomials) {
    for (int n = 0; n <= 20; ++n) {
        for (double x : {-2.3, -0.7, 0.0, 0.4, 1.9, 3.1}) {
            EXPECT_NEAR(hermite_psi(n, x), oracle::hermite_function(n, x), 1e-12) << n << " " << x;
        }
    }
}

TEST(Hermite, Orthonormal) {
    for (int m = 0; m <= 20; ++m) {
        for (int n = m; n <= 20; ++n) {
            const double v = simpson([&](double x) { return hermite_psi(m, x) * hermite_psi(n, x); }, -9.0, 9.0);
            EXPECT_NEAR(v, m == n ? 1.0 : 0.0, 1e-10) << m << "," << n;
        }
    }
}

TEST(Hermite, SecondMoment) {
    for (int n = 0; n <= 20; ++n) {
        const double v = simpson([&](double x) { return x * x * std::pow(hermite_psi(n, x), 2); }, -9.0, 9.0);
        EXPECT_NEAR(v, (2.0 * n + 1.0) / 4.0, 1e-8) << n;
    }
}

TEST(Hermite, StableAtSixty) {
    const double v = simpson([](double x) { return std::pow(hermite_psi(60, x), 2); }, -10.0, 10.0, 20000);
    EXPECT_NEAR(v, 1.0, 1e-9);
    const auto table = hermite_table(3, std::vector<double>{0.2, -1.0});
    EXPECT_DOUBLE_EQ(table[3 * 2 + 1], hermite_psi(3, -1.0));
}

TEST(Coherent, AmplitudesAndNorm) {
    const auto vac = coherent_state(0.0, 5);
    EXPECT_DOUBLE_EQ(std::abs(vac[0]), 1.0);
    const auto c = coherent_state(4.0, 60);
    const auto o = oracle::coherent(4.0, 60);
    double norm = 0.0;
    for (std::size_t n = 0; n < c.size(); ++n) {
        EXPECT_NEAR(std::abs(c[n] - o[n]), 0.0, 1e-14);
        norm += std::norm(c[n]);
    }
    EXPECT_GE(norm, 1.0 - 1e-10);
    EXPECT_THROW((void)coherent_state(4.0, 20), TruncationOverflow);
    EXPECT_GE(coherent_cutoff(4.0), 16 + 32);
}

TEST(Coherent, FieldMeanFromDensity) {
    const cplx alpha(1.3, -0.8);
    const std::vector<cplx> a{alpha, cplx(0.0)};
    const FockState s = coherent_product(a, coherent_cutoff(alpha));
    const Density1D e = quadrature_density(s, 0, Axis::FieldStrength, Grid1D::symmetric(8.0, 2001));
    EXPECT_NEAR(e.mean(), alpha.real(), 1e-8);
    EXPECT_NEAR(e.variance(), 0.25, 1e-6);
    const Density1D p = quadrature_density(s, 0, Axis::Momentum, Grid1D::symmetric(8.0, 2001));
    EXPECT_NEAR(p.mean(), alpha.imag(), 1e-8);
    EXPECT_NEAR(p.variance(), 0.25, 1e-6);
}

TEST(Noon2, Basics) {
    const FockState s = noon2();
    EXPECT_NEAR(s.norm_squared(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(s.at({2, 0}) - cplx(std::sqrt(0.5))), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(s.at({0, 2}) - cplx(0, std::sqrt(0.5))), 0.0, 1e-15);
    const Eigen::MatrixXcd rho = reduced_density(s, 0);
    EXPECT_NEAR(rho(0, 0).real(), 0.5, 1e-15);
    EXPECT_NEAR(std::abs(rho(1, 1)), 0.0, 1e-15);
    EXPECT_NEAR(rho(2, 2).real(), 0.5, 1e-15);
    EXPECT_NEAR(std::abs(rho(0, 2)), 0.0, 1e-15);
    const Grid1D g = Grid1D::symmetric(6.0, 801);
    EXPECT_NEAR(quadrature_density(s, 0, Axis::FieldStrength, g).mean(), 0.0, 1e-12);
    EXPECT_NEAR(quadrature_density(s, 1, Axis::FieldStrength, g).mean(), 0.0, 1e-12);
}

TEST(Noon2, MomentumMarginal) {
    const Grid1D g = Grid1D::symmetric(6.0, 1201);
    const Density1D d = quadrature_density(noon2(12), 0, Axis::Momentum, g);
    for (std::size_t i = 0; i < g.points; i += 37) {
        const double p = g.at(i);
        const double expected = 0.5 * (std::pow(oracle::hermite_function(0, p), 2) + std::pow(oracle::hermite_function(2, p), 2));
        EXPECT_NEAR(d.values[i], expected, 1e-9) << p;
    }
}

TEST(Rotation, IdentityAndQuarterTurn) {
    std::mt19937_64 rng(1);
    const FockState s = random_state(4, rng);
    EXPECT_GT(fidelity(apply_rotation(s, 0.0), s), 1.0 - 1e-14);

    FockState one(2, 3);
    one.amplitudes()[0] = 0.0;
    one.at({1, 0}) = 1.0;
    const FockState q = apply_rotation(one, kPi / 2.0);
    EXPECT_NEAR(std::abs(q.at({0, 1})), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(q.at({1, 0})), 0.0, 1e-12);
}

TEST(Rotation, GroupPropertyAndNorm) {
    std::mt19937_64 rng(2);
    const FockState s = random_state(6, rng);
    for (int sign : {1, -1}) {
        const FockState a = apply_rotation(apply_rotation(s, 0.37, sign), 0.81, sign);
        const FockState b = apply_rotation(s, 1.18, sign);
        EXPECT_GT(fidelity(a, b), 1.0 - 1e-12);
        EXPECT_NEAR(a.norm_squared(), 1.0, 1e-12);
        EXPECT_GT(fidelity(apply_rotation(apply_rotation(s, 0.9, sign), -0.9, sign), s), 1.0 - 1e-12);
    }
}

TEST(Rotation, CoherentProductStaysCoherent) {
    const cplx a1(1.5, 0.5), a2(-0.3, 1.2);
    const int cutoff = 30;
    const std::vector<cplx> in{a1, a2};
    for (double chi : {0.3, 1.1, 2.0}) {
        for (int sign : {1, -1}) {
            const double c = std::cos(chi), s = std::sin(chi) * sign;
            const FockState rotated = apply_rotation(coherent_product(in, cutoff), chi, sign);
            const std::vector<cplx> expected_alphas{c * a1 + s * a2, -s * a1 + c * a2};
            const std::vector<std::vector<cplx>> factors{oracle::coherent(expected_alphas[0], cutoff),
                                                         oracle::coherent(expected_alphas[1], cutoff)};
            EXPECT_GT(fidelity(rotated, product_state(factors)), 1.0 - 1e-8) << chi << " " << sign;
        }
    }
}

TEST(Rotation, ConservesPhotonNumber) {
    std::mt19937_64 rng(3);
    const FockState s = random_state(5, rng);
    const FockState r = apply_rotation(s, 0.77);
    EXPECT_NEAR(mean_photon_number(r, 0) + mean_photon_number(r, 1), mean_photon_number(s, 0) + mean_photon_number(s, 1),
                1e-9);
}

TEST(Rotation, ReportsTruncationLoss) {
    // A cutoff-3 state fits, but rotating |3,3⟩ needs up to 6 quanta per mode.
    FockState s(2, 3);
    s.amplitudes()[0] = 0.0;
    s.at({3, 3}) = 1.0;
    EXPECT_THROW((void)apply_rotation(s, 0.5), TruncationOverflow);
    const FockState wide = apply_rotation(s.with_cutoff(6), 0.5);
    EXPECT_LT(wide.truncation_loss(), 1e-12);
    EXPECT_NEAR(wide.norm_squared(), 1.0, 1e-12);
}

TEST(LoPhase, PeriodAndCoherentRotation) {
    std::mt19937_64 rng(4);
    const FockState s = random_state(4, rng);
    EXPECT_GT(fidelity(apply_lo_phase(s, 0.0, 0), s), 1.0 - 1e-15);
    EXPECT_GT(fidelity(apply_lo_phase(s, 2.0 * kPi, 1), s), 1.0 - 1e-12);

    const cplx alpha(2.0, 0.5);
    const int cutoff = 30;
    const std::vector<cplx> in{alpha, cplx(0.0)};
    const double psi = 0.9;
    const FockState out = apply_lo_phase(coherent_product(in, cutoff), psi, 0);
    const std::vector<std::vector<cplx>> f{oracle::coherent(alpha * std::polar(1.0, -psi), cutoff),
                                           oracle::coherent(0.0, cutoff)};
    EXPECT_GT(fidelity(out, product_state(f)), 1.0 - 1e-10);
}

TEST(Density, VacuumGaussian) {
    const FockState vac(2, 4);
    const Density1D d = quadrature_density(vac, 1, Axis::FieldStrength, Grid1D::symmetric(5.0, 1001));
    EXPECT_NEAR(d.integral(), 1.0, 1e-12);
    EXPECT_NEAR(d.variance(), 0.25, 1e-9);
    EXPECT_NEAR(d.values[500], std::sqrt(2.0 / kPi), 1e-9);
}

TEST(Density, GridTooNarrow) {
    const std::vector<cplx> a{cplx(3.0), cplx(0.0)};
    const FockState s = coherent_product(a, coherent_cutoff(3.0));
    EXPECT_THROW((void)quadrature_density(s, 0, Axis::FieldStrength, Grid1D::symmetric(2.0, 401)), GridTooNarrow);
}

TEST(Density, MomentumMatchesFourierTransform) {
    std::mt19937_64 rng(9);
    const FockState s = random_state(6, rng);
    const Grid1D g = Grid1D::symmetric(6.0, 121);
    const Density1D dp = quadrature_density(s, 0, Axis::Momentum, g);
    // P(p) = Σ_k |∫ e^{−2ipx} Ψ(x, k) dx|²/π with the partner in its number basis.
    for (std::size_t i = 0; i < g.points; ++i) {
        const double p = g.at(i);
        double expected = 0.0;
        for (int k = 0; k <= s.cutoff(); ++k) {
            const auto psi_x = [&](double x) {
                cplx acc{};
                for (int n = 0; n <= s.cutoff(); ++n) acc += s.at({n, k}) * oracle::hermite_function(n, x);
                return acc;
            };
            expected += std::norm(oracle::fourier_to_momentum(psi_x, p));
        }
        EXPECT_NEAR(dp.values[i], expected, 1e-6) << p;
    }
}

TEST(Density, FromMatrixChecksTrace) {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(3, 3);
    rho(1, 1) = 1.0;
    const Density1D d = density_from_matrix(rho, Axis::Momentum, Grid1D::symmetric(6.0, 601));
    EXPECT_NEAR(d.variance(), 0.75, 1e-9);
}

TEST(JointWavefunction, VacuumIsFlatPhase) {
    const FockState vac(2, 3);
    const Grid1D g = Grid1D::symmetric(4.0, 41);
    const JointWavefunction psi = joint_wavefunction(vac, g, g, Axis::Momentum);
    EXPECT_NEAR(psi.norm_squared(), 1.0, 1e-6);
    for (std::size_t i = 0; i < g.points; ++i) {
        for (std::size_t j = 0; j < g.points; ++j) EXPECT_NEAR(psi.phase(i, j), 0.0, 1e-12);
    }
}

TEST(JointWavefunction, Noon2MatchesClosedForm) {
    const Grid1D g = Grid1D::symmetric(4.5, 91);
    const JointWavefunction psi = joint_wavefunction(noon2(12), g, g, Axis::Momentum);
    EXPECT_NEAR(psi.norm_squared(), 1.0, 1e-6);
    EXPECT_EQ(psi.origin_i, 45u);
    EXPECT_NEAR(psi.phase(45, 45), 0.0, 1e-14);
    const cplx ref = oracle::noon2_momentum(0.0, 0.0);
    for (std::size_t i = 0; i < g.points; i += 3) {
        for (std::size_t j = 0; j < g.points; j += 3) {
            const cplx e = oracle::noon2_momentum(g.at(i), g.at(j)) / ref;
            if (std::abs(e) < 1e-8) continue;
            EXPECT_NEAR(oracle::phase_gap(psi.phase(i, j), std::arg(e)), 0.0, 1e-9);
        }
    }
}

TEST(JointWavefunction, Noon2PhaseJumpsOnDiagonals) {
    // On the diagonal p₁ = p₂ = t both terms vanish together at t = 1/2.
    const Grid1D g = Grid1D::symmetric(4.0, 401);
    const JointWavefunction psi = joint_wavefunction(noon2(12), g, g, Axis::Momentum);
    const double before = psi.phase(200 + 10, 200 + 10);  // t = 0.2
    const double after = psi.phase(200 + 40, 200 + 40);   // t = 0.8
    EXPECT_NEAR(std::abs(oracle::phase_gap(after, before)), kPi, 1e-9);
    // Off the diagonal the phase varies smoothly along the p₁ axis.
    double worst = 0.0;
    for (std::size_t i = 201; i < 300; ++i) worst = std::max(worst, std::abs(oracle::phase_gap(psi.phase(i, 200), psi.phase(i - 1, 200))));
    EXPECT_LT(worst, 0.2);
}

TEST(JointWavefunction, PointEvaluationAgrees) {
    std::mt19937_64 rng(12);
    const FockState s = random_state(5, rng);
    const Grid1D g = Grid1D::symmetric(5.0, 41);
    const JointWavefunction psi = joint_wavefunction(s, g, g, Axis::FieldStrength);
    const cplx ref = wavefunction_at(s, Axis::FieldStrength, 0.0, 0.0);
    const cplx rot = std::conj(ref) / std::abs(ref);
    EXPECT_NEAR(std::abs(psi(3, 7) - rot * wavefunction_at(s, Axis::FieldStrength, g.at(3), g.at(7))), 0.0, 1e-12);
}

TEST(FockState, ShapeAndCutoffChanges) {
    FockState s(3, 2);
    EXPECT_EQ(s.size(), 27u);
    EXPECT_EQ(s.stride(0), 9u);
    s.at({0, 0, 0}) = 0.0;
    s.at({1, 2, 0}) = 1.0;
    EXPECT_EQ(s.occupation(s.index(std::vector<int>{1, 2, 0}), 1), 2);
    EXPECT_EQ(s.max_occupation(), 2);
    const FockState wide = s.with_cutoff(5);
    EXPECT_NEAR(std::abs(wide.at({1, 2, 0})), 1.0, 0.0);
    EXPECT_THROW((void)s.with_cutoff(1), TruncationOverflow);
    EXPECT_EQ(noon2().with_vacuum_mode().modes(), 3);
    FockState zero(2, 1);
    zero.amplitudes()[0] = 0.0;
    EXPECT_THROW(zero.normalize(), NormalizationError);
}

TEST(QuadratureAxis, Parse) {
    EXPECT_EQ(parse_axis("E"), Axis::FieldStrength);
    EXPECT_EQ(parse_axis("p"), Axis::Momentum);
    EXPECT_EQ(parse_axis("momentum"), Axis::Momentum);
    EXPECT_THROW((void)parse_axis("Q"), InvalidConfig);
    EXPECT_EQ(to_string(Axis::Momentum), "P");
    EXPECT_EQ(axis_phase(Axis::Momentum, 1), cplx(0, -1));
}
