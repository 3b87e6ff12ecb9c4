#include "kslight/quadrature.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "kslight/errors.hpp"
#include "kslight/hermite.hpp"

namespace kslight {

namespace {

constexpr double kMassTolerance = 1e-6;

double trapezoid(const std::vector<double>& f, double h) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

void check_mass(double mass, std::string_view what) {
    if (!(mass >= 1.0 - kMassTolerance)) {
        throw GridTooNarrow(std::string(what) + " grid holds only " + std::to_string(mass) + " of the probability");
    }
}

std::size_t nearest_node(const Grid1D& g, double x) {
    const double r = std::round((x - g.lo) / g.step());
    return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(g.points - 1)));
}

}  // namespace

std::string_view to_string(Axis axis) noexcept { return axis == Axis::FieldStrength ? "E" : "P"; }

Axis parse_axis(std::string_view text) {
    if (!text.empty()) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text.front())));
        if ((c == 'E' || c == 'F') && (text.size() == 1 || text == "field" || text == "field-strength")) {
            return Axis::FieldStrength;
        }
        if ((c == 'P' || c == 'M') && (text.size() == 1 || text == "momentum")) return Axis::Momentum;
    }
    throw InvalidConfig("unknown axis '" + std::string(text) + "' (expected E or P)");
}

std::vector<double> Grid1D::values() const {
    std::vector<double> v(points);
    for (std::size_t i = 0; i < points; ++i) v[i] = at(i);
    return v;
}

void Grid1D::validate() const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo) || points < 2) {
        throw InvalidConfig("grid needs finite hi > lo and at least 2 points");
    }
}

double support_half_width(int cutoff, double shift) {
    return std::sqrt(2.0 * cutoff + 1.0) / 2.0 + std::abs(shift) + 4.0;
}

double Density1D::integral() const { return trapezoid(values, grid.step()); }

double Density1D::mean() const {
    std::vector<double> f(values.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = grid.at(i) * values[i];
    return trapezoid(f, grid.step()) / integral();
}

double Density1D::variance() const {
    const double m = mean();
    std::vector<double> f(values.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = grid.at(i) - m;
        f[i] = d * d * values[i];
    }
    return trapezoid(f, grid.step()) / integral();
}

double JointWavefunction::norm_squared() const {
    // 2-D trapezoid.
    double s = 0.0;
    for (std::size_t i = 0; i < grid1.points; ++i) {
        const double wi = (i == 0 || i + 1 == grid1.points) ? 0.5 : 1.0;
        for (std::size_t j = 0; j < grid2.points; ++j) {
            const double wj = (j == 0 || j + 1 == grid2.points) ? 0.5 : 1.0;
            s += wi * wj * std::norm((*this)(i, j));
        }
    }
    return s * grid1.step() * grid2.step();
}

cplx axis_phase(Axis axis, int n) noexcept {
    if (axis == Axis::FieldStrength) return 1.0;
    switch (n % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, -1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, 1.0};
    }
}

Density1D density_from_matrix(const Eigen::MatrixXcd& rho, Axis axis, const Grid1D& grid) {
    grid.validate();
    const int nmax = static_cast<int>(rho.rows()) - 1;
    const auto xs = grid.values();
    const auto table = hermite_table(nmax, xs);
    const std::size_t m = xs.size();

    // ρ'_mn = ρ_mn f_m conj(f_n) with the axis phases; P(x) = ψᵀ ρ' ψ (real).
    Eigen::MatrixXcd rp = rho;
    for (int a = 0; a <= nmax; ++a) {
        for (int b = 0; b <= nmax; ++b) rp(a, b) *= axis_phase(axis, a) * std::conj(axis_phase(axis, b));
    }
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> psi(
        table.data(), nmax + 1, static_cast<Eigen::Index>(m));
    const Eigen::MatrixXd re = rp.real();
    // Hermitian ρ': imaginary part antisymmetric, drops out of ψᵀρ'ψ.
    const Eigen::MatrixXd tmp = re * psi;

    Density1D out{axis, grid, std::vector<double>(m)};
    for (std::size_t i = 0; i < m; ++i) {
        out.values[i] = std::max(0.0, psi.col(static_cast<Eigen::Index>(i)).dot(tmp.col(static_cast<Eigen::Index>(i))));
    }
    const double mass = out.integral();
    const double trace = rho.trace().real();
    check_mass(trace > 0.0 ? mass / trace : 0.0, "density");
    for (auto& v : out.values) v /= mass;
    return out;
}

Density1D quadrature_density(const FockState& state, int mode, Axis axis, const Grid1D& grid) {
    return density_from_matrix(reduced_density(state, mode), axis, grid);
}

JointWavefunction joint_wavefunction(const FockState& state, const Grid1D& grid1, const Grid1D& grid2, Axis axis) {
    if (state.modes() != 2) throw InvalidConfig("joint wavefunction needs a two-mode state");
    grid1.validate();
    grid2.validate();
    const int c = state.cutoff();
    const auto lv = static_cast<Eigen::Index>(state.levels());
    const auto x1 = grid1.values();
    const auto x2 = grid2.values();
    const auto t1 = hermite_table(c, x1);
    const auto t2 = hermite_table(c, x2);

    Eigen::MatrixXcd coef(lv, lv);
    for (Eigen::Index a = 0; a < lv; ++a) {
        for (Eigen::Index b = 0; b < lv; ++b) {
            coef(a, b) = state.amplitudes()[static_cast<std::size_t>(a * lv + b)] *
                         axis_phase(axis, static_cast<int>(a)) * axis_phase(axis, static_cast<int>(b));
        }
    }
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> f1(t1.data(), lv, static_cast<Eigen::Index>(x1.size()));
    Eigen::Map<const RowMat> f2(t2.data(), lv, static_cast<Eigen::Index>(x2.size()));
    const Eigen::MatrixXcd psi = f1.transpose().cast<cplx>() * coef * f2.cast<cplx>();

    JointWavefunction out;
    out.axis = axis;
    out.grid1 = grid1;
    out.grid2 = grid2;
    out.values.resize(x1.size() * x2.size());
    for (std::size_t i = 0; i < x1.size(); ++i) {
        for (std::size_t j = 0; j < x2.size(); ++j) {
            out.values[i * x2.size() + j] = psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    check_mass(out.norm_squared() / state.norm_squared(), "wavefunction");

    out.origin_i = nearest_node(grid1, 0.0);
    out.origin_j = nearest_node(grid2, 0.0);
    const cplx ref = out(out.origin_i, out.origin_j);
    if (std::abs(ref) > 0.0) {
        const cplx rot = std::conj(ref) / std::abs(ref);
        for (auto& v : out.values) v *= rot;
    }
    return out;
}

cplx wavefunction_at(const FockState& state, Axis axis, double x1, double x2) {
    if (state.modes() != 2) throw InvalidConfig("wavefunction needs a two-mode state");
    const int c = state.cutoff();
    std::vector<cplx> f1(static_cast<std::size_t>(c) + 1);
    std::vector<cplx> f2(static_cast<std::size_t>(c) + 1);
    for (int n = 0; n <= c; ++n) {
        f1[static_cast<std::size_t>(n)] = axis_phase(axis, n) * hermite_psi(n, x1);
        f2[static_cast<std::size_t>(n)] = axis_phase(axis, n) * hermite_psi(n, x2);
    }
    cplx s{};
    const auto lv = state.levels();
    for (std::size_t a = 0; a < lv; ++a) {
        for (std::size_t b = 0; b < lv; ++b) s += state.amplitudes()[a * lv + b] * f1[a] * f2[b];
    }
    return s;
}

}  // namespace kslight
