#pragma once

// Field-strength (𝓔) and momentum (𝓟) representations of Fock states.

#include <complex>
#include <cstddef>
#include <string_view>
#include <vector>

#include "kslight/fock_state.hpp"

namespace kslight {

enum class Axis { FieldStrength, Momentum };

[[nodiscard]] std::string_view to_string(Axis axis) noexcept;
/// Accepts "E"/"field" and "P"/"momentum" (case-insensitive first letter).
[[nodiscard]] Axis parse_axis(std::string_view text);

/// Uniform closed grid [lo, hi] with `points` ≥ 2 nodes.
struct Grid1D {
    double lo = -1.0;
    double hi = 1.0;
    std::size_t points = 2;

    [[nodiscard]] double step() const noexcept { return (hi - lo) / static_cast<double>(points - 1); }
    [[nodiscard]] double at(std::size_t i) const noexcept { return lo + step() * static_cast<double>(i); }
    [[nodiscard]] std::vector<double> values() const;
    /// Throws InvalidConfig unless finite, hi > lo and points ≥ 2.
    void validate() const;

    [[nodiscard]] static Grid1D symmetric(double half_width, std::size_t points) {
        return {-half_width, half_width, points};
    }
};

/// Half-width that safely covers the classically allowed region of photon
/// numbers ≤ cutoff plus any displacement: √(2·cutoff+1)/2 + |shift| + 4.
[[nodiscard]] double support_half_width(int cutoff, double shift = 0.0);

struct Density1D {
    Axis axis = Axis::FieldStrength;
    Grid1D grid;
    std::vector<double> values;

    [[nodiscard]] double integral() const;
    [[nodiscard]] double mean() const;
    [[nodiscard]] double variance() const;
};

struct JointWavefunction {
    Axis axis = Axis::FieldStrength;
    Grid1D grid1;
    Grid1D grid2;
    std::vector<cplx> values;  ///< row-major: values[i * grid2.points + j] at (x1_i, x2_j)
    std::size_t origin_i = 0;  ///< grid node nearest the origin, where the phase is 0
    std::size_t origin_j = 0;

    [[nodiscard]] cplx operator()(std::size_t i, std::size_t j) const { return values[i * grid2.points + j]; }
    [[nodiscard]] double amplitude(std::size_t i, std::size_t j) const { return std::abs((*this)(i, j)); }
    [[nodiscard]] double phase(std::size_t i, std::size_t j) const { return std::arg((*this)(i, j)); }
    [[nodiscard]] double norm_squared() const;
};

/// Eigenfunction phase factor for the axis: 1 for 𝓔, (−i)ⁿ for 𝓟.
[[nodiscard]] cplx axis_phase(Axis axis, int n) noexcept;

/// Marginal density of one mode on the grid, normalized by the trapezoid
/// rule. Throws GridTooNarrow when the grid holds less than 1 − 1e−6 of the
/// probability.
[[nodiscard]] Density1D quadrature_density(const FockState& state, int mode, Axis axis, const Grid1D& grid);

/// Same, from a single-mode density matrix.
[[nodiscard]] Density1D density_from_matrix(const Eigen::MatrixXcd& rho, Axis axis, const Grid1D& grid);

/// Two-mode wavefunction Ψ(x₁, x₂) with its global phase fixed so that
/// arg Ψ = 0 at the node nearest the origin (left untouched when Ψ vanishes
/// there). Throws GridTooNarrow as above.
[[nodiscard]] JointWavefunction joint_wavefunction(const FockState& state, const Grid1D& grid1,
                                                   const Grid1D& grid2, Axis axis);

/// Pointwise Ψ(x₁, x₂) of a two-mode state, without phase fixing.
[[nodiscard]] cplx wavefunction_at(const FockState& state, Axis axis, double x1, double x2);

}  // namespace kslight
