#pragma once

// Balanced-homodyne measurement campaigns on the rotated output mode.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kslight/fock_state.hpp"
#include "kslight/quadrature.hpp"

namespace kslight {

enum class SamplingStrategy { Standard, PhaseRandom, FullRandom };

[[nodiscard]] std::string_view to_string(SamplingStrategy s) noexcept;
[[nodiscard]] SamplingStrategy parse_strategy(std::string_view text);

/// k·period/count for k = 0..count−1.
[[nodiscard]] std::vector<double> uniform_angles(std::size_t count, double period);

struct HomodyneConfig {
    double lo_amplitude = 100.0;
    SamplingStrategy strategy = SamplingStrategy::PhaseRandom;
    std::size_t n_samples = 100000;
    std::vector<double> chi_list;  ///< rotation angles; all strategies draw χ from here
    std::vector<double> psi_list;  ///< LO phases; standard strategy only
    std::uint64_t seed = 1;
    int sign = 1;                        ///< rotation sign, see apply_rotation
    std::optional<Grid1D> grid;          ///< sampling grid; default covers the state's support
    std::size_t grid_points = 2048;
    std::size_t workers = 1;
    std::size_t chunk_size = 4096;       ///< fixed: part of the determinism contract

    void validate() const;
};

struct HomodyneRecord {
    double chi = 0.0;
    double psi = 0.0;
    double value = 0.0;
};

struct BhdMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Difference-current moments 2|α_LO|⟨𝓔₃⟩ and 4|α_LO|²⟨(Δ𝓔₃)²⟩ (unit
/// proportionality), where mode 3 is the upper output after the rotation by χ
/// and the LO phase ψ.
[[nodiscard]] BhdMoments bhd_moments(const FockState& state, double chi, double psi, double lo_amplitude,
                                     int sign = 1);

/// Grid that covers the output marginals of `state` for every rotation.
[[nodiscard]] Grid1D default_sampling_grid(const FockState& state, std::size_t points = 2048);

/// Marginal of the rotated upper mode written as Fourier harmonics of the LO
/// phase: P(x; ψ) = F₀(x) + 2 Re Σ_{k>0} e^{−iψk} F_k(x).
class RotatedMarginal {
public:
    RotatedMarginal(const FockState& state, double chi, int sign, const Grid1D& grid);

    [[nodiscard]] std::vector<double> density(double psi) const;
    /// Exact LO-phase average (the ψ-independent harmonic).
    [[nodiscard]] std::vector<double> phase_average() const;
    [[nodiscard]] const Grid1D& grid() const noexcept { return grid_; }
    [[nodiscard]] double chi() const noexcept { return chi_; }
    [[nodiscard]] std::size_t harmonics() const noexcept { return static_cast<std::size_t>(basis_.cols() / 2); }
    /// Unnormalized density (may dip slightly below zero from rounding).
    [[nodiscard]] Eigen::VectorXd raw_density(double psi) const;
    /// Inverse-CDF draw from the piecewise-linear density at LO phase psi;
    /// same result as InverseCdfSampler on density(psi), without building it.
    [[nodiscard]] double sample(double psi, double u) const;

private:
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    [[nodiscard]] Eigen::VectorXd coefficients(double psi) const;

    Grid1D grid_;
    double chi_;
    Eigen::VectorXd f0_;
    Eigen::MatrixXd basis_;  ///< columns 2 Re F_k, 2 Im F_k for k = 1..K (negligible tail pruned)
    RowMat nodes_;           ///< [f0 | basis] by grid node
    RowMat cumulative_;      ///< running trapezoid integrals of nodes_
};

/// Exact density of 𝓔₃ at (χ, ψ), normalized.
[[nodiscard]] Density1D measured_density(const FockState& state, double chi, double psi, const Grid1D& grid,
                                         int sign = 1);

/// Runs the Monte Carlo campaign. Samples are split in chunks of
/// config.chunk_size; chunk c draws from RandomStream(seed, c), so the output
/// does not depend on the worker count.
[[nodiscard]] std::vector<HomodyneRecord> run_campaign(const FockState& state, const HomodyneConfig& config);

/// (1/2π)∫P(𝓔₃; χ, ψ)dψ by the trapezoid rule on psi_grid, which must cover
/// [ψ₀, ψ₀ + 2π) uniformly.
[[nodiscard]] Density1D phase_averaged_density(const FockState& state, double chi, std::span<const double> psi_grid,
                                               const Grid1D& grid, int sign = 1);

struct StageSetting {
    double chi = 0.0;
    double psi = 0.0;
    int sign = 1;
};

/// Reck-style chain on an N-mode state: stage k rotates (carry, k+1), the
/// upper output (the carry slot) goes to a homodyne detector with LO phase ψ_k
/// and the lower output (mode k+1) becomes the next carry. Returns the N−1
/// measured marginals. The first carry is mode 0.
[[nodiscard]] std::vector<Density1D> chain_stages(const FockState& state, std::span<const StageSetting> stages,
                                                  const Grid1D& grid);

}  // namespace kslight
