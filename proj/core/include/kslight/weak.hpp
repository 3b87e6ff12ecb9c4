#pragma once

// Weak-measurement reconstruction of two-mode wavefunctions in the momentum
// (𝓟) representation: weak coupling to a vacuum meter, postselection on the
// strong readouts, radial phase integration and assembly over angles.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kslight/fock_state.hpp"
#include "kslight/quadrature.hpp"

namespace kslight {

/// ⟨post|Â|pre⟩ / ⟨post|pre⟩. Throws OrthogonalPostselection when the
/// normalized overlap is below 1e−12.
[[nodiscard]] cplx weak_value(const Eigen::MatrixXcd& op, const Eigen::VectorXcd& pre, const Eigen::VectorXcd& post);

/// Appends a vacuum meter mode and couples it to `signal_mode` with mixing
/// angle Γ_w (rotation sign −1). The cutoff is raised to at least the largest
/// occupied photon number + 2 when needed.
[[nodiscard]] FockState weak_couple(const FockState& signal, double gamma_w, int signal_mode = 0);

/// First-order meter response: E[𝓔_μ] ≈ −gain·∂φ/∂𝓟 with gain = Γ_w/2 under
/// [𝓔, 𝓟] = i/2.
[[nodiscard]] constexpr double meter_gain(double gamma_w) noexcept { return 0.5 * gamma_w; }

struct WeakConfig {
    double gamma_w = 0.05;
    std::vector<double> chi_grid;   ///< default kπ/12, k = 0..11
    Grid1D p_grid{-4.0, 4.0, 321};  ///< must contain 0
    double window = 0.02;           ///< postselection half-width on 𝓟₄
    double mask_threshold = 1e-3;   ///< fraction of the per-χ maximum probability
    double node_ratio = 0.02;       ///< dip depth that marks a phase node
    double r_max = 3.0;
    bool sampled = false;
    std::size_t n_samples = 100000;  ///< sampled mode, per angle
    std::uint64_t seed = 1;
    std::size_t workers = 1;

    WeakConfig();
    void validate() const;
    [[nodiscard]] bool strong_coupling() const noexcept { return gamma_w > 0.2; }
};

struct WeakScanRecord {
    double chi = 0.0;
    double p = 0.0;
    double probability = 0.0;
    double meter_expectation = 0.0;
    double phase = 0.0;  ///< NaN where masked
    bool masked = false;
};

struct PhaseCurve {
    double chi = 0.0;
    std::vector<double> p;
    std::vector<double> phase;  ///< raw integral, defined at every node
    std::vector<double> probability;
    std::vector<double> amplitude;  ///< |Ψ| along the ray
    std::vector<std::uint8_t> masked;
    bool failed = false;  ///< a phase node makes the reference along this ray unusable
};

struct WeakScan {
    std::vector<WeakScanRecord> records;  ///< ordered by χ, then p
    std::vector<PhaseCurve> curves;
    std::vector<double> window_mass;  ///< P(|𝓟₄| < w) per χ
};

/// For each χ: rotate the pair by χ, weak-couple the upper output to the
/// meter, then for every p bin compute the probability of 𝓟₃ = p jointly with
/// |𝓟₄| < w and the postselected meter expectation ⟨𝓔_μ⟩. Exact by default,
/// Monte Carlo when config.sampled. Throws EmptyPostselection when the window
/// mass is below 1e−9.
[[nodiscard]] WeakScan weak_scan(const FockState& state, const WeakConfig& config);

/// φ(p) = −(1/gain)∫₀ᵖ E dp′ by the cumulative trapezoid rule outward from
/// p = 0 (φ(0) = 0). Records must share χ and be sorted by p.
[[nodiscard]] PhaseCurve reconstruct_phase_1d(std::span<const WeakScanRecord> records, double gamma_w);

/// Interior local minimum of the probability inside |p| < r_max that drops
/// below node_ratio × the smaller of the maxima on either side.
/// Both flanking maxima must reach 10 × mask_threshold of the global maximum,
/// so noise in the tails is ignored.
[[nodiscard]] bool has_phase_node(const PhaseCurve& curve, double r_max, double node_ratio,
                                  double mask_threshold = 1e-3);

struct AssembleOptions {
    Grid1D p1{-3.0, 3.0, 121};
    Grid1D p2{-3.0, 3.0, 121};
    double r_max = 3.0;
};

struct PhaseSurface {
    Grid1D p1;
    Grid1D p2;
    std::vector<double> phase;  ///< row-major [i * p2.points + j], NaN where masked
    std::vector<double> amplitude;
    std::vector<std::uint8_t> masked;
    std::vector<std::uint8_t> interpolated;  ///< bridged across a failed angle
    std::vector<double> used_chi;
    std::vector<double> failed_chi;

    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * p2.points + j; }
};

/// Places each curve along its line through the origin and interpolates
/// linearly in angle at fixed signed radius between usable curves. Throws
/// NotReconstructible when no curve is usable and TooFewAngles below 4.
[[nodiscard]] PhaseSurface assemble_joint_phase(std::span<const PhaseCurve> curves, const AssembleOptions& options = {});

}  // namespace kslight
