#pragma once

// Reversed-electrode (alternating Δβ) directional coupler: closed-form cell
// response, numerically integrated coupled-mode oracle, electrode calibration
// and the first-order fabrication-defect models of a passive-coupler MZI.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "kslight/constants.hpp"

namespace kslight {

/// Electrical and geometric state of one coupler cell. Voltages are abstract:
/// the electrodes are represented directly by delta, phi1 and phi2.
struct CouplerSettings {
    double kappa = 0.0;       ///< coupling coefficient, rad/m (> 0)
    double length = 0.0;      ///< coupler length L, m (> 0)
    double wavelength = 0.0;  ///< vacuum wavelength, m (> 0)
    double delta = 0.0;       ///< half propagation-constant mismatch Δβ/2, rad/m
    double phi1 = 0.0;        ///< input phase shift, rad
    double phi2 = 0.0;        ///< output phase shift, rad

    [[nodiscard]] double k0() const noexcept { return 2.0 * kPi / wavelength; }
    /// Throws InvalidSettings when kappa, length or wavelength are not positive
    /// and finite, or when delta/phases are not finite.
    void validate() const;
};

struct CellResponse {
    double u = 1.0;
    double v = 0.0;
    double theta = 0.0;      ///< auxiliary phase, branch-tracked (continuous in delta)
    double a_coef = 1.0;     ///< A = u² − v²
    double b_coef = 0.0;     ///< B = 2uv
    double beta_r = 0.0;     ///< sqrt(κ² + δ²)
    double big_theta = 0.0;  ///< Θ = 4·atan2(v, u)
    double chi = 0.0;        ///< effective rotation angle atan2(B, A) = Θ/2
};

/// Row-major 2x2 complex mode transformation.
class TransferMatrix2 {
public:
    TransferMatrix2() = default;
    TransferMatrix2(cplx m00, cplx m01, cplx m10, cplx m11, bool non_unitary = false)
        : m_{m00, m01, m10, m11}, non_unitary_(non_unitary) {}

    [[nodiscard]] cplx operator()(std::size_t row, std::size_t col) const { return m_[2 * row + col]; }
    cplx& operator()(std::size_t row, std::size_t col) { return m_[2 * row + col]; }
    [[nodiscard]] const std::array<cplx, 4>& entries() const noexcept { return m_; }

    /// Set for defect models, whose unitarity is only first-order accurate.
    [[nodiscard]] bool non_unitary() const noexcept { return non_unitary_; }

    [[nodiscard]] TransferMatrix2 adjoint() const;
    [[nodiscard]] cplx determinant() const { return m_[0] * m_[3] - m_[1] * m_[2]; }
    [[nodiscard]] std::array<cplx, 2> apply(const std::array<cplx, 2>& in) const;
    /// max |(M†M − I)_ij|
    [[nodiscard]] double unitarity_defect() const;
    /// Largest singular value.
    [[nodiscard]] double spectral_norm() const;

    friend TransferMatrix2 operator*(const TransferMatrix2& a, const TransferMatrix2& b);
    friend TransferMatrix2 operator-(const TransferMatrix2& a, const TransferMatrix2& b);
    friend TransferMatrix2 operator*(cplx s, const TransferMatrix2& m);

private:
    std::array<cplx, 4> m_{cplx{1.0}, cplx{}, cplx{}, cplx{1.0}};
    bool non_unitary_ = false;
};

/// Elementwise max-abs difference.
[[nodiscard]] double max_abs_diff(const TransferMatrix2& a, const TransferMatrix2& b);

/// min over global phase φ of ‖a − e^{iφ} b‖₂ (spectral norm), with φ fixed at
/// the Frobenius-optimal value arg tr(b† a).
[[nodiscard]] double phase_aligned_distance(const TransferMatrix2& a, const TransferMatrix2& b);

/// Same alignment, elementwise max-abs difference.
[[nodiscard]] double phase_aligned_max_diff(const TransferMatrix2& a, const TransferMatrix2& b);

[[nodiscard]] CellResponse cell_response(const CouplerSettings& settings);

/// Full device matrix: input/output phase shifters around the reversed-Δβ cell.
///   [[A,                 iB e^{i(θ+φ₂)}],
///    [iB e^{−i(θ−φ₁)},   A e^{i(φ₁+φ₂)}]]
[[nodiscard]] TransferMatrix2 transfer_matrix(const CouplerSettings& settings);

/// Phase-shifter settings (φ₁, φ₂) that turn the device into the SU(2) form
/// for a given Φ: φ₁ = Φ + θ + π/2 = −φ₂.
[[nodiscard]] std::pair<double, double> su2_phases(double theta, double big_phi);

/// [[A, B e^{−iΦ}], [−B e^{iΦ}, A]]; real rotation when Φ = nπ.
[[nodiscard]] TransferMatrix2 su2_matrix(const CouplerSettings& settings, double big_phi);

/// Target of a calibration: cos/sin of Θ/2 with relative phase Φ.
[[nodiscard]] TransferMatrix2 su2_target(double big_theta, double big_phi);

struct DeltaWindow {
    double lo = 0.0;
    double hi = 0.0;
};

struct SolveOptions {
    std::size_t prescan_points = 10000;
    double relative_tolerance = 1e-12;
    /// Upper end of the automatic search interval, in units of kappa.
    double auto_window_kappas = 10.0;
};

/// First monotone run of χ(δ) on [0, auto_window_kappas·κ] (pre-scan) whose
/// range brackets target_chi. Throws TargetUnreachable when none does.
[[nodiscard]] DeltaWindow default_delta_window(const CouplerSettings& base, double target_chi,
                                               const SolveOptions& options = {});

/// Electrode calibration: find δ with χ(δ) = target_theta/2 inside the window,
/// then set φ₁, φ₂ for target_phi. Throws NonMonotoneWindow if the pre-scan sees
/// χ reverse direction, TargetUnreachable if χ never crosses the target.
[[nodiscard]] CouplerSettings solve_settings(double target_theta, double target_phi,
                                             const CouplerSettings& base, DeltaWindow window,
                                             const SolveOptions& options = {});

/// Same, with the window from default_delta_window.
[[nodiscard]] CouplerSettings solve_settings(double target_theta, double target_phi,
                                             const CouplerSettings& base,
                                             const SolveOptions& options = {});

// --- coupled-mode oracle --------------------------------------------------

struct ElectrodeSegment {
    double length = 0.0;  ///< m
    int delta_sign = 1;   ///< +1 or −1: sign of the applied mismatch in this section
};

/// Two guided modes with propagation constants betas (for delta_sign = +1;
/// a −1 section swaps the mismatch about the mean), Hermitian coupling matrix
/// and an electrode layout. Phase shifts are applied to mode 2 before
/// (input_phase) and after (output_phase) the coupled section.
struct CoupledModeSystem {
    std::array<double, 2> betas{0.0, 0.0};
    std::array<cplx, 4> coupling{};  ///< row-major κ_σσ′
    std::vector<ElectrodeSegment> segments;
    double input_phase = 0.0;
    double output_phase = 0.0;
    std::size_t steps_per_segment = 4000;

    void validate() const;
};

/// Layout matching the closed-form device: sections [(L, −δ), (L, +δ)] with
/// φ₂ on the input side and φ₁ on the output side of mode 2. mean_beta is a
/// common propagation constant (global phase only).
[[nodiscard]] CoupledModeSystem coupled_mode_system(const CouplerSettings& settings,
                                                    double mean_beta = 0.0);

/// RK4 integration of da/dz = i K(z) a through all segments. Runs once at the
/// configured step count and once at twice that; throws StepTooCoarse if the
/// results differ by more than 1e-8.
[[nodiscard]] std::array<cplx, 2> ode_oracle(const CoupledModeSystem& system,
                                             const std::array<cplx, 2>& input);

/// Full matrix from two oracle runs on the basis vectors.
[[nodiscard]] TransferMatrix2 ode_transfer_matrix(const CoupledModeSystem& system);

// --- fabrication defects of the MZI scheme ---------------------------------

struct DefectMzi {
    double eps1 = 0.0;
    double eps2 = 0.0;
    double eta = 0.0;  ///< internal phase, rad

    /// The model keeps O(ε) terms only; beyond |ε| = 0.1 it is unreliable.
    [[nodiscard]] bool first_order_valid() const noexcept;
};

/// (1/√2)[[1−ε, i(1+ε)], [i(1+ε), 1−ε]], flagged non-unitary.
[[nodiscard]] TransferMatrix2 defective_3db(double eps);

/// First-order MZI of two defective 3 dB couplers around a phase η (global
/// phase dropped).
[[nodiscard]] TransferMatrix2 defective_mzi(const DefectMzi& defect);

struct MziResidual {
    double offdiag_imag = 0.0;  ///< |ε′ − ε|·|cos η|
    double diag_imag = 0.0;     ///< (ε + ε′)·|sin η|
};

[[nodiscard]] MziResidual mzi_residual(const DefectMzi& defect);

/// Smallest phase-aligned distance from the defective MZI, followed by an
/// ideal output phase shifter diag(1, e^{iφ}), to the real rotation it is
/// meant to implement; minimized over φ by golden-section refinement of a
/// dense scan.
[[nodiscard]] double mzi_best_output_compensation(const DefectMzi& defect);

// --- sweeps ------------------------------------------------------------------

struct SweepRow {
    double delta_over_k0 = 0.0;
    double a_coef = 0.0;
    double b_coef = 0.0;
    double theta = 0.0;
};

/// A, B, θ on a uniform δ/k₀ grid.
[[nodiscard]] std::vector<SweepRow> sweep_response(const CouplerSettings& base,
                                                   double delta_over_k0_min,
                                                   double delta_over_k0_max,
                                                   std::size_t points);

}  // namespace kslight
