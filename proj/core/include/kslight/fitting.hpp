#pragma once

// Least-squares moment fits of reconstructed joint distributions.

#include <cstddef>
#include <string_view>

#include "kslight/reconstruction.hpp"

namespace kslight {

/// Ring: phase-averaged coherent state, a Gaussian of widths (w₁, w₂) swept
/// around the ellipse (R₁ cos t, R₂ sin t). Gaussian: a single displaced
/// Gaussian. The caller picks the model; nothing is auto-detected.
enum class FitModel { Ring, Gaussian };
enum class FitSolver { LevenbergMarquardt, NelderMead };

[[nodiscard]] std::string_view to_string(FitModel m) noexcept;
[[nodiscard]] FitModel parse_model(std::string_view text);
[[nodiscard]] std::string_view to_string(FitSolver s) noexcept;

struct FitOptions {
    FitModel model = FitModel::Ring;
    FitSolver solver = FitSolver::LevenbergMarquardt;
    /// Relative rms residual √(Σr²/Σd²) above which the fit counts as diverged.
    double max_residual = 0.95;
    std::size_t ring_points = 128;
    std::size_t max_iterations = 500;
};

struct FitResult {
    FitModel model = FitModel::Ring;
    FitSolver solver = FitSolver::LevenbergMarquardt;
    double mean1 = 0.0;  ///< ring: R₁ (≥ 0); Gaussian: center
    double mean2 = 0.0;
    double width1 = 0.0;
    double width2 = 0.0;
    double amplitude = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
};

/// Throws FitDiverged when the solver does not converge to a finite result
/// with residual ≤ max_residual.
[[nodiscard]] FitResult fit_moments(const Histogram2D& hist, const FitOptions& options = {});

}  // namespace kslight
