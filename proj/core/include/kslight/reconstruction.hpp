#pragma once

// Joint (𝓔₁, 𝓔₂) distributions built from homodyne records.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kslight/homodyne.hpp"

namespace kslight {

enum class ReconstructionMethod { Scatter, BackProjection };

[[nodiscard]] std::string_view to_string(ReconstructionMethod m) noexcept;
[[nodiscard]] ReconstructionMethod parse_method(std::string_view text);

/// Square histogram over [lo, hi]² with bins × bins cells; index i runs along
/// 𝓔₁ and j along 𝓔₂ (row-major, density[i * bins + j]).
struct Histogram2D {
    double lo = -1.0;
    double hi = 1.0;
    std::size_t bins = 1;
    ReconstructionMethod method = ReconstructionMethod::Scatter;
    std::vector<std::uint64_t> counts;  ///< scatter placement counts of the records
    std::uint64_t dropped = 0;          ///< records whose scatter point fell outside the range
    std::vector<double> density;        ///< method-specific estimate, Σ density · width² = 1

    [[nodiscard]] double width() const noexcept { return (hi - lo) / static_cast<double>(bins); }
    [[nodiscard]] double center(std::size_t i) const noexcept { return lo + (static_cast<double>(i) + 0.5) * width(); }
    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return density[i * bins + j]; }
    [[nodiscard]] double integral() const;
};

struct ReconstructOptions {
    ReconstructionMethod method = ReconstructionMethod::BackProjection;
    std::size_t bins = 81;
    std::optional<double> half_width;  ///< default: largest |value| in the records
    /// Scatter only: place the signed value along χ (true) or its magnitude (false).
    bool signed_values = true;
    int sign = 1;  ///< rotation sign used in the campaign
    std::size_t min_angles = 8;
};

/// Scatter: each record is a point (v cos χ, v sin χ) (sign −1 mirrors the
/// angle). Back-projection: the records at each distinct χ form a Radon
/// projection; angles are folded into [0, π), filtered with the Ram-Lak ramp
/// and back-projected with gap-based angular weights. Throws
/// InsufficientAngles below min_angles distinct folded angles.
[[nodiscard]] Histogram2D reconstruct_joint(std::span<const HomodyneRecord> records,
                                            const ReconstructOptions& options = {});

}  // namespace kslight
