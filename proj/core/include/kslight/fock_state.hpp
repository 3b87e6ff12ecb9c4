#pragma once

// Truncated multimode Fock-space states. Two modes is the common case (the
// signal pair), three for the weak-measurement meter or a Reck-style stage
// chain.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kslight/constants.hpp"

namespace kslight {

class FockState {
public:
    /// Vacuum on `modes` modes with photon numbers 0..cutoff per mode.
    FockState(int modes, int cutoff);
    /// Amplitudes in row-major order (mode 0 most significant). Not normalized.
    FockState(int modes, int cutoff, std::vector<cplx> amplitudes);

    [[nodiscard]] int modes() const noexcept { return modes_; }
    [[nodiscard]] int cutoff() const noexcept { return cutoff_; }
    [[nodiscard]] std::size_t levels() const noexcept { return static_cast<std::size_t>(cutoff_) + 1; }
    [[nodiscard]] std::size_t size() const noexcept { return amps_.size(); }
    [[nodiscard]] std::size_t stride(int mode) const noexcept { return strides_[static_cast<std::size_t>(mode)]; }

    [[nodiscard]] std::span<const cplx> amplitudes() const noexcept { return amps_; }
    [[nodiscard]] std::span<cplx> amplitudes() noexcept { return amps_; }

    [[nodiscard]] std::size_t index(std::span<const int> occupation) const;
    [[nodiscard]] cplx& at(std::initializer_list<int> occupation);
    [[nodiscard]] cplx at(std::initializer_list<int> occupation) const;
    /// Occupation of `mode` for a flat index.
    [[nodiscard]] int occupation(std::size_t flat, int mode) const noexcept {
        return static_cast<int>((flat / strides_[static_cast<std::size_t>(mode)]) % levels());
    }

    [[nodiscard]] double norm_squared() const;
    /// Rescales to unit norm; throws NormalizationError on a zero state.
    void normalize();

    /// Norm discarded by truncation in the operations that produced this state.
    [[nodiscard]] double truncation_loss() const noexcept { return truncation_loss_; }
    void add_truncation_loss(double loss) noexcept { truncation_loss_ += loss; }

    /// Same state on a different cutoff. Shrinking throws TruncationOverflow if
    /// more than `tolerance` of the norm would be dropped.
    [[nodiscard]] FockState with_cutoff(int cutoff, double tolerance = 1e-6) const;
    /// State ⊗ |0⟩ on a new last mode.
    [[nodiscard]] FockState with_vacuum_mode() const;

    /// Largest photon number with |c|² above `threshold` in any mode.
    [[nodiscard]] int max_occupation(double threshold = 0.0) const;

private:
    int modes_;
    int cutoff_;
    std::vector<std::size_t> strides_;
    std::vector<cplx> amps_;
    double truncation_loss_ = 0.0;
};

/// Largest tolerated truncation loss for one operation.
inline constexpr double kTruncationTolerance = 1e-6;

/// Single-mode coherent amplitudes c_n = e^{−|α|²/2} αⁿ/√(n!), n ≤ cutoff.
/// Throws TruncationOverflow if the Poisson tail beyond cutoff exceeds 1e-9.
[[nodiscard]] std::vector<cplx> coherent_state(cplx alpha, int cutoff);

/// Smallest cutoff whose coherent tail is below 1e-9 (at least |α|² + 8|α|).
[[nodiscard]] int coherent_cutoff(cplx alpha);

/// Tensor product of single-mode amplitude vectors, all of length cutoff + 1.
[[nodiscard]] FockState product_state(std::span<const std::vector<cplx>> factors);

/// |α₁⟩⊗|α₂⟩⊗… at a common cutoff.
[[nodiscard]] FockState coherent_product(std::span<const cplx> alphas, int cutoff);

/// (|N,0⟩ + i|0,N⟩)/√2.
[[nodiscard]] FockState noon_state(int n, int cutoff);
/// (|2,0⟩ + i|0,2⟩)/√2 with cutoff ≥ 2.
[[nodiscard]] FockState noon2(int cutoff = 2);

/// Mode rotation generated by G = a†_a a_b − a†_b a_a, U = exp(sign·χ·G).
/// Output quadratures: 𝓔_a' = cos χ 𝓔_a + sign·sin χ 𝓔_b,
///                     𝓔_b' = −sign·sin χ 𝓔_a + cos χ 𝓔_b.
/// Number-conserving; any component pushed above the cutoff is dropped and
/// counted as truncation loss (TruncationOverflow beyond 1e-6).
[[nodiscard]] FockState apply_rotation(const FockState& state, double chi, int sign = 1, int mode_a = 0,
                                       int mode_b = 1);

/// Local-oscillator phase e^{−iψ n̂} on one mode.
[[nodiscard]] FockState apply_lo_phase(const FockState& state, double psi, int mode);

/// Reduced density matrix of one mode.
[[nodiscard]] Eigen::MatrixXcd reduced_density(const FockState& state, int mode);

[[nodiscard]] double mean_photon_number(const FockState& state, int mode);

/// |⟨a|b⟩|² (states must share shape).
[[nodiscard]] double fidelity(const FockState& a, const FockState& b);

/// ⟨a|b⟩.
[[nodiscard]] cplx inner_product(const FockState& a, const FockState& b);

}  // namespace kslight
