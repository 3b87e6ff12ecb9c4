#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kslight {

/// n-th field-strength eigenfunction ⟨x|n⟩ for 𝓔 = (a + a†)/2, i.e. the
/// normalized Hermite-Gaussian with ψ₀(x) = (2/π)^{1/4} e^{−x²} (vacuum
/// variance 1/4). Evaluated by the upward recurrence on normalized functions,
/// which stays stable well past n = 60.
[[nodiscard]] double hermite_psi(int n, double x);

/// ψ₀..ψ_{max_n} at every point of xs, row-major: table[n * xs.size() + i].
[[nodiscard]] std::vector<double> hermite_table(int max_n, std::span<const double> xs);

}  // namespace kslight
