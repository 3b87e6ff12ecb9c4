#include "kslight/fock_state.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "kslight/errors.hpp"

namespace kslight {

namespace {

std::vector<std::size_t> make_strides(int modes, std::size_t levels) {
    std::vector<std::size_t> s(static_cast<std::size_t>(modes), 1);
    for (int m = modes - 2; m >= 0; --m) {
        s[static_cast<std::size_t>(m)] = s[static_cast<std::size_t>(m) + 1] * levels;
    }
    return s;
}

std::size_t total_size(int modes, std::size_t levels) {
    std::size_t n = 1;
    for (int m = 0; m < modes; ++m) n *= levels;
    return n;
}

void check_shape(int modes, int cutoff) {
    if (modes < 1 || modes > 8) throw InvalidConfig("mode count must be in 1..8");
    if (cutoff < 0) throw InvalidConfig("cutoff must be non-negative");
    if (total_size(modes, static_cast<std::size_t>(cutoff) + 1) > (std::size_t{1} << 27)) {
        throw InvalidConfig("state too large for cutoff " + std::to_string(cutoff));
    }
}

// Eigensystem of the number-N block of G. With D = diag(i^k) the block is
// G = −i D S D† where S is real symmetric tridiagonal with off-diagonal
// sqrt((k+1)(N−k)) and integer spectrum {−N, −N+2, …, N}.
struct RotationBlock {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd vectors;
};

std::shared_ptr<const RotationBlock> rotation_block(int n) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const RotationBlock>> cache;
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(n); it != cache.end()) return it->second;
    }
    auto block = std::make_shared<RotationBlock>();
    const Eigen::Index dim = n + 1;
    if (n == 0) {
        block->eigenvalues = Eigen::VectorXd::Zero(1);
        block->vectors = Eigen::MatrixXd::Identity(1, 1);
    } else {
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim);
        Eigen::VectorXd sub(dim - 1);
        for (Eigen::Index k = 0; k < dim - 1; ++k) {
            sub(k) = std::sqrt(static_cast<double>((k + 1) * (n - k)));
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
        solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        block->eigenvalues = solver.eigenvalues();
        for (Eigen::Index k = 0; k < dim; ++k) {
            // Exact spectrum is integers of the parity of N.
            block->eigenvalues(k) = std::round(block->eigenvalues(k));
        }
        block->vectors = solver.eigenvectors();
    }
    std::lock_guard lock(mutex);
    auto [it, inserted] = cache.emplace(n, std::move(block));
    return it->second;
}

cplx i_power(int k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

}  // namespace

FockState::FockState(int modes, int cutoff) : modes_(modes), cutoff_(cutoff) {
    check_shape(modes, cutoff);
    strides_ = make_strides(modes, levels());
    amps_.assign(total_size(modes, levels()), cplx{});
    amps_[0] = 1.0;
}

FockState::FockState(int modes, int cutoff, std::vector<cplx> amplitudes)
    : modes_(modes), cutoff_(cutoff), amps_(std::move(amplitudes)) {
    check_shape(modes, cutoff);
    strides_ = make_strides(modes, levels());
    if (amps_.size() != total_size(modes, levels())) {
        throw InvalidConfig("amplitude count " + std::to_string(amps_.size()) +
                            " does not match modes/cutoff");
    }
    for (const auto& c : amps_) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
            throw NormalizationError("non-finite amplitude");
        }
    }
}

std::size_t FockState::index(std::span<const int> occupation) const {
    if (occupation.size() != static_cast<std::size_t>(modes_)) {
        throw InvalidConfig("occupation tuple has wrong length");
    }
    std::size_t flat = 0;
    for (std::size_t m = 0; m < occupation.size(); ++m) {
        const int n = occupation[m];
        if (n < 0 || n > cutoff_) throw TruncationOverflow("occupation " + std::to_string(n) + " above cutoff");
        flat += static_cast<std::size_t>(n) * strides_[m];
    }
    return flat;
}

cplx& FockState::at(std::initializer_list<int> occupation) {
    return amps_[index(std::span<const int>(occupation.begin(), occupation.size()))];
}

cplx FockState::at(std::initializer_list<int> occupation) const {
    return amps_[index(std::span<const int>(occupation.begin(), occupation.size()))];
}

double FockState::norm_squared() const {
    double s = 0.0;
    for (const auto& c : amps_) s += std::norm(c);
    return s;
}

void FockState::normalize() {
    const double n2 = norm_squared();
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw NormalizationError("cannot normalize a zero state");
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& c : amps_) c *= scale;
}

FockState FockState::with_cutoff(int cutoff, double tolerance) const {
    FockState out(modes_, cutoff);
    out.amps_[0] = 0.0;
    out.truncation_loss_ = truncation_loss_;
    double dropped = 0.0;
    std::vector<int> occ(static_cast<std::size_t>(modes_));
    for (std::size_t flat = 0; flat < amps_.size(); ++flat) {
        bool inside = true;
        for (int m = 0; m < modes_; ++m) {
            occ[static_cast<std::size_t>(m)] = occupation(flat, m);
            if (occ[static_cast<std::size_t>(m)] > cutoff) inside = false;
        }
        if (inside) {
            out.amps_[out.index(occ)] = amps_[flat];
        } else {
            dropped += std::norm(amps_[flat]);
        }
    }
    if (dropped > tolerance) {
        throw TruncationOverflow("reducing cutoff drops norm " + std::to_string(dropped));
    }
    out.truncation_loss_ += dropped;
    return out;
}

FockState FockState::with_vacuum_mode() const {
    FockState out(modes_ + 1, cutoff_);
    out.amps_[0] = 0.0;
    out.truncation_loss_ = truncation_loss_;
    const std::size_t lv = levels();
    for (std::size_t flat = 0; flat < amps_.size(); ++flat) out.amps_[flat * lv] = amps_[flat];
    return out;
}

int FockState::max_occupation(double threshold) const {
    int best = 0;
    for (std::size_t flat = 0; flat < amps_.size(); ++flat) {
        if (std::norm(amps_[flat]) <= threshold) continue;
        for (int m = 0; m < modes_; ++m) best = std::max(best, occupation(flat, m));
    }
    return best;
}

std::vector<cplx> coherent_state(cplx alpha, int cutoff) {
    if (cutoff < 0) throw InvalidConfig("cutoff must be non-negative");
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
        throw InvalidConfig("coherent amplitude must be finite");
    }
    std::vector<cplx> c(static_cast<std::size_t>(cutoff) + 1);
    c[0] = std::exp(-0.5 * std::norm(alpha));
    double kept = std::norm(c[0]);
    for (int n = 1; n <= cutoff; ++n) {
        c[static_cast<std::size_t>(n)] = c[static_cast<std::size_t>(n) - 1] * alpha / std::sqrt(static_cast<double>(n));
        kept += std::norm(c[static_cast<std::size_t>(n)]);
    }
    const double tail = std::max(0.0, 1.0 - kept);
    if (tail > 1e-9) {
        throw TruncationOverflow("coherent tail " + std::to_string(tail) + " beyond cutoff " +
                                 std::to_string(cutoff));
    }
    return c;
}

int coherent_cutoff(cplx alpha) {
    const double a = std::abs(alpha);
    int cutoff = static_cast<int>(std::ceil(a * a + 8.0 * a)) + 4;
    for (;; ++cutoff) {
        double term = std::exp(-a * a);
        double kept = term;
        for (int n = 1; n <= cutoff; ++n) {
            term *= a * a / n;
            kept += term;
        }
        if (1.0 - kept <= 1e-10) return cutoff;
    }
}

FockState product_state(std::span<const std::vector<cplx>> factors) {
    if (factors.empty()) throw InvalidConfig("product state needs at least one factor");
    const std::size_t lv = factors.front().size();
    if (lv == 0) throw InvalidConfig("empty factor");
    for (const auto& f : factors) {
        if (f.size() != lv) throw InvalidConfig("factors must share a cutoff");
    }
    const int modes = static_cast<int>(factors.size());
    FockState out(modes, static_cast<int>(lv) - 1);
    auto amps = out.amplitudes();
    for (std::size_t flat = 0; flat < amps.size(); ++flat) {
        cplx v = 1.0;
        for (int m = 0; m < modes; ++m) v *= factors[static_cast<std::size_t>(m)][static_cast<std::size_t>(out.occupation(flat, m))];
        amps[flat] = v;
    }
    return out;
}

FockState coherent_product(std::span<const cplx> alphas, int cutoff) {
    std::vector<std::vector<cplx>> factors;
    factors.reserve(alphas.size());
    for (const auto& a : alphas) factors.push_back(coherent_state(a, cutoff));
    return product_state(factors);
}

FockState noon_state(int n, int cutoff) {
    if (n < 0) throw InvalidConfig("photon number must be non-negative");
    if (cutoff < n) throw TruncationOverflow("cutoff below NOON photon number");
    FockState out(2, cutoff);
    out.amplitudes()[0] = 0.0;
    const double r = 1.0 / std::sqrt(2.0);
    out.at({n, 0}) += r;
    out.at({0, n}) += cplx{0.0, r};
    out.normalize();
    return out;
}

FockState noon2(int cutoff) { return noon_state(2, cutoff); }

FockState apply_rotation(const FockState& state, double chi, int sign, int mode_a, int mode_b) {
    if (sign != 1 && sign != -1) throw InvalidConfig("rotation sign must be +1 or -1");
    if (mode_a == mode_b || mode_a < 0 || mode_b < 0 || mode_a >= state.modes() || mode_b >= state.modes()) {
        throw InvalidConfig("rotation needs two distinct modes");
    }
    if (!std::isfinite(chi)) throw InvalidConfig("rotation angle must be finite");

    const int c = state.cutoff();
    const std::size_t sa = state.stride(mode_a);
    const std::size_t sb = state.stride(mode_b);
    const double angle = sign * chi;

    std::vector<cplx> out(state.size(), cplx{});
    auto in = state.amplitudes();
    double dropped = 0.0;

    // Base offsets: every flat index with zero occupation in both modes.
    std::vector<std::size_t> bases;
    for (std::size_t flat = 0; flat < state.size(); ++flat) {
        if (state.occupation(flat, mode_a) == 0 && state.occupation(flat, mode_b) == 0) bases.push_back(flat);
    }

    Eigen::VectorXcd w;
    Eigen::VectorXcd tmp;
    for (int n = 0; n <= 2 * c; ++n) {
        const int kmin = std::max(0, n - c);
        const int kmax = std::min(c, n);
        const auto block = rotation_block(n);
        const Eigen::Index dim = n + 1;
        // exp(θG) = D V diag(e^{−iθλ}) Vᵀ D†
        Eigen::VectorXcd phases(dim);
        for (Eigen::Index j = 0; j < dim; ++j) phases(j) = std::polar(1.0, -angle * block->eigenvalues(j));

        for (const std::size_t base : bases) {
            w = Eigen::VectorXcd::Zero(dim);
            bool any = false;
            for (int k = kmin; k <= kmax; ++k) {
                const cplx v = in[base + static_cast<std::size_t>(k) * sa + static_cast<std::size_t>(n - k) * sb];
                if (v != cplx{}) {
                    w(k) = std::conj(i_power(k)) * v;
                    any = true;
                }
            }
            if (!any) continue;
            tmp = block->vectors.transpose() * w;
            tmp = tmp.cwiseProduct(phases);
            w = block->vectors * tmp;
            for (int k = 0; k <= n; ++k) {
                const cplx v = i_power(k) * w(k);
                if (k >= kmin && k <= kmax) {
                    out[base + static_cast<std::size_t>(k) * sa + static_cast<std::size_t>(n - k) * sb] = v;
                } else {
                    dropped += std::norm(v);
                }
            }
        }
    }

    if (dropped > kTruncationTolerance) {
        throw TruncationOverflow("rotation pushed norm " + std::to_string(dropped) + " above cutoff " +
                                 std::to_string(c));
    }
    FockState result(state.modes(), c, std::move(out));
    result.add_truncation_loss(state.truncation_loss() + dropped);
    if (dropped > 0.0) result.normalize();
    return result;
}

FockState apply_lo_phase(const FockState& state, double psi, int mode) {
    if (mode < 0 || mode >= state.modes()) throw InvalidConfig("mode index out of range");
    FockState out = state;
    auto amps = out.amplitudes();
    std::vector<cplx> ph(state.levels());
    for (std::size_t n = 0; n < ph.size(); ++n) ph[n] = std::polar(1.0, -psi * static_cast<double>(n));
    for (std::size_t flat = 0; flat < amps.size(); ++flat) amps[flat] *= ph[static_cast<std::size_t>(state.occupation(flat, mode))];
    return out;
}

Eigen::MatrixXcd reduced_density(const FockState& state, int mode) {
    if (mode < 0 || mode >= state.modes()) throw InvalidConfig("mode index out of range");
    const auto lv = static_cast<Eigen::Index>(state.levels());
    const std::size_t rest = state.size() / state.levels();
    // Arrange amplitudes as an (levels × rest) matrix, then ρ = C C†.
    Eigen::MatrixXcd cmat(lv, static_cast<Eigen::Index>(rest));
    std::vector<Eigen::Index> column(static_cast<std::size_t>(lv), 0);
    auto amps = state.amplitudes();
    for (std::size_t flat = 0; flat < amps.size(); ++flat) {
        const int n = state.occupation(flat, mode);
        cmat(n, column[static_cast<std::size_t>(n)]++) = amps[flat];
    }
    return cmat * cmat.adjoint();
}

double mean_photon_number(const FockState& state, int mode) {
    if (mode < 0 || mode >= state.modes()) throw InvalidConfig("mode index out of range");
    double s = 0.0;
    auto amps = state.amplitudes();
    for (std::size_t flat = 0; flat < amps.size(); ++flat) s += state.occupation(flat, mode) * std::norm(amps[flat]);
    return s;
}

cplx inner_product(const FockState& a, const FockState& b) {
    if (a.modes() != b.modes() || a.cutoff() != b.cutoff()) throw InvalidConfig("state shapes differ");
    cplx s{};
    auto x = a.amplitudes();
    auto y = b.amplitudes();
    for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
    return s;
}

double fidelity(const FockState& a, const FockState& b) { return std::norm(inner_product(a, b)); }

}  // namespace kslight
