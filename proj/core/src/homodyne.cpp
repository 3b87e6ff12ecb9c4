#include "kslight/homodyne.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "kslight/errors.hpp"
#include "kslight/hermite.hpp"
#include "kslight/sampling.hpp"
#include "parallel.hpp"

namespace kslight {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

double trapezoid(const std::vector<double>& f, double h) {
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

void normalize_density(std::vector<double>& f, double h) {
    for (auto& v : f) v = std::max(v, 0.0);
    const double mass = trapezoid(f, h);
    if (!(mass > 0.0)) throw GridTooNarrow("density vanishes on the sampling grid");
    for (auto& v : f) v /= mass;
}

Eigen::MatrixXcd lo_phased(const Eigen::MatrixXcd& rho, double psi) {
    Eigen::MatrixXcd out = rho;
    for (Eigen::Index m = 0; m < rho.rows(); ++m) {
        for (Eigen::Index n = 0; n < rho.cols(); ++n) out(m, n) *= std::polar(1.0, -psi * static_cast<double>(m - n));
    }
    return out;
}

Eigen::MatrixXcd upper_output_density(const FockState& state, double chi, int sign) {
    if (state.modes() < 2) throw InvalidConfig("homodyne pipeline needs at least two modes");
    return reduced_density(apply_rotation(state, chi, sign, 0, 1), 0);
}

}  // namespace

std::string_view to_string(SamplingStrategy s) noexcept {
    switch (s) {
        case SamplingStrategy::Standard: return "standard";
        case SamplingStrategy::PhaseRandom: return "phase-random";
        case SamplingStrategy::FullRandom: return "full-random";
    }
    return "unknown";
}

SamplingStrategy parse_strategy(std::string_view text) {
    if (text == "standard") return SamplingStrategy::Standard;
    if (text == "phase-random") return SamplingStrategy::PhaseRandom;
    if (text == "full-random") return SamplingStrategy::FullRandom;
    throw InvalidConfig("unknown sampling strategy '" + std::string(text) + "'");
}

std::vector<double> uniform_angles(std::size_t count, double period) {
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = period * static_cast<double>(k) / static_cast<double>(count);
    return out;
}

void HomodyneConfig::validate() const {
    if (n_samples == 0) throw InvalidConfig("n_samples must be positive");
    if (chi_list.empty()) throw InvalidConfig("chi_list must not be empty");
    if (strategy == SamplingStrategy::Standard && psi_list.empty()) {
        throw InvalidConfig("standard strategy needs a psi_list");
    }
    for (double c : chi_list) {
        if (!std::isfinite(c)) throw InvalidConfig("chi_list entries must be finite");
    }
    for (double p : psi_list) {
        if (!std::isfinite(p)) throw InvalidConfig("psi_list entries must be finite");
    }
    if (sign != 1 && sign != -1) throw InvalidConfig("sign must be +1 or -1");
    if (!(lo_amplitude > 0.0) || !std::isfinite(lo_amplitude)) throw InvalidConfig("lo_amplitude must be positive");
    if (grid) grid->validate();
    if (grid_points < 16) throw InvalidConfig("grid_points must be at least 16");
    if (chunk_size == 0) throw InvalidConfig("chunk_size must be positive");
    if (workers == 0) throw InvalidConfig("workers must be positive");
}

BhdMoments bhd_moments(const FockState& state, double chi, double psi, double lo_amplitude, int sign) {
    const Eigen::MatrixXcd rho = lo_phased(upper_output_density(state, chi, sign), psi);
    cplx a{};
    cplx a2{};
    double n = 0.0;
    for (Eigen::Index m = 0; m < rho.rows(); ++m) {
        const auto md = static_cast<double>(m);
        n += md * rho(m, m).real();
        if (m >= 1) a += std::sqrt(md) * rho(m, m - 1);
        if (m >= 2) a2 += std::sqrt(md * (md - 1.0)) * rho(m, m - 2);
    }
    const double mean_e = a.real();
    const double mean_e2 = (2.0 * a2.real() + 2.0 * n + 1.0) / 4.0;
    const double alpha = std::abs(lo_amplitude);
    return {2.0 * alpha * mean_e, 4.0 * alpha * alpha * (mean_e2 - mean_e * mean_e)};
}

Grid1D default_sampling_grid(const FockState& state, std::size_t points) {
    const int nmax = state.max_occupation(1e-30);
    return Grid1D::symmetric(support_half_width(nmax), points);
}

RotatedMarginal::RotatedMarginal(const FockState& state, double chi, int sign, const Grid1D& grid)
    : grid_(grid), chi_(chi) {
    grid_.validate();
    const Eigen::MatrixXcd rho = upper_output_density(state, chi, sign);
    const int nmax = static_cast<int>(rho.rows()) - 1;
    const auto xs = grid_.values();
    const auto g = static_cast<Eigen::Index>(xs.size());
    const auto table = hermite_table(nmax, xs);
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> psi(table.data(), nmax + 1, g);

    f0_ = Eigen::VectorXd::Zero(g);
    for (int n = 0; n <= nmax; ++n) {
        const double p = rho(n, n).real();
        if (p != 0.0) f0_ += p * psi.row(n).transpose().cwiseAbs2();
    }
    std::vector<double> f0v(f0_.data(), f0_.data() + g);
    const double mass = trapezoid(f0v, grid_.step());
    if (!(mass >= rho.trace().real() - 1e-6)) {
        throw GridTooNarrow("sampling grid holds only " + std::to_string(mass) + " of the probability");
    }
    const double peak = f0_.maxCoeff();

    std::vector<Eigen::VectorXcd> fk(static_cast<std::size_t>(nmax));
    int last = 0;
    for (int k = 1; k <= nmax; ++k) {
        Eigen::VectorXcd f = Eigen::VectorXcd::Zero(g);
        for (int n = 0; n + k <= nmax; ++n) {
            const cplx r = rho(n + k, n);
            if (std::abs(r) < 1e-300) continue;
            f += r * psi.row(n + k).transpose().cwiseProduct(psi.row(n).transpose()).cast<cplx>();
        }
        if (f.cwiseAbs().maxCoeff() > 1e-13 * peak) last = k;
        fk[static_cast<std::size_t>(k - 1)] = std::move(f);
    }
    basis_.resize(g, 2 * last);
    for (int k = 1; k <= last; ++k) {
        basis_.col(2 * k - 2) = 2.0 * fk[static_cast<std::size_t>(k - 1)].real();
        basis_.col(2 * k - 1) = 2.0 * fk[static_cast<std::size_t>(k - 1)].imag();
    }

    nodes_.resize(g, 1 + basis_.cols());
    nodes_.col(0) = f0_;
    nodes_.rightCols(basis_.cols()) = basis_;
    cumulative_.resize(g, nodes_.cols());
    cumulative_.row(0).setZero();
    const double h = grid_.step();
    for (Eigen::Index i = 1; i < g; ++i) {
        cumulative_.row(i) = cumulative_.row(i - 1) + 0.5 * h * (nodes_.row(i - 1) + nodes_.row(i));
    }
}

Eigen::VectorXd RotatedMarginal::coefficients(double psi) const {
    const Eigen::Index k = basis_.cols() / 2;
    Eigen::VectorXd coef(1 + 2 * k);
    coef(0) = 1.0;
    for (Eigen::Index q = 1; q <= k; ++q) {
        coef(2 * q - 1) = std::cos(psi * static_cast<double>(q));
        coef(2 * q) = std::sin(psi * static_cast<double>(q));
    }
    return coef;
}

double RotatedMarginal::sample(double psi, double u) const {
    const Eigen::VectorXd c = coefficients(psi);
    const Eigen::Index last = nodes_.rows() - 1;
    const double total = cumulative_.row(last).dot(c);
    if (!(total > 0.0)) throw GridTooNarrow("density vanishes on the sampling grid");
    const double target = std::clamp(u, 0.0, 1.0) * total;
    // Largest node with CDF ≤ target.
    Eigen::Index lo = 0;
    Eigen::Index hi = last;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (cumulative_.row(mid).dot(c) <= target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double h = grid_.step();
    const double f0 = std::max(0.0, nodes_.row(lo).dot(c));
    const double f1 = std::max(0.0, nodes_.row(lo + 1).dot(c));
    const double need = std::max(0.0, target - cumulative_.row(lo).dot(c)) / h;
    double t = 0.0;
    const double slope = f1 - f0;
    if (std::abs(slope) < 1e-12 * std::max(f0, f1)) {
        t = f0 > 0.0 ? need / f0 : 0.0;
    } else {
        const double disc = std::max(0.0, f0 * f0 + 2.0 * slope * need);
        t = 2.0 * need / (f0 + std::sqrt(disc));
    }
    return grid_.at(static_cast<std::size_t>(lo)) + std::clamp(t, 0.0, 1.0) * h;
}

Eigen::VectorXd RotatedMarginal::raw_density(double psi) const { return nodes_ * coefficients(psi); }

std::vector<double> RotatedMarginal::density(double psi) const {
    const Eigen::VectorXd raw = raw_density(psi);
    std::vector<double> out(raw.data(), raw.data() + raw.size());
    normalize_density(out, grid_.step());
    return out;
}

std::vector<double> RotatedMarginal::phase_average() const {
    std::vector<double> out(f0_.data(), f0_.data() + f0_.size());
    normalize_density(out, grid_.step());
    return out;
}

Density1D measured_density(const FockState& state, double chi, double psi, const Grid1D& grid, int sign) {
    return density_from_matrix(lo_phased(upper_output_density(state, chi, sign), psi), Axis::FieldStrength, grid);
}

std::vector<HomodyneRecord> run_campaign(const FockState& state, const HomodyneConfig& config) {
    config.validate();
    const Grid1D grid = config.grid ? *config.grid : default_sampling_grid(state, config.grid_points);
    const std::size_t nchi = config.chi_list.size();

    std::vector<std::unique_ptr<RotatedMarginal>> marginals(nchi);
    detail::parallel_for(nchi, config.workers, [&](std::size_t c) {
        marginals[c] = std::make_unique<RotatedMarginal>(state, config.chi_list[c], config.sign, grid);
    });

    // The standard strategy only visits the (χ, ψ) grid: cache its samplers.
    std::vector<std::unique_ptr<InverseCdfSampler>> fixed;
    const std::size_t npsi = config.psi_list.size();
    if (config.strategy == SamplingStrategy::Standard) {
        if (nchi * npsi > 65536) throw InvalidConfig("standard strategy grid exceeds 65536 (chi, psi) pairs");
        fixed.resize(nchi * npsi);
        detail::parallel_for(nchi * npsi, config.workers, [&](std::size_t t) {
            const auto d = marginals[t % nchi]->density(config.psi_list[t / nchi]);
            fixed[t] = std::make_unique<InverseCdfSampler>(grid, d);
        });
    }

    std::vector<HomodyneRecord> records(config.n_samples);
    const std::size_t chunks = (config.n_samples + config.chunk_size - 1) / config.chunk_size;
    detail::parallel_for(chunks, config.workers, [&](std::size_t chunk) {
        RandomStream rng(config.seed, chunk);
        const std::size_t begin = chunk * config.chunk_size;
        const std::size_t end = std::min(config.n_samples, begin + config.chunk_size);
        for (std::size_t s = begin; s < end; ++s) {
            HomodyneRecord& r = records[s];
            switch (config.strategy) {
                case SamplingStrategy::Standard: {
                    const std::size_t c = s % nchi;
                    const std::size_t p = (s / nchi) % npsi;
                    r.chi = config.chi_list[c];
                    r.psi = config.psi_list[p];
                    r.value = fixed[p * nchi + c]->sample(rng.uniform());
                    break;
                }
                case SamplingStrategy::PhaseRandom:
                case SamplingStrategy::FullRandom: {
                    const std::size_t c = config.strategy == SamplingStrategy::PhaseRandom ? s % nchi : rng.index(nchi);
                    r.chi = config.chi_list[c];
                    r.psi = kTwoPi * rng.uniform();
                    r.value = marginals[c]->sample(r.psi, rng.uniform());
                    break;
                }
            }
        }
    });
    return records;
}

Density1D phase_averaged_density(const FockState& state, double chi, std::span<const double> psi_grid,
                                 const Grid1D& grid, int sign) {
    if (psi_grid.empty()) throw InvalidConfig("psi grid must not be empty");
    const double step = kTwoPi / static_cast<double>(psi_grid.size());
    for (std::size_t i = 0; i < psi_grid.size(); ++i) {
        if (std::abs(psi_grid[i] - psi_grid[0] - step * static_cast<double>(i)) > 1e-9) {
            throw InvalidConfig("psi grid must cover [psi0, psi0 + 2pi) uniformly");
        }
    }
    const RotatedMarginal marginal(state, chi, sign, grid);
    // Periodic trapezoid rule: equal weights, the closing node ψ₀ + 2π repeats ψ₀.
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.points));
    for (double psi : psi_grid) acc += marginal.raw_density(psi);
    acc /= static_cast<double>(psi_grid.size());
    Density1D out{Axis::FieldStrength, grid, std::vector<double>(acc.data(), acc.data() + acc.size())};
    normalize_density(out.values, grid.step());
    return out;
}

std::vector<Density1D> chain_stages(const FockState& state, std::span<const StageSetting> stages, const Grid1D& grid) {
    const int n = state.modes();
    if (n < 2) throw InvalidConfig("stage chain needs at least two modes");
    if (stages.size() != static_cast<std::size_t>(n - 1)) {
        throw InvalidConfig("stage chain on " + std::to_string(n) + " modes needs " + std::to_string(n - 1) +
                            " stage settings");
    }
    std::vector<Density1D> out;
    out.reserve(stages.size());
    FockState current = state;
    int carry = 0;
    for (std::size_t k = 0; k < stages.size(); ++k) {
        const int lower = static_cast<int>(k) + 1;
        const auto& st = stages[k];
        current = apply_rotation(current, st.chi, st.sign, carry, lower);
        const FockState phased = apply_lo_phase(current, st.psi, carry);
        out.push_back(quadrature_density(phased, carry, Axis::FieldStrength, grid));
        carry = lower;
    }
    return out;
}

}  // namespace kslight
