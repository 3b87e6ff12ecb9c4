#include "kslight/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "kslight/errors.hpp"

namespace kslight {

namespace {

constexpr double kPiF = 3.14159265358979323846;
constexpr int kParams = 5;
using Params = Eigen::Matrix<double, kParams, 1>;

// Parameters: [m1, m2, log w1, log w2, log amplitude]; m are radii for the
// ring and centers for the Gaussian.
class Objective {
public:
    Objective(const Histogram2D& h, const FitOptions& o) : hist_(h), model_(o.model) {
        const auto b = static_cast<Eigen::Index>(h.bins);
        centers_.resize(b);
        for (Eigen::Index i = 0; i < b; ++i) centers_(i) = h.center(static_cast<std::size_t>(i));
        data_.resize(b, b);
        for (Eigen::Index i = 0; i < b; ++i) {
            for (Eigen::Index j = 0; j < b; ++j) data_(i, j) = h.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
        norm2_ = data_.squaredNorm();
        const std::size_t m = std::max<std::size_t>(8, o.ring_points);
        cos_t_.resize(static_cast<Eigen::Index>(m));
        sin_t_.resize(static_cast<Eigen::Index>(m));
        for (std::size_t k = 0; k < m; ++k) {
            const double t = 2.0 * kPiF * (static_cast<double>(k) + 0.5) / static_cast<double>(m);
            cos_t_(static_cast<Eigen::Index>(k)) = std::cos(t);
            sin_t_(static_cast<Eigen::Index>(k)) = std::sin(t);
        }
    }

    [[nodiscard]] Eigen::MatrixXd model(const Params& p) const {
        const double w1 = std::exp(p(2));
        const double w2 = std::exp(p(3));
        const double amp = std::exp(p(4));
        if (model_ == FitModel::Gaussian) {
            const Eigen::VectorXd g1 = gauss(centers_.array() - p(0), w1);
            const Eigen::VectorXd g2 = gauss(centers_.array() - p(1), w2);
            return amp * g1 * g2.transpose();
        }
        const auto b = centers_.size();
        const auto m = cos_t_.size();
        Eigen::MatrixXd g1(b, m);
        Eigen::MatrixXd g2(b, m);
        for (Eigen::Index k = 0; k < m; ++k) {
            g1.col(k) = gauss(centers_.array() - p(0) * cos_t_(k), w1);
            g2.col(k) = gauss(centers_.array() - p(1) * sin_t_(k), w2);
        }
        return (amp / static_cast<double>(m)) * g1 * g2.transpose();
    }

    [[nodiscard]] Eigen::VectorXd residuals(const Params& p) const {
        Eigen::MatrixXd r = model(p) - data_;
        return Eigen::Map<Eigen::VectorXd>(r.data(), r.size());
    }

    [[nodiscard]] double cost(const Params& p) const {
        const double c = (model(p) - data_).squaredNorm();
        return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
    }

    [[nodiscard]] double relative(double sse) const { return norm2_ > 0.0 ? std::sqrt(sse / norm2_) : INFINITY; }

    [[nodiscard]] Params initial_guess() const {
        double s = 0.0, s1 = 0.0, s2 = 0.0, s11 = 0.0, s22 = 0.0;
        const auto b = centers_.size();
        for (Eigen::Index i = 0; i < b; ++i) {
            for (Eigen::Index j = 0; j < b; ++j) {
                const double d = std::max(0.0, data_(i, j));
                s += d;
                s1 += d * centers_(i);
                s2 += d * centers_(j);
                s11 += d * centers_(i) * centers_(i);
                s22 += d * centers_(j) * centers_(j);
            }
        }
        Params p;
        const double cell = hist_.width() * hist_.width();
        if (s <= 0.0) {
            p << 0.0, 0.0, std::log(0.5), std::log(0.5), 0.0;
            return p;
        }
        const double m1 = s1 / s, m2 = s2 / s;
        const double v1 = s11 / s - m1 * m1, v2 = s22 / s - m2 * m2;
        const double amp = std::log(std::max(s * cell, 1e-12));
        if (model_ == FitModel::Gaussian) {
            p << m1, m2, 0.5 * std::log(std::max(v1, 1e-4)), 0.5 * std::log(std::max(v2, 1e-4)), amp;
        } else {
            // Ring second moment: R²/2 + w²; start from w = 0.5.
            const double w0 = 0.5;
            p << std::sqrt(2.0 * std::max(s11 / s - w0 * w0, 0.01)), std::sqrt(2.0 * std::max(s22 / s - w0 * w0, 0.01)),
                std::log(w0), std::log(w0), amp;
        }
        return p;
    }

private:
    static Eigen::VectorXd gauss(const Eigen::ArrayXd& d, double w) {
        return (Eigen::ArrayXd(-0.5 * d.square() / (w * w)).exp() / (w * std::sqrt(2.0 * kPiF))).matrix();
    }

    const Histogram2D& hist_;
    FitModel model_;
    Eigen::VectorXd centers_;
    Eigen::MatrixXd data_;
    double norm2_ = 0.0;
    Eigen::VectorXd cos_t_;
    Eigen::VectorXd sin_t_;
};

struct SolveResult {
    Params p;
    double sse = INFINITY;
    std::size_t iterations = 0;
    bool converged = false;
};

SolveResult levenberg_marquardt(const Objective& f, Params p, std::size_t max_iter) {
    double lambda = 1e-3;
    Eigen::VectorXd r = f.residuals(p);
    double sse = r.squaredNorm();
    SolveResult out;
    for (std::size_t it = 0; it < max_iter; ++it) {
        out.iterations = it + 1;
        Eigen::MatrixXd jac(r.size(), kParams);
        for (int k = 0; k < kParams; ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(p(k)));
            Params pp = p, pm = p;
            pp(k) += h;
            pm(k) -= h;
            jac.col(k) = (f.residuals(pp) - f.residuals(pm)) / (2.0 * h);
        }
        const Eigen::Matrix<double, kParams, kParams> jtj = jac.transpose() * jac;
        const Params jtr = jac.transpose() * r;
        bool improved = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::Matrix<double, kParams, kParams> a = jtj;
            for (int k = 0; k < kParams; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            const Params step = a.ldlt().solve(-jtr);
            const Params trial = p + step;
            const Eigen::VectorXd rt = f.residuals(trial);
            const double st = rt.squaredNorm();
            if (std::isfinite(st) && st < sse) {
                const double gain = (sse - st) / std::max(sse, 1e-300);
                p = trial;
                r = rt;
                sse = st;
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
                if (gain < 1e-14 || step.norm() < 1e-12 * (1.0 + p.norm())) {
                    out.p = p;
                    out.sse = sse;
                    out.converged = true;
                    return out;
                }
                break;
            }
            lambda *= 4.0;
        }
        if (!improved) {
            // No descent direction left: at a minimum to working precision.
            out.converged = true;
            break;
        }
    }
    out.p = p;
    out.sse = sse;
    return out;
}

SolveResult nelder_mead(const Objective& f, const Params& start, std::size_t max_iter) {
    std::array<Params, kParams + 1> x;
    std::array<double, kParams + 1> fx{};
    x[0] = start;
    for (int k = 0; k < kParams; ++k) {
        x[k + 1] = start;
        x[k + 1](k) += k < 2 ? 0.1 * std::max(0.5, std::abs(start(k))) : 0.1;
    }
    for (int k = 0; k <= kParams; ++k) fx[k] = f.cost(x[k]);
    // Cost floor for the spread test: an exact fit drives fx toward zero, where a
    // purely relative tolerance can never be met.
    const double floor = 1e-12 * *std::max_element(fx.begin(), fx.end());
    std::array<int, kParams + 1> order{};
    SolveResult out;
    const std::size_t budget = max_iter * 40;
    for (std::size_t it = 0; it < budget; ++it) {
        out.iterations = it + 1;
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        const int best = order.front();
        const int worst = order.back();
        const int second = order[kParams - 1];
        double diameter = 0.0;
        for (int k = 0; k <= kParams; ++k) diameter = std::max(diameter, (x[k] - x[best]).cwiseAbs().maxCoeff());
        if (diameter < 1e-10 && fx[worst] - fx[best] <= 1e-15 * std::max(fx[best], floor)) {
            out.converged = true;
            break;
        }
        Params centroid = Params::Zero();
        for (int k = 0; k <= kParams; ++k) {
            if (k != worst) centroid += x[k];
        }
        centroid /= kParams;
        const Params xr = centroid + (centroid - x[worst]);
        const double fr = f.cost(xr);
        if (fr < fx[best]) {
            const Params xe = centroid + 2.0 * (centroid - x[worst]);
            const double fe = f.cost(xe);
            if (fe < fr) {
                x[worst] = xe;
                fx[worst] = fe;
            } else {
                x[worst] = xr;
                fx[worst] = fr;
            }
        } else if (fr < fx[second]) {
            x[worst] = xr;
            fx[worst] = fr;
        } else {
            const bool outside = fr < fx[worst];
            const Params xc = outside ? Params(centroid + 0.5 * (xr - centroid)) : Params(centroid + 0.5 * (x[worst] - centroid));
            const double fc = f.cost(xc);
            if (fc < (outside ? fr : fx[worst])) {
                x[worst] = xc;
                fx[worst] = fc;
            } else {
                for (int k = 0; k <= kParams; ++k) {
                    if (k == best) continue;
                    x[k] = x[best] + 0.5 * (x[k] - x[best]);
                    fx[k] = f.cost(x[k]);
                }
            }
        }
    }
    const auto it = std::min_element(fx.begin(), fx.end());
    out.p = x[static_cast<std::size_t>(it - fx.begin())];
    out.sse = *it;
    return out;
}

}  // namespace

std::string_view to_string(FitModel m) noexcept { return m == FitModel::Ring ? "ring" : "gaussian"; }

FitModel parse_model(std::string_view text) {
    if (text == "ring") return FitModel::Ring;
    if (text == "gaussian") return FitModel::Gaussian;
    throw InvalidConfig("unknown fit model '" + std::string(text) + "'");
}

std::string_view to_string(FitSolver s) noexcept {
    return s == FitSolver::LevenbergMarquardt ? "levenberg-marquardt" : "nelder-mead";
}

FitResult fit_moments(const Histogram2D& hist, const FitOptions& options) {
    if (hist.bins < 3 || hist.density.size() != hist.bins * hist.bins) throw InvalidConfig("malformed histogram");
    const Objective f(hist, options);
    const Params start = f.initial_guess();
    const SolveResult s = options.solver == FitSolver::LevenbergMarquardt
                              ? levenberg_marquardt(f, start, options.max_iterations)
                              : nelder_mead(f, start, options.max_iterations);
    FitResult out;
    out.model = options.model;
    out.solver = options.solver;
    out.iterations = s.iterations;
    out.residual = f.relative(s.sse);
    const std::string who(to_string(options.solver));
    if (!s.converged || !s.p.allFinite() || !std::isfinite(out.residual)) {
        throw FitDiverged(who + " fit did not converge (relative residual " + std::to_string(out.residual) + ")");
    }
    if (out.residual > options.max_residual) {
        throw FitDiverged(who + " fit rejected: relative residual " + std::to_string(out.residual) + " above " +
                          std::to_string(options.max_residual));
    }
    out.mean1 = options.model == FitModel::Ring ? std::abs(s.p(0)) : s.p(0);
    out.mean2 = options.model == FitModel::Ring ? std::abs(s.p(1)) : s.p(1);
    out.width1 = std::exp(s.p(2));
    out.width2 = std::exp(s.p(3));
    out.amplitude = std::exp(s.p(4));
    return out;
}

}  // namespace kslight
