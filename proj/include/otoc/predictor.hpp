// Copyright 2026 The otoc-thermalize Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "otoc/dynamics.hpp"
#include "otoc/thermalization.hpp"

namespace otoc {

inline double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

/// Trapezoid rule on [a, b], doubling the panel count until two successive
/// estimates agree to tol.
template <typename F>
auto trapezoid_integrate(F &&f, double a, double b, double tol = 1e-11, int max_levels = 24)
    -> decltype(f(a)) {
    using R = decltype(f(a));
    const double h0 = b - a;
    R sum = 0.5 * (f(a) + f(b));
    R prev = sum * h0;
    long n = 1;
    for (int level = 1; level <= max_levels; ++level) {
        double h = h0 / static_cast<double>(2 * n);
        for (long i = 0; i < n; ++i) sum += f(a + h * static_cast<double>(2 * i + 1));
        n *= 2;
        R cur = sum * h;
        if (level >= 4 && std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    throw NumericalError("trapezoid_integrate did not converge");
}

struct BoxWindow {
    double t0 = 0;
    double T = 1;
};
struct TentWindow {
    double t_obs = 1;
};
struct TabulatedWindow {
    std::vector<double> times;
    std::vector<double> weights;  // normalized so the trapezoid mass is 1
};

/// Nonnegative unit-mass time window.
class WeightingFunction {
  public:
    using Kind = std::variant<BoxWindow, TentWindow, TabulatedWindow>;

    /// Uniform on [t0, t0+T].
    static WeightingFunction box(double t0, double T) {
        if (!(T > 0) || !std::isfinite(t0)) throw PreconditionError("box window needs T > 0");
        return WeightingFunction(BoxWindow{t0, T});
    }
    /// (1 - |t|/T_obs)/T_obs on [-T_obs, T_obs].
    static WeightingFunction tent(double t_obs) {
        if (!(t_obs > 0)) throw PreconditionError("tent window needs T_obs > 0");
        return WeightingFunction(TentWindow{t_obs});
    }
    /// Piecewise-linear window through the samples, rescaled to unit mass.
    static WeightingFunction tabulated(std::vector<double> times, std::vector<double> weights) {
        if (times.size() < 2 || times.size() != weights.size()) {
            throw PreconditionError("tabulated window needs >= 2 matching samples");
        }
        double mass = 0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!(weights[i] >= 0)) throw PreconditionError("window weights must be nonnegative");
            if (i > 0) {
                if (!(times[i] > times[i - 1])) throw PreconditionError("window times must increase");
                mass += 0.5 * (weights[i] + weights[i - 1]) * (times[i] - times[i - 1]);
            }
        }
        if (!(mass > 0)) throw PreconditionError("window has zero mass");
        for (double &w : weights) w /= mass;
        return WeightingFunction(TabulatedWindow{std::move(times), std::move(weights)});
    }

    const Kind &kind() const { return k_; }

    double operator()(double t) const {
        struct V {
            double t;
            double operator()(const BoxWindow &b) const {
                return (t >= b.t0 && t <= b.t0 + b.T) ? 1.0 / b.T : 0.0;
            }
            double operator()(const TentWindow &w) const {
                double a = std::abs(t);
                return a < w.t_obs ? (1.0 - a / w.t_obs) / w.t_obs : 0.0;
            }
            double operator()(const TabulatedWindow &w) const {
                const auto &x = w.times;
                if (t < x.front() || t > x.back()) return 0.0;
                auto it = std::upper_bound(x.begin(), x.end(), t);
                if (it == x.end()) return w.weights.back();
                std::size_t i = static_cast<std::size_t>(it - x.begin());
                double s = (t - x[i - 1]) / (x[i] - x[i - 1]);
                return (1 - s) * w.weights[i - 1] + s * w.weights[i];
            }
        };
        return std::visit(V{t}, k_);
    }

    /// Support interval.
    std::pair<double, double> support() const {
        struct V {
            std::pair<double, double> operator()(const BoxWindow &b) const { return {b.t0, b.t0 + b.T}; }
            std::pair<double, double> operator()(const TentWindow &w) const { return {-w.t_obs, w.t_obs}; }
            std::pair<double, double> operator()(const TabulatedWindow &w) const {
                return {w.times.front(), w.times.back()};
            }
        };
        return std::visit(V{}, k_);
    }

  private:
    explicit WeightingFunction(Kind k) : k_(std::move(k)) {}
    Kind k_;
};

/// w~(E) = integral of w(t) exp(-iEt). Closed forms for box and tent; exact
/// integration of the piecewise-linear interpolant for tabulated windows.
inline Complex fourier_weight(const WeightingFunction &w, double e) {
    struct V {
        double e;
        Complex operator()(const BoxWindow &b) const {
            return std::exp(Complex(0.0, -e * (b.t0 + b.T / 2))) * sinc(e * b.T / 2);
        }
        Complex operator()(const TentWindow &w) const {
            double s = sinc(e * w.t_obs / 2);
            return Complex(s * s, 0.0);
        }
        Complex operator()(const TabulatedWindow &w) const {
            // On each segment the integrand is linear times exp(-iEt).
            Complex acc(0.0);
            for (std::size_t i = 1; i < w.times.size(); ++i) {
                double a = w.times[i - 1], b = w.times[i], h = b - a;
                double fa = w.weights[i - 1], fb = w.weights[i];
                double x = e * h;
                Complex ea = std::exp(Complex(0.0, -e * a));
                Complex eb = std::exp(Complex(0.0, -e * b));
                if (std::abs(x) < 1e-6) {
                    Complex mid = std::exp(Complex(0.0, -e * (a + b) / 2));
                    acc += 0.5 * (fa + fb) * h * mid;
                    continue;
                }
                // integral_0^h (fa + (fb-fa) s/h) e^{-iE(a+s)} ds
                Complex i1 = (ea - eb) / Complex(0.0, e);
                Complex i2 = (Complex(0.0, 1.0) * h * eb / e + (eb - ea) / (e * e)) / h;
                acc += fa * i1 + (fb - fa) * i2;
            }
            return acc;
        }
    };
    return std::visit(V{e}, w.kind());
}

struct WindowPair {
    WeightingFunction w;
    WeightingFunction w_plus;
    double delta_e = 0;
    double w0 = 0;
    double W = 0;
    double xi = 0;
};

inline WindowPair canonical_window_pair(double t0, double T, double t_obs,
                                        double xi = std::numbers::pi / 2) {
    if (!(xi > 0) || !(xi < std::numbers::pi)) throw PreconditionError("xi must lie in (0, pi)");
    WindowPair p{WeightingFunction::box(t0, T), WeightingFunction::tent(t_obs), 2 * xi / t_obs,
                 t_obs / (xi * T), sinc(xi) * sinc(xi), xi};
    if (!(p.w0 > 0 && p.w0 < 1)) throw PreconditionError("need 0 < w0 < 1, i.e. T > T_obs/xi");
    if (!(p.W > 0 && p.W < 1)) throw PreconditionError("need 0 < W < 1");
    return p;
}

struct WindowConstants {
    double min_plus_inside = 0;   // min of w~_+ over |E| <= delta_e
    double max_abs_outside = 0;   // max of |w~| over delta_e <= |E| <= e_max
};

/// Grid scan of the Fourier windows, for checking W and w0 against the
/// transforms themselves.
inline WindowConstants scan_window_constants(const WindowPair &p, double e_max, int n_grid) {
    WindowConstants c;
    c.min_plus_inside = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n_grid; ++i) {
        double e = p.delta_e * i / n_grid;
        c.min_plus_inside = std::min(c.min_plus_inside, fourier_weight(p.w_plus, e).real());
        c.min_plus_inside = std::min(c.min_plus_inside, fourier_weight(p.w_plus, -e).real());
    }
    for (int i = 0; i <= n_grid; ++i) {
        double e = p.delta_e + (e_max - p.delta_e) * i / n_grid;
        c.max_abs_outside = std::max(c.max_abs_outside, std::abs(fourier_weight(p.w, e)));
        c.max_abs_outside = std::max(c.max_abs_outside, std::abs(fourier_weight(p.w, -e)));
    }
    return c;
}

/// (sqrt(ac_plus / W) + w0 sqrt(<A,A>)) sqrt(<B,B>).
inline double theorem_bound(double autocorr_avg_plus, double norm_a, double norm_b,
                            const WindowPair &pair) {
    if (!(pair.W > 0)) throw PreconditionError("W must be positive");
    if (autocorr_avg_plus < -1e-12) throw PreconditionError("completely positive average is negative");
    double ac = std::max(0.0, autocorr_avg_plus);
    return (std::sqrt(ac / pair.W) + pair.w0 * std::sqrt(std::max(0.0, norm_a))) *
           std::sqrt(std::max(0.0, norm_b));
}

/// Normalized form T_obs/(xi T) + (xi/|sin xi|) sqrt(ac_norm), where ac_norm is
/// the tent-averaged autocorrelator divided by <A,A>.
inline double synopsis_bound(double autocorr_plus_avg, double t_obs, double t_horizon, double xi) {
    if (!(xi > 0)) throw PreconditionError("xi must be positive");
    if (!(t_horizon > 0) || !(t_obs > 0)) throw PreconditionError("T and T_obs must be positive");
    double s = std::sin(xi);
    if (std::abs(s) < 1e-12) throw PreconditionError("sin(xi) vanishes");
    return t_obs / (xi * t_horizon) + xi / std::abs(s) * std::sqrt(std::max(0.0, autocorr_plus_avg));
}

/// Bound on the fraction of [t0, t0+T] where |G2(t) - 1/D_S| > lambda, given
/// that the autocorrelator is within epsilon of thermal except on a fraction
/// kappa_rr of [-T_obs, T_obs].
inline BoundValue time_interval_bound(double epsilon, double kappa_rr, double xi, double t_obs,
                                      double t, Index d_s, Index d_sigma, double lambda) {
    if (!(lambda > 0)) throw PreconditionError("lambda must be positive");
    double s = std::sin(xi);
    if (!(xi > 0) || std::abs(s) < 1e-12) throw PreconditionError("sin(xi) vanishes");
    if (!(t > 0) || !(t_obs > 0)) throw PreconditionError("T and T_obs must be positive");
    double pre = static_cast<double>(d_sigma) / (lambda * lambda * static_cast<double>(d_s));
    double x = xi / std::abs(s) * std::sqrt(epsilon * epsilon + 2 * kappa_rr) + t_obs / (xi * t);
    return clamp_unit(pre * x);
}

/// epsilon_c for the cloned pair; the w-weighted nonthermal time fraction at
/// resolution lambda is then at most epsilon_c / lambda^2.
inline double cloned_equilibrium_bound(double epsilon, double kappa_plus, double w0, double W,
                                       Index d_s, Index d_sigma) {
    if (!(W > 0) || !(kappa_plus >= 0) || kappa_plus > 1 || !(w0 >= 0) || !(epsilon >= 0)) {
        throw PreconditionError("cloned bound inputs out of range");
    }
    const double ds = static_cast<double>(d_s), dg = static_cast<double>(d_sigma);
    return dg * std::sqrt(epsilon * epsilon * (1 - kappa_plus) / W + kappa_plus / (W * ds * ds)) +
           w0 * dg * (ds - 1) / (ds * ds);
}

/// Normalized quadrature weights of w on a time grid (trapezoid panels times
/// window values). A single node is a unit point mass.
inline std::vector<double> quadrature_weights(const WeightingFunction &w, const std::vector<double> &times) {
    const std::size_t n = times.size();
    if (n == 0) throw PreconditionError("empty time grid");
    if (n == 1) return {1.0};
    std::vector<double> q(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double h = times[i + 1] - times[i];
        if (!(h > 0)) throw PreconditionError("time grid must increase");
        q[i] += 0.5 * h;
        q[i + 1] += 0.5 * h;
    }
    double tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
        q[i] *= w(times[i]);
        tot += q[i];
    }
    if (!(tot > 0)) throw PreconditionError("window has no mass on the grid");
    for (double &x : q) x /= tot;
    return q;
}

/// sqrt(sum_ij q_i q_j K_ij) sqrt(<B,B>) for a Gram kernel
/// K_ij = <U_{t_i}(A), U_{t_j}(A)>. The kernel must be PSD to 1e-9.
inline double cauchy_schwarz_bound(const Matrix &kernel, const std::vector<double> &q, double norm_b) {
    const Index n = kernel.rows();
    if (kernel.cols() != n || static_cast<Index>(q.size()) != n) {
        throw DimensionError("kernel and weights disagree in size");
    }
    if ((kernel - kernel.adjoint()).norm() > 1e-9 * std::max<double>(1.0, kernel.norm())) {
        throw PreconditionError("kernel is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(kernel, Eigen::EigenvaluesOnly);
    if (n > 0 && es.eigenvalues().minCoeff() < -1e-9) throw PreconditionError("kernel is indefinite");
    RealVector qv = Eigen::Map<const RealVector>(q.data(), n);
    Complex quad = qv.cast<Complex>().dot(kernel * qv.cast<Complex>());
    return std::sqrt(std::max(0.0, quad.real())) * std::sqrt(std::max(0.0, norm_b));
}

inline double cauchy_schwarz_bound(const Matrix &kernel, const std::vector<double> &times,
                                   const WeightingFunction &w, double norm_b) {
    return cauchy_schwarz_bound(kernel, quadrature_weights(w, times), norm_b);
}

/// <B, A> = Tr[B^dagger A] / D.
inline Complex hs_inner(const Matrix &b, const Matrix &a) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("inner product shape mismatch");
    return b.conjugate().cwiseProduct(a).sum() / static_cast<double>(a.rows());
}

/// Operators expressed in the eigenbasis of a Hamiltonian, so that time
/// averages become sums over Bohr frequencies E_n - E_m.
struct SpectralOperators {
    RealVector energies;
    Matrix a;        // V^dagger A V
    Matrix b;        // V^dagger B V
    Matrix overlap;  // conj(b) .* a, the weight of each Bohr pair (n, m)
    double d = 1;
};

inline SpectralOperators spectral_operators(const Hamiltonian &h, const Matrix &a, const Matrix &b) {
    if (a.rows() != h.dim() || b.rows() != h.dim() || a.cols() != h.dim() || b.cols() != h.dim()) {
        throw DimensionError("spectral_operators: shape mismatch");
    }
    const Matrix &v = h.eigenvectors();
    SpectralOperators s{h.energies(), v.adjoint() * a * v, v.adjoint() * b * v, Matrix(), static_cast<double>(h.dim())};
    s.overlap = s.b.conjugate().cwiseProduct(s.a);
    return s;
}

/// <B, U_t(A)> with U_t(A) = e^{-iHt} A e^{iHt}.
inline Complex spectral_signal(const SpectralOperators &s, double t) {
    const Index d = s.energies.size();
    Vector ph(d);
    for (Index n = 0; n < d; ++n) ph[n] = std::exp(Complex(0.0, -s.energies[n] * t));
    return (ph.transpose() * s.overlap * ph.conjugate())(0, 0) / s.d;
}

/// Exact window average of <B, U_t(A)> against w.
inline Complex spectral_window_average(const SpectralOperators &s, const WeightingFunction &w) {
    const Index d = s.energies.size();
    Complex acc(0.0);
    for (Index m = 0; m < d; ++m) {
        for (Index n = 0; n < d; ++n) {
            acc += s.overlap(n, m) * fourier_weight(w, s.energies[n] - s.energies[m]);
        }
    }
    return acc / s.d;
}

/// Exact window average of the autocorrelator <A, U_t(A)> against w.
inline double spectral_autocorrelator_average(const SpectralOperators &s, const WeightingFunction &w) {
    const Index d = s.energies.size();
    Complex acc(0.0);
    for (Index m = 0; m < d; ++m) {
        for (Index n = 0; n < d; ++n) {
            double om = s.energies[n] - s.energies[m];
            acc += std::norm(s.a(n, m)) * fourier_weight(w, om);
        }
    }
    return acc.real() / s.d;
}

struct NegativeDemoReport {
    Index d = 0, d_s = 0, d_sigma = 0;
    int n_samples = 0;
    double threshold = 0;          // 1 / D_R^2
    double measured_scale = 0;     // rms of [G_rho rho]^2 - 1/D_sigma^2 over samples
    double estimate_scale = 0;     // D_sigma / D^2
    double ratio = 0;              // measured / threshold
    bool premise_satisfied = false;
    bool vacuous = false;
    std::string verdict;
};

/// Haar-typical check of the premise |[G_rho rho(t)]^2 - 1/D_sigma^2| << 1/D_R^2 that a
/// fourth-order analogue of the autocorrelator bound would need.
inline NegativeDemoReport fourth_order_negative_demo(Index d, Index d_s, Index d_sigma,
                                                     std::uint64_t seed, int n_samples = 200) {
    if (d < 2 || d > kDefaultMaxDim || d % d_s != 0 || d % d_sigma != 0 || n_samples < 1) {
        throw PreconditionError("negative demo: invalid dimensions");
    }
    NegativeDemoReport r;
    r.d = d;
    r.d_s = d_s;
    r.d_sigma = d_sigma;
    r.n_samples = n_samples;
    const Index d_rho = d / d_sigma;
    const double dr = static_cast<double>(d / d_s);
    const double inv_sigma = 1.0 / static_cast<double>(d_sigma);
    r.threshold = 1.0 / (dr * dr);
    r.estimate_scale = static_cast<double>(d_sigma) / (static_cast<double>(d) * static_cast<double>(d));
    auto dev = parallel_map(static_cast<std::size_t>(n_samples), [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        Matrix v = sample_haar_isometry(d, d_rho, rng);
        double g = v.topRows(d_rho).squaredNorm() / static_cast<double>(d_rho);
        return g * g - inv_sigma * inv_sigma;
    });
    double ms = 0;
    for (double x : dev) ms += x * x;
    r.measured_scale = std::sqrt(ms / n_samples);
    r.ratio = r.measured_scale / r.threshold;
    r.premise_satisfied = r.measured_scale <= r.threshold;
    r.vacuous = d_sigma == 1;
    if (r.vacuous) {
        r.verdict = "premise satisfied (vacuous)";
    } else {
        r.verdict = r.premise_satisfied ? "premise satisfied" : "premise unsatisfiable";
    }
    return r;
}

}  // namespace otoc
