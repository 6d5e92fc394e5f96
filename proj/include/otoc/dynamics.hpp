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

#include <cmath>
#include <cstdint>
#include <vector>

#include "otoc/geometry.hpp"
#include "otoc/parallel.hpp"

namespace otoc {

struct CorrelatorSeries {
    std::vector<double> times;
    std::vector<double> g2;
    std::vector<double> g4;
    std::vector<double> sigma2;
    std::vector<double> commutator_norm;  // (1/2D_eta) ||[P_R, P_psi(t)]||_F^2
    std::vector<double> angle_sigma2;     // filled only with the angle cross-check
};

struct SeriesOptions {
    bool angle_cross_check = false;
};

namespace detail {
struct SeriesPoint {
    double g2 = 0, g4 = 0, sigma2 = 0, comm = 0, angle_sigma2 = 0;
};

/// Correlators of range(b_r) and range(w), both given by orthonormal columns.
inline SeriesPoint series_point(const Matrix &b_r, const Matrix &w, bool angles) {
    SeriesPoint p;
    const double dr = static_cast<double>(w.cols());
    Matrix k = b_r.adjoint() * w;       // D_R x D_eta
    Matrix gram = k.adjoint() * k;      // W^dagger P_R W
    p.g2 = gram.trace().real() / dr;
    p.g4 = (gram * gram).trace().real() / dr;
    p.sigma2 = checked_variance(p.g2, p.g4);
    // Commutator [P_R, W W^dagger] = X W^dagger - W X^dagger with X = P_R W.
    Matrix x = b_r * k;
    Matrix c = x * w.adjoint() - w * x.adjoint();
    p.comm = c.squaredNorm() / (2.0 * dr);
    if (angles) {
        Eigen::BDCSVD<Matrix> svd(k);
        RealVector s = svd.singularValues();
        double m2 = 0, m4 = 0;
        for (Index i = 0; i < s.size(); ++i) {
            double c2 = std::min(1.0, s[i] * s[i]);
            m2 += c2;
            m4 += c2 * c2;
        }
        m2 /= dr;
        m4 /= dr;
        p.angle_sigma2 = m4 - m2 * m2;
    }
    return p;
}
}  // namespace detail

/// G2(t), G4(t), sigma2(t) and the commutator norm for P_R = |chi><chi| (x) 1
/// and P_psi(t) = U(t) (|psi><psi| (x) 1) U(t)^dagger.
inline CorrelatorSeries correlator_series(const ManyBodySetup &setup, const UnitarySource &source,
                                          const std::vector<double> &times, SeriesOptions opt = {}) {
    setup.validate();
    if (source_dim(source) != setup.d()) throw DimensionError("source dimension does not match setup");
    Matrix b_r = tensor_embed(setup, Factor::observable).range_basis();
    Matrix b_psi = tensor_embed(setup, Factor::core).range_basis();
    auto pts = parallel_map(times.size(), [&](std::size_t i) {
        Matrix w = apply_evolution(source, times[i], b_psi);
        if (orthonormality_defect(w) > tol::unit(w.rows())) {
            throw NumericalError("evolved core basis lost orthonormality");
        }
        return detail::series_point(b_r, w, opt.angle_cross_check);
    });
    CorrelatorSeries s;
    s.times = times;
    for (const auto &p : pts) {
        s.g2.push_back(p.g2);
        s.g4.push_back(p.g4);
        s.sigma2.push_back(p.sigma2);
        s.commutator_norm.push_back(p.comm);
        if (opt.angle_cross_check) s.angle_sigma2.push_back(p.angle_sigma2);
    }
    return s;
}

struct HaarPrediction {
    double mean_g2 = 0;
    double var_g2 = 0;
    double mean_g4 = 0;
    double sigma2_typ = 0;
    double d = 0, d_s = 0, d_sigma = 0;

    double fluctuation_scale(int n) const { return 2.0 * n * std::sqrt(2.0 * d_sigma) / d; }
};

/// Haar averages for rank D/D_S and rank D/D_sigma projectors in dimension D.
inline HaarPrediction haar_prediction(Index d, Index d_s, Index d_sigma) {
    if (d < 2 || d_s < 1 || d_sigma < 1 || d % d_s != 0 || d % d_sigma != 0) {
        throw PreconditionError("haar_prediction: D_S and D_sigma must divide D (D >= 2)");
    }
    HaarPrediction h;
    const double D = static_cast<double>(d), s = static_cast<double>(d_s),
                 g = static_cast<double>(d_sigma);
    h.d = D;
    h.d_s = s;
    h.d_sigma = g;
    h.mean_g2 = 1.0 / s;
    h.var_g2 = (g - 1.0) * (s - 1.0) / ((D * D - 1.0) * s * s);
    h.mean_g4 = D * D / (D * D - 1.0) *
                (1.0 / (s * s) + 1.0 / (s * g) - 1.0 / (s * s * g) - 1.0 / (D * D * s));
    h.sigma2_typ = (1.0 / (g * s)) * (1.0 - 1.0 / s);
    return h;
}

struct SampleStats {
    double mean = 0;
    double var = 0;  // unbiased
    double se = 0;
};

inline SampleStats sample_stats(const std::vector<double> &x) {
    SampleStats s;
    const double n = static_cast<double>(x.size());
    for (double v : x) s.mean += v;
    s.mean /= n;
    for (double v : x) s.var += (v - s.mean) * (v - s.mean);
    s.var = x.size() > 1 ? s.var / (n - 1.0) : 0.0;
    s.se = std::sqrt(s.var / n);
    return s;
}

struct TypicalityReport {
    HaarPrediction prediction;
    int n_samples = 0;
    std::vector<double> g2, g4, sigma2;
    SampleStats g2_stats, g4_stats, sigma2_stats;
    double kappa = 3;
    double tail_fraction_g2 = 0;
    double tail_fraction_g4 = 0;

    bool g2_mean_ok = false;      // within 4 predicted standard errors
    bool g2_variance_ok = false;  // within a factor 2 of var_g2
    bool g4_mean_ok = false;      // within 4 sample standard errors
    bool tails_ok = false;        // both tail fractions <= 1%
};

/// CUE sampling of one projector pair. Only V = B_R^dagger U B_rho enters, so
/// each sample draws the leading D_rho columns of a Haar unitary and keeps the
/// top D_R rows; this is the same distribution as conjugating the full matrix.
inline TypicalityReport typicality_experiment(Index d, Index d_s, Index d_sigma, int n_samples,
                                              std::uint64_t seed, double kappa = 3.0) {
    if (n_samples < 2) throw PreconditionError("typicality needs at least two samples");
    TypicalityReport r;
    r.prediction = haar_prediction(d, d_s, d_sigma);
    r.n_samples = n_samples;
    r.kappa = kappa;
    const Index d_r = d / d_s, d_rho = d / d_sigma;
    struct Sample {
        double g2 = 0, g4 = 0;
    };
    auto samples = parallel_map(static_cast<std::size_t>(n_samples), [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        Matrix v = sample_haar_isometry(d, d_rho, rng);
        Matrix k = v.topRows(d_r);
        Matrix gram = k.adjoint() * k;
        Sample s;
        s.g2 = gram.trace().real() / static_cast<double>(d_rho);
        s.g4 = gram.squaredNorm() / static_cast<double>(d_rho);
        return s;
    });
    const HaarPrediction &p = r.prediction;
    int tail2 = 0, tail4 = 0;
    for (const auto &s : samples) {
        r.g2.push_back(s.g2);
        r.g4.push_back(s.g4);
        r.sigma2.push_back(checked_variance(s.g2, s.g4));
        tail2 += std::abs(s.g2 - p.mean_g2) > kappa * p.fluctuation_scale(1) ? 1 : 0;
        tail4 += std::abs(s.g4 - p.mean_g4) > kappa * p.fluctuation_scale(2) ? 1 : 0;
    }
    r.g2_stats = sample_stats(r.g2);
    r.g4_stats = sample_stats(r.g4);
    r.sigma2_stats = sample_stats(r.sigma2);
    r.tail_fraction_g2 = static_cast<double>(tail2) / n_samples;
    r.tail_fraction_g4 = static_cast<double>(tail4) / n_samples;
    double se_pred = std::sqrt(p.var_g2 / n_samples);
    r.g2_mean_ok = std::abs(r.g2_stats.mean - p.mean_g2) <= 4.0 * se_pred;
    r.g2_variance_ok = p.var_g2 == 0 ? r.g2_stats.var < 1e-24
                                     : r.g2_stats.var <= 2.0 * p.var_g2 && r.g2_stats.var >= 0.5 * p.var_g2;
    r.g4_mean_ok = std::abs(r.g4_stats.mean - p.mean_g4) <= 4.0 * std::max(r.g4_stats.se, 1e-15);
    r.tails_ok = r.tail_fraction_g2 <= 0.01 && r.tail_fraction_g4 <= 0.01;
    return r;
}

struct SwapCheck {
    double lhs = 0;
    double rhs = 0;
    double diff = 0;
};

inline constexpr Index kSwapMaxDim = 128;

/// G4 two ways: the direct trace (1/D_rho) Tr[P_R P P_R P], and the doubled
/// space form (1/D_rho) Tr[(P_R (x) P_R) SWAP (P (x) P)] summed index by index,
///   sum_{abcd} (P_R)_{ab} (P_R)_{cd} P_{da} P_{bc}
/// without ever forming the D^2 x D^2 operators.
inline SwapCheck swap_representation_check(const Projector &p_r, const Projector &p_rho_t) {
    if (p_r.dim() != p_rho_t.dim()) throw DimensionError("swap check: dimension mismatch");
    const Index d = p_r.dim();
    if (d > kSwapMaxDim) throw DimensionError("swap check: D exceeds 128");
    if (p_rho_t.rank() == 0) throw PreconditionError("swap check: rank-0 P_rho");
    const Matrix &r = p_r.matrix();
    const Matrix &p = p_rho_t.matrix();
    const double dr = static_cast<double>(p_rho_t.rank());
    SwapCheck out;
    out.lhs = (r * p * r * p).trace().real() / dr;
    // (A (x) A)_{(ac),(bd)} = A_ab A_cd ; (SWAP (P (x) P))_{(bd),(ac)} = P_{da} P_{bc}.
    Complex acc(0.0);
    for (Index a = 0; a < d; ++a) {
        for (Index b = 0; b < d; ++b) {
            const Complex rab = r(a, b);
            if (rab == Complex(0.0)) continue;
            for (Index c = 0; c < d; ++c) {
                const Complex f = rab * p(b, c);
                if (f == Complex(0.0)) continue;
                Complex inner(0.0);
                for (Index dd = 0; dd < d; ++dd) inner += r(c, dd) * p(dd, a);
                acc += f * inner;
            }
        }
    }
    out.rhs = acc.real() / dr;
    out.diff = std::abs(out.lhs - out.rhs);
    return out;
}

}  // namespace otoc
