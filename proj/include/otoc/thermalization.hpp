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

#include "otoc/geometry.hpp"

namespace otoc {

/// A bound clamped into [0, 1]; vacuous is set when clamping was needed.
struct BoundValue {
    double value = 0;
    bool vacuous = false;
};

inline BoundValue clamp_unit(double x) {
    if (x > 1.0) return {1.0, true};
    if (x < 0.0) return {0.0, true};
    return {x, false};
}

/// max(0, D_rho (1 - sigma2 / lambda^2)).
inline double bound_thermal_dimension(double sigma2, double lambda, Index d_rho) {
    if (!(lambda > 0)) throw PreconditionError("lambda must be positive");
    return std::max(0.0, static_cast<double>(d_rho) * (1.0 - sigma2 / (lambda * lambda)));
}

/// min(1, (3/lambda) (sigma2/4)^(1/3)).
inline BoundValue bound_nonthermal_fraction(double sigma2, double lambda) {
    if (!(lambda > 0)) throw PreconditionError("lambda must be positive");
    double s = std::max(0.0, sigma2);
    return clamp_unit(3.0 / lambda * std::cbrt(s / 4.0));
}

/// Markov-type bound sigma2 / lambda^2 on the fraction of principal angles with
/// |cos^2 theta - G2| > lambda.
inline BoundValue markov_angle_fraction_bound(double sigma2, double lambda) {
    if (!(lambda > 0)) throw PreconditionError("lambda must be positive");
    return clamp_unit(std::max(0.0, sigma2) / (lambda * lambda));
}

/// Resolution at which the fraction bound and the Markov bound coincide.
inline double fraction_bound_crossover(double sigma2) {
    return std::cbrt(4.0 * sigma2 * sigma2) / 3.0;
}

inline double converse_variance_bound(double lambda, double f_max) {
    if (!(lambda >= 0) || lambda >= 1) throw PreconditionError("converse bound needs 0 <= lambda < 1");
    if (!(f_max >= 0) || f_max > 1) throw PreconditionError("f_max must lie in [0, 1]");
    return lambda * lambda + (1.0 - lambda * lambda) * f_max;
}

inline double nonthermal_witness_bound(double gamma2, double lambda) {
    if (!(lambda >= 0) || lambda >= 1) throw PreconditionError("witness bound needs 0 <= lambda < 1");
    return std::max(0.0, (gamma2 - lambda * lambda) / (1.0 - lambda * lambda));
}

struct ThermalSubspace {
    Projector projector;
    Matrix basis;
    Index dim = 0;
    double g2 = 0;
};

/// Span of the principal axes w_k with |cos^2 theta_k - G2| <= lambda.
inline ThermalSubspace thermal_subspace(const SubspaceGeometry &g, double lambda) {
    if (!(lambda > 0)) throw PreconditionError("lambda must be positive");
    double g2 = correlator_from_angles(g, 1);
    std::vector<Index> keep;
    for (Index j = 0; j < g.d_rho; ++j) {
        if (std::abs(g.cosines[j] * g.cosines[j] - g2) <= lambda) keep.push_back(j);
    }
    Matrix b(g.dim, static_cast<Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) b.col(static_cast<Index>(i)) = g.axes_w.col(keep[i]);
    Projector p = Projector::from_basis(b);
    return ThermalSubspace{std::move(p), std::move(b), static_cast<Index>(keep.size()), g2};
}

/// Per-column expectation values <b_k|P_R|b_k>.
inline RealVector basis_expectations(const Projector &p_r, const Matrix &basis) {
    Matrix pb = p_r.matrix() * basis;
    RealVector e(basis.cols());
    for (Index k = 0; k < basis.cols(); ++k) e[k] = basis.col(k).dot(pb.col(k)).real();
    return e;
}

/// Fraction of basis states with |<b|P_R|b> - G2| > lambda (strict). When
/// p_rho is supplied the basis is also checked to lie in its range.
inline double empirical_nonthermal_fraction(const Projector &p_r, const Matrix &basis, double g2,
                                            double lambda, const Projector *p_rho = nullptr) {
    if (basis.rows() != p_r.dim()) throw DimensionError("basis row count mismatch");
    if (basis.cols() == 0) throw PreconditionError("empty basis");
    if (orthonormality_defect(basis) > tol::unit(basis.rows())) {
        throw PreconditionError("basis is not orthonormal");
    }
    if (p_rho) {
        if (basis.cols() != p_rho->rank()) throw PreconditionError("basis does not span range(P_rho)");
        if ((p_rho->matrix() * basis - basis).norm() > tol::unit(basis.rows())) {
            throw PreconditionError("basis leaves range(P_rho)");
        }
    }
    RealVector e = basis_expectations(p_r, basis);
    Index bad = 0;
    for (Index k = 0; k < e.size(); ++k) bad += std::abs(e[k] - g2) > lambda ? 1 : 0;
    return static_cast<double>(bad) / static_cast<double>(e.size());
}

inline Matrix worst_case_basis(const SubspaceGeometry &g) { return g.axes_w; }

/// Haar-rotated orthonormal basis of the same range.
inline Matrix random_basis(const Matrix &range_basis, Rng &rng) {
    return range_basis * sample_haar_unitary(range_basis.cols(), rng);
}

struct CoreSizing {
    double d_sigma_formula = 0;  // (D_S (D_S-1)/4) (3/(lambda_rel f))^3
    std::uint64_t d_sigma_min = 0;
    int n_sigma = 0;
    double lambda = 0;            // absolute resolution lambda_rel / D_S
    double sigma2_threshold = 0;  // 4 (f lambda / 3)^3
};

inline CoreSizing core_sizing(double lambda_rel, double f_target, Index d_s) {
    if (!(lambda_rel > 0)) throw PreconditionError("lambda_rel must be positive");
    if (!(f_target > 0) || f_target > 1) throw PreconditionError("f_target must lie in (0, 1]");
    if (d_s < 2) throw PreconditionError("D_S must be at least 2");
    const double ds = static_cast<double>(d_s);
    CoreSizing c;
    double cube = 3.0 / (lambda_rel * f_target);
    c.d_sigma_formula = ds * (ds - 1.0) / 4.0 * cube * cube * cube;
    // Guard the ceiling against a last-ulp overshoot of exact integers.
    c.d_sigma_min = static_cast<std::uint64_t>(std::max(1.0, std::ceil(c.d_sigma_formula * (1 - 1e-12))));
    int n = 0;
    while ((std::uint64_t{1} << n) < c.d_sigma_min) ++n;
    c.n_sigma = n;
    c.lambda = lambda_rel / ds;
    double x = f_target * c.lambda / 3.0;
    c.sigma2_threshold = 4.0 * x * x * x;
    return c;
}

struct ThermalizationReport {
    double g2 = 0;
    double g4 = 0;
    double sigma2 = 0;
    double lambda = 0;
    double dim_thermal_bound = 0;
    Index dim_thermal_achieved = 0;
    BoundValue f_lambda_bound;
    std::vector<double> empirical_f;
    double worst_basis_f = 0;
    double converse_bound = 0;
};

/// Forward and converse bounds for one pair at one resolution, measured on the
/// principal-axes basis and n_bases Haar-rotated bases.
inline ThermalizationReport thermalization_report(const Projector &p_r, const Projector &p_rho,
                                                  double lambda, int n_bases, Rng &rng) {
    ThermalizationReport r;
    CorrelatorMoments m = correlator_moments(p_r, p_rho);
    r.g2 = m.g2;
    r.g4 = m.g4;
    r.sigma2 = m.sigma2;
    r.lambda = lambda;
    SubspaceGeometry g = halmos_decompose(p_r, p_rho);
    r.dim_thermal_bound = bound_thermal_dimension(m.sigma2, lambda, p_rho.rank());
    r.dim_thermal_achieved = thermal_subspace(g, lambda).dim;
    r.f_lambda_bound = bound_nonthermal_fraction(m.sigma2, lambda);
    r.worst_basis_f = empirical_nonthermal_fraction(p_r, worst_case_basis(g), m.g2, lambda);
    Matrix base = g.axes_w;
    double f_max = r.worst_basis_f;
    for (int i = 0; i < n_bases; ++i) {
        double f = empirical_nonthermal_fraction(p_r, random_basis(base, rng), m.g2, lambda);
        r.empirical_f.push_back(f);
        f_max = std::max(f_max, f);
    }
    if (lambda < 1) r.converse_bound = converse_variance_bound(lambda, f_max);
    return r;
}

}  // namespace otoc
