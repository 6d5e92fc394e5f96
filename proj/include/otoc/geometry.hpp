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
#include <numbers>

#include "otoc/hilbert.hpp"

namespace otoc {

inline constexpr int kMaxCorrelatorOrder = 8;

/// Principal angles of range(P_rho) relative to range(P_R), with the paired
/// axes. Columns of axes_u (resp. residuals_v) are meaningful only where
/// u_defined (resp. v_defined) is set: u is undefined at theta = pi/2 and v at
/// theta = 0.
struct SubspaceGeometry {
    Index dim = 0;
    Index d_rho = 0;
    Index d_r = 0;
    RealVector angles;  // descending cos
    RealVector cosines;
    Matrix axes_w;
    Matrix axes_u;
    Matrix residuals_v;
    std::vector<bool> u_defined;
    std::vector<bool> v_defined;
};

inline constexpr double kAxisTol = 1e-9;

/// Two-subspace decomposition from the SVD of B_R^dagger B_rho. When
/// D_rho > D_R the roles are kept; the surplus angles are pi/2.
inline SubspaceGeometry halmos_decompose(const Projector &p_r, const Projector &p_rho) {
    if (p_r.dim() != p_rho.dim()) throw DimensionError("halmos_decompose: dimension mismatch");
    SubspaceGeometry g;
    g.dim = p_r.dim();
    g.d_r = p_r.rank();
    g.d_rho = p_rho.rank();
    const Index k = g.d_rho;
    g.angles = RealVector::Constant(k, std::numbers::pi / 2);
    g.cosines = RealVector::Zero(k);
    g.axes_u = Matrix::Zero(g.dim, k);
    g.residuals_v = Matrix::Zero(g.dim, k);
    g.u_defined.assign(k, false);
    g.v_defined.assign(k, false);
    if (k == 0) {
        g.axes_w = Matrix(g.dim, 0);
        return g;
    }
    Matrix b_rho = p_rho.range_basis();
    if (g.d_r == 0) {
        g.axes_w = b_rho;
        g.residuals_v = b_rho;
        g.v_defined.assign(k, true);
        return g;
    }
    Matrix b_r = p_r.range_basis();
    Matrix c = b_r.adjoint() * b_rho;
    Eigen::BDCSVD<Matrix> svd(c, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const RealVector &s = svd.singularValues();
    const Index m = s.size();
    g.axes_w = b_rho * svd.matrixV();
    Matrix u_all = b_r * svd.matrixU().leftCols(m);
    for (Index j = 0; j < k; ++j) {
        double cj = j < m ? std::clamp(s[j], 0.0, 1.0) : 0.0;
        double sj = std::sqrt(std::max(0.0, 1.0 - cj * cj));
        g.cosines[j] = cj;
        g.angles[j] = std::acos(cj);
        if (j < m && cj > kAxisTol) {
            g.axes_u.col(j) = u_all.col(j);
            g.u_defined[j] = true;
        }
        if (sj > kAxisTol) {
            Vector v = g.axes_w.col(j);
            if (g.u_defined[j]) v -= cj * g.axes_u.col(j);
            g.residuals_v.col(j) = v / sj;
            g.v_defined[j] = true;
        }
    }
    return g;
}

/// (1/D_rho) Tr[(P_R P_rho)^n] by dense products. The imaginary residue is
/// checked and dropped; the result is clamped into [0, 1].
inline double correlator_trace(const Projector &p_r, const Projector &p_rho, int n) {
    if (p_r.dim() != p_rho.dim()) throw DimensionError("correlator_trace: dimension mismatch");
    if (n < 1 || n > kMaxCorrelatorOrder) throw PreconditionError("correlator order out of range");
    if (p_rho.rank() == 0) throw PreconditionError("correlator undefined for rank-0 P_rho");
    Matrix x = p_r.matrix() * p_rho.matrix();
    Matrix acc = x;
    for (int i = 1; i < n; ++i) acc = (acc * x).eval();
    Complex tr = acc.trace() / static_cast<double>(p_rho.rank());
    if (std::abs(tr.imag()) > 1e-9) throw NumericalError("correlator trace has imaginary residue");
    return std::clamp(tr.real(), 0.0, 1.0);
}

inline double correlator_from_angles(const SubspaceGeometry &g, int n) {
    if (n < 1 || n > kMaxCorrelatorOrder) throw PreconditionError("correlator order out of range");
    if (g.d_rho == 0) throw PreconditionError("correlator undefined for rank-0 P_rho");
    double acc = 0.0;
    for (Index j = 0; j < g.d_rho; ++j) acc += std::pow(g.cosines[j] * g.cosines[j], n);
    return acc / static_cast<double>(g.d_rho);
}

struct CorrelatorMoments {
    double g2 = 0;
    double g4 = 0;
    double sigma2 = 0;
};

/// G4 - (G2)^2 with the floating-point policy used throughout: residues down
/// to -1e-12 are clamped to zero, anything more negative is an error.
inline double checked_variance(double g2, double g4) {
    double s = g4 - g2 * g2;
    if (s < -1e-12) throw NumericalError("negative angle variance " + std::to_string(s));
    return std::max(0.0, s);
}

inline CorrelatorMoments correlator_moments(const Projector &p_r, const Projector &p_rho) {
    CorrelatorMoments m;
    m.g2 = correlator_trace(p_r, p_rho, 1);
    m.g4 = correlator_trace(p_r, p_rho, 2);
    m.sigma2 = checked_variance(m.g2, m.g4);
    return m;
}

inline double angle_variance(const Projector &p_r, const Projector &p_rho) {
    return correlator_moments(p_r, p_rho).sigma2;
}

/// (1/D_rho) sum_k (cos^2 theta_k - G2)^2 straight from the angles.
inline double angle_variance_from_angles(const SubspaceGeometry &g) {
    double g2 = correlator_from_angles(g, 1);
    double acc = 0.0;
    for (Index j = 0; j < g.d_rho; ++j) {
        double d = g.cosines[j] * g.cosines[j] - g2;
        acc += d * d;
    }
    return acc / static_cast<double>(g.d_rho);
}

}  // namespace otoc
