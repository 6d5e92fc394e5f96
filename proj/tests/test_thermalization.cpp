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


#include <gtest/gtest.h>

#include <cmath>

#include "otoc/thermalization.hpp"
#include "test_util.hpp"

namespace otoc {
namespace {

TEST(Bounds, ClosedFormValues) {
    EXPECT_NEAR(bound_nonthermal_fraction(4e-3, 0.3).value, 10.0 * std::cbrt(1e-3), 1e-14);
    EXPECT_FALSE(bound_nonthermal_fraction(4e-3, 0.3).vacuous);
    EXPECT_TRUE(bound_nonthermal_fraction(0.25, 0.01).vacuous);
    EXPECT_EQ(bound_nonthermal_fraction(0.25, 0.01).value, 1.0);
    EXPECT_NEAR(bound_thermal_dimension(0.01, 0.2, 40), 30.0, 1e-12);
    EXPECT_EQ(bound_thermal_dimension(0.1, 0.2, 40), 0.0);
    EXPECT_NEAR(converse_variance_bound(0.5, 0.2), 0.25 + 0.75 * 0.2, 1e-15);
    EXPECT_NEAR(nonthermal_witness_bound(0.2, 0.2), (0.2 - 0.04) / 0.96, 1e-15);
    EXPECT_EQ(nonthermal_witness_bound(0.01, 0.2), 0.0);
    EXPECT_THROW(bound_nonthermal_fraction(0.1, 0.0), PreconditionError);
    EXPECT_THROW(converse_variance_bound(1.0, 0.5), PreconditionError);
    EXPECT_THROW(converse_variance_bound(0.5, 1.5), PreconditionError);
}

// The cube-root and Markov forms agree exactly at the crossover resolution.
TEST(Bounds, CrossoverOfCubeRootAndMarkov) {
    for (double s2 : {1e-6, 1e-4, 1e-3}) {
        double l = fraction_bound_crossover(s2);
        double a = 3.0 / l * std::cbrt(s2 / 4.0);
        double b = s2 / (l * l);
        EXPECT_NEAR(a, b, 1e-12 * a);
        // Beyond the crossover the Markov form is the smaller of the two.
        double l2 = 2 * l;
        EXPECT_LT(s2 / (l2 * l2), 3.0 / l2 * std::cbrt(s2 / 4.0));
    }
}

TEST(Bounds, MonotoneInVarianceAndResolution) {
    double prev = 0;
    for (double s2 = 1e-8; s2 < 1e-2; s2 *= 3) {
        double f = bound_nonthermal_fraction(s2, 0.2).value;
        EXPECT_GE(f, prev);
        prev = f;
    }
    EXPECT_GT(bound_nonthermal_fraction(1e-4, 0.1).value, bound_nonthermal_fraction(1e-4, 0.2).value);
}

TEST(ThermalSubspace, KeepsAxesWithinResolution) {
    Rng rng(1);
    Projector pr = testing::random_basis_projector(24, 12, rng);
    Projector prho = testing::random_basis_projector(24, 6, rng);
    SubspaceGeometry g = halmos_decompose(pr, prho);
    for (double lambda : {0.05, 0.2, 0.9}) {
        ThermalSubspace th = thermal_subspace(g, lambda);
        EXPECT_EQ(th.projector.rank(), th.dim);
        // Every state of the subspace, not only the axes, is within lambda.
        for (int s = 0; s < 10 && th.dim > 0; ++s) {
            Vector c(th.dim);
            for (Index i = 0; i < th.dim; ++i) c[i] = rng.cnormal();
            Vector psi = th.basis * (c / c.norm());
            EXPECT_LE(std::abs(psi.dot(pr.matrix() * psi).real() - th.g2), lambda + 1e-12);
        }
        EXPECT_GE(static_cast<double>(th.dim) + 1e-9,
                  bound_thermal_dimension(angle_variance_from_angles(g), lambda, 6));
    }
    EXPECT_EQ(thermal_subspace(g, 0.9).dim, 6);
}

TEST(EmpiricalFraction, StrictInequalityAndValidation) {
    Matrix pr = Matrix::Zero(2, 2);
    pr(0, 0) = 1.0;
    Projector p = Projector::from_matrix(pr);
    Matrix basis = Matrix::Identity(2, 2);
    // Expectations 1 and 0 with G2 = 0.5: both deviate by exactly 0.5.
    EXPECT_EQ(empirical_nonthermal_fraction(p, basis, 0.5, 0.5), 0.0);
    EXPECT_EQ(empirical_nonthermal_fraction(p, basis, 0.5, 0.49), 1.0);
    EXPECT_THROW(empirical_nonthermal_fraction(p, Matrix::Ones(2, 2), 0.5, 0.1), PreconditionError);
    Projector half = Projector::from_matrix(pr);
    EXPECT_THROW(empirical_nonthermal_fraction(p, basis, 0.5, 0.1, &half), PreconditionError);
}

TEST(ForwardBound, HoldsOnPrincipalAndRandomBases) {
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        Index d = 32;
        Projector pr = testing::random_basis_projector(d, 1 + rep % 31, rng);
        Projector prho = testing::random_basis_projector(d, 1 + (5 * rep) % 31, rng);
        for (double lambda : {0.05, 0.1, 0.2, 0.5}) {
            Rng r2(derive_seed(31, rep));
            ThermalizationReport t = thermalization_report(pr, prho, lambda, 5, r2);
            EXPECT_LE(t.worst_basis_f, t.f_lambda_bound.value + 1e-9);
            for (double f : t.empirical_f) EXPECT_LE(f, t.f_lambda_bound.value + 1e-9);
            EXPECT_LE(t.dim_thermal_bound, static_cast<double>(t.dim_thermal_achieved) + 1e-9);
            EXPECT_LE(t.sigma2, t.converse_bound + 1e-12);
        }
    }
}

// Axes split evenly between range(P_R) and its complement: every cos^2 is 0 or
// 1, sigma2 = 1/4, and every axis is nonthermal for lambda < 1/2.
TEST(Witness, MaximalVarianceInstanceSaturates) {
    Rng rng(40);
    const Index d = 16;
    Matrix u = sample_haar_unitary(d, rng);
    Projector pr = Projector::from_basis(u.leftCols(8));
    Matrix b(d, 4);
    b << u.col(0), u.col(1), u.col(8), u.col(9);
    Projector prho = Projector::from_basis(b);
    CorrelatorMoments m = correlator_moments(pr, prho);
    EXPECT_NEAR(m.sigma2, 0.25, 1e-12);
    SubspaceGeometry g = halmos_decompose(pr, prho);
    for (double lambda : {0.1, 0.3, 0.49}) {
        double f = empirical_nonthermal_fraction(pr, worst_case_basis(g), m.g2, lambda);
        EXPECT_EQ(f, 1.0);
        EXPECT_GE(f, nonthermal_witness_bound(m.sigma2, lambda));
    }
}

TEST(CoreSizing, ReproducesTableRows) {
    CoreSizing a = core_sizing(0.1, 0.1, 2);
    EXPECT_NEAR(a.d_sigma_formula, 0.5 * 27e6, 1e-3);
    EXPECT_EQ(a.d_sigma_min, 13500000u);
    EXPECT_EQ(a.n_sigma, 24);
    EXPECT_NEAR(a.lambda, 0.05, 1e-15);
    EXPECT_NEAR(a.sigma2_threshold, 4.0 * std::pow(0.005 / 3.0, 3), 1e-22);
    CoreSizing b = core_sizing(0.2, 0.9, 2);
    EXPECT_NEAR(b.d_sigma_formula, 0.5 * std::pow(3.0 / 0.18, 3), 1e-9);
    EXPECT_EQ(b.n_sigma, 12);
    EXPECT_NEAR(b.sigma2_threshold, 1.08e-4, 1e-15);
    EXPECT_THROW(core_sizing(0.0, 0.1, 2), PreconditionError);
    EXPECT_THROW(core_sizing(0.1, 1.1, 2), PreconditionError);
    EXPECT_THROW(core_sizing(0.1, 0.1, 1), PreconditionError);
}

// At D_sigma = d_sigma_min the Haar-typical variance sits below the threshold.
TEST(CoreSizing, TypicalVarianceMeetsThreshold) {
    for (Index ds : {2, 4, 8})
        for (double lr : {0.1, 0.5, 3.0})
            for (double f : {0.1, 0.9}) {
                CoreSizing s = core_sizing(lr, f, ds);
                double typ = (1.0 - 1.0 / ds) / (static_cast<double>(s.d_sigma_min) * ds);
                EXPECT_LE(typ, s.sigma2_threshold * (1 + 1e-12));
                EXPECT_GE(std::uint64_t{1} << s.n_sigma, s.d_sigma_min);
            }
}

}  // namespace
}  // namespace otoc
