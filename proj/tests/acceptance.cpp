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


// Acceptance checks, one line per criterion. Usage: acceptance [criterion...]
// With no arguments every criterion runs. Exit status is nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "otoc/experiment.hpp"

namespace {

using namespace otoc;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Projector random_projector(Index d, Index k, Rng &rng) {
    return Projector::from_basis(sample_haar_isometry(d, k, rng));
}

// 1. Angle/trace equivalence on >= 200 random pairs, D in {8,16,32,64}.
Outcome criterion_1() {
    constexpr double kTol = 1e-9;
    constexpr double kMaxSeconds = 60;
    auto t0 = std::chrono::steady_clock::now();
    const Index dims[] = {8, 16, 32, 64};
    double worst = 0;
    int pairs = 0;
    for (int i = 0; i < 240; ++i) {
        Rng rng(derive_seed(101, i));
        Index d = dims[i % 4];
        Index kr = 1 + static_cast<Index>(rng.next() % static_cast<std::uint64_t>(d));
        Index kp = 1 + static_cast<Index>(rng.next() % static_cast<std::uint64_t>(d));
        Projector pr = random_projector(d, kr, rng), prho = random_projector(d, kp, rng);
        SubspaceGeometry g = halmos_decompose(pr, prho);
        for (int n = 1; n <= 4; ++n) {
            worst = std::max(worst, std::abs(correlator_trace(pr, prho, n) - correlator_from_angles(g, n)));
        }
        ++pairs;
    }
    double secs = seconds_since(t0);
    return {worst <= kTol && secs <= kMaxSeconds,
            std::to_string(pairs) + " pairs, max |trace - angles| = " + fmt("%.3g", worst) + " (tol 1e-9), " +
                fmt("%.1f", secs) + " s (limit 60)"};
}

// 2. Forward bound soundness: >= 100 instances x (principal axes + 20 Haar
// bases) x lambda in {0.05, 0.1, 0.2, 0.5}, D <= 256.
Outcome criterion_2() {
    constexpr double kSlack = 1e-9;
    constexpr double kMaxSeconds = 300;
    auto t0 = std::chrono::steady_clock::now();
    const Index dims[] = {16, 32, 64, 128, 256};
    const double lambdas[] = {0.05, 0.1, 0.2, 0.5};
    int checks = 0, frac_viol = 0, dim_viol = 0;
    double min_slack = 1e300;
    for (int i = 0; i < 100; ++i) {
        Rng rng(derive_seed(202, i));
        Index d = dims[i % 5];
        Index kr = 1 + static_cast<Index>(rng.next() % static_cast<std::uint64_t>(d - 1));
        Index kp = 1 + static_cast<Index>(rng.next() % static_cast<std::uint64_t>(std::min<Index>(d - 1, 64)));
        Projector pr = random_projector(d, kr, rng), prho = random_projector(d, kp, rng);
        CorrelatorMoments m = correlator_moments(pr, prho);
        SubspaceGeometry g = halmos_decompose(pr, prho);
        std::vector<Matrix> bases{worst_case_basis(g)};
        for (int b = 0; b < 20; ++b) bases.push_back(random_basis(g.axes_w, rng));
        for (double lambda : lambdas) {
            double fb = bound_nonthermal_fraction(m.sigma2, lambda).value;
            for (const Matrix &b : bases) {
                double f = empirical_nonthermal_fraction(pr, b, m.g2, lambda, &prho);
                ++checks;
                frac_viol += f > fb + kSlack ? 1 : 0;
                min_slack = std::min(min_slack, fb - f);
            }
            double dim_b = bound_thermal_dimension(m.sigma2, lambda, kp);
            Index achieved = thermal_subspace(g, lambda).dim;
            ++checks;
            dim_viol += static_cast<double>(achieved) + kSlack < dim_b ? 1 : 0;
        }
    }
    double secs = seconds_since(t0);
    return {frac_viol == 0 && dim_viol == 0 && secs <= kMaxSeconds,
            std::to_string(checks) + " checks, fraction violations " + std::to_string(frac_viol) +
                ", dimension violations " + std::to_string(dim_viol) + ", min slack " + fmt("%.3g", min_slack) +
                ", " + fmt("%.1f", secs) + " s (limit 300)"};
}

// 3. Witness: principal axes achieve f >= (gamma^2 - lambda^2)/(1 - lambda^2)
// on maximal-variance constructions and Haar instances with sigma^2 >= gamma^2.
Outcome criterion_3() {
    const double lambdas[] = {0.05, 0.1, 0.2, 0.3, 0.45};
    int checks = 0, viol = 0, nontrivial = 0;
    // Axes split between range(P_R) and its complement: sigma^2 = G2 (1 - G2).
    for (int i = 0; i < 40; ++i) {
        Rng rng(derive_seed(303, i));
        const Index d = 32;
        Matrix u = sample_haar_unitary(d, rng);
        Index kr = 4 + static_cast<Index>(rng.next() % 24);
        Index in = 1 + static_cast<Index>(rng.next() % std::min<Index>(kr, 8));
        Index out = 1 + static_cast<Index>(rng.next() % std::min<Index>(d - kr, 8));
        Projector pr = Projector::from_basis(u.leftCols(kr));
        Matrix b(d, in + out);
        b << u.leftCols(in), u.middleCols(kr, out);
        Projector prho = Projector::from_basis(b);
        CorrelatorMoments m = correlator_moments(pr, prho);
        SubspaceGeometry g = halmos_decompose(pr, prho);
        for (double lambda : lambdas) {
            double w = nonthermal_witness_bound(m.sigma2, lambda);
            double f = empirical_nonthermal_fraction(pr, worst_case_basis(g), m.g2, lambda);
            ++checks;
            nontrivial += w > 0 ? 1 : 0;
            viol += f + 1e-12 < w ? 1 : 0;
        }
    }
    for (int i = 0; i < 60; ++i) {
        Rng rng(derive_seed(304, i));
        const Index d = 16 << (i % 3);
        Projector pr = random_projector(d, d / 2, rng);
        Projector prho = random_projector(d, 1 + static_cast<Index>(rng.next() % 6), rng);
        CorrelatorMoments m = correlator_moments(pr, prho);
        SubspaceGeometry g = halmos_decompose(pr, prho);
        for (double gamma2 : {m.sigma2, 0.5 * m.sigma2}) {
            for (double lambda : lambdas) {
                double w = nonthermal_witness_bound(gamma2, lambda);
                double f = empirical_nonthermal_fraction(pr, worst_case_basis(g), m.g2, lambda);
                ++checks;
                nontrivial += w > 0 ? 1 : 0;
                viol += f + 1e-12 < w ? 1 : 0;
            }
        }
    }
    return {viol == 0 && nontrivial > 0, std::to_string(checks) + " checks (" + std::to_string(nontrivial) +
                                             " with a nonzero witness), violations " + std::to_string(viol)};
}

// 4. CUE moments at D=256, D_S=2, D_sigma=16 with 500 samples.
Outcome criterion_4() {
    constexpr double kSe = 4.0;
    constexpr double kRel = 0.2;
    constexpr double kMaxSeconds = 600;
    auto t0 = std::chrono::steady_clock::now();
    TypicalityReport r = typicality_experiment(256, 2, 16, 500, 404);
    const HaarPrediction &p = r.prediction;
    double var_ref = 15.0 / ((256.0 * 256.0 - 1.0) * 4.0);
    double se2 = std::sqrt(var_ref / 500.0);
    bool ok_var = std::abs(p.var_g2 - var_ref) <= 1e-18;
    bool ok2 = std::abs(r.g2_stats.mean - 0.5) <= kSe * se2;
    bool ok4 = std::abs(r.g4_stats.mean - p.mean_g4) <= kSe * r.g4_stats.se;
    bool okv = std::abs(r.sigma2_stats.mean - 1.0 / 64.0) <= kRel / 64.0;
    double secs = seconds_since(t0);
    return {ok_var && ok2 && ok4 && okv && secs <= kMaxSeconds,
            "G2 mean " + fmt("%.6f", r.g2_stats.mean) + " (|dev|/SE " +
                fmt("%.2f", std::abs(r.g2_stats.mean - 0.5) / se2) + "), G4 mean " + fmt("%.6f", r.g4_stats.mean) +
                " vs " + fmt("%.6f", p.mean_g4) + " (|dev|/SE " +
                fmt("%.2f", std::abs(r.g4_stats.mean - p.mean_g4) / r.g4_stats.se) + "), sigma2 mean " +
                fmt("%.5f", r.sigma2_stats.mean) + " vs 1/64 (rel " +
                fmt("%.3f", std::abs(r.sigma2_stats.mean * 64 - 1)) + "), " + fmt("%.1f", secs) + " s"};
}

// 5. Tail envelope at D=1024 over 300 samples.
Outcome criterion_5() {
    constexpr double kKappa = 3.0;
    constexpr double kMaxFraction = 0.01;
    TypicalityReport r = typicality_experiment(1024, 2, 16, 300, 505, kKappa);
    bool ok = r.tail_fraction_g2 <= kMaxFraction && r.tail_fraction_g4 <= kMaxFraction;
    return {ok, "D=1024, D_S=2, D_sigma=16: tail fractions G2 " + fmt("%.4f", r.tail_fraction_g2) + ", G4 " +
                    fmt("%.4f", r.tail_fraction_g4) + " (limit 0.01)"};
}

// 6. Sizing table rows as stated.
Outcome criterion_6() {
    CoreSizing a = core_sizing(0.1, 0.1, 2);
    // Second row: absolute lambda 0.1 at D_S = 2 is lambda_rel = 0.2.
    CoreSizing b = core_sizing(0.2, 0.9, 2);
    bool n_a = a.n_sigma == 24;
    bool n_b = b.n_sigma == 12;
    // Stated threshold values: about 1.5e-7 and 1.08e-4, pinned to 10%.
    bool th_a = std::abs(a.sigma2_threshold - 1.5e-7) <= 0.1 * 1.5e-7;
    bool th_b = std::abs(b.sigma2_threshold - 1.08e-4) <= 0.1 * 1.08e-4;
    bool ord_a = std::floor(std::log10(a.sigma2_threshold)) == -7;
    bool ord_b = std::floor(std::log10(b.sigma2_threshold)) == -4;
    auto pf = [](bool x) { return x ? "ok" : "FAIL"; };
    std::string d = "row (0.1, 0.1): N_sigma " + std::to_string(a.n_sigma) + " [" + pf(n_a) + "], threshold " +
                    fmt("%.4g", a.sigma2_threshold) + " vs 1.5e-7 [" + pf(th_a) + "], order [" + pf(ord_a) +
                    "]; row (0.1 abs, 0.9): N_sigma " + std::to_string(b.n_sigma) + " [" + pf(n_b) +
                    "], threshold " + fmt("%.4g", b.sigma2_threshold) + " vs 1.08e-4 [" + pf(th_b) + "], order [" +
                    pf(ord_b) + "]";
    return {n_a && n_b && th_a && th_b && ord_a && ord_b, d};
}

// 7. Autocorrelator-to-correlator bound: 20 GUE Hamiltonians at D=128, 10
// windows each, plus canonical window constants.
Outcome criterion_7() {
    constexpr double kSlack = 1e-9;
    constexpr double kConstTol = 1e-9;
    const Index d = 128;
    const Matrix id = Matrix::Identity(d, d);
    int checks = 0, viol = 0, const_viol = 0;
    double worst_const = 0, min_ratio_slack = 1e300;
    for (int h = 0; h < 20; ++h) {
        Rng rng(derive_seed(707, h));
        Projector pr = random_projector(d, 64, rng), prho = random_projector(d, 32, rng);
        Hamiltonian ham(sample_gue(d, rng));
        Matrix a = pr.matrix() - id / 2.0, b = 4.0 * prho.matrix() - id;
        double na = hs_inner(a, a).real(), nb = hs_inner(b, b).real();
        SpectralOperators s = spectral_operators(ham, a, b);
        for (int j = 0; j < 10; ++j) {
            double t_obs = 0.5 + 4.0 * rng.uniform();
            double xi = 0.3 + 2.5 * rng.uniform();
            double T = t_obs / xi * (1.05 + 30.0 * rng.uniform());
            WindowPair p = canonical_window_pair(-30 + 60 * rng.uniform(), T, t_obs, xi);
            double ac = spectral_autocorrelator_average(s, p.w_plus);
            double lhs = std::abs(spectral_window_average(s, p.w));
            double rhs = theorem_bound(ac, na, nb, p);
            double syn = synopsis_bound(ac / na, t_obs, T, xi);
            checks += 3;
            viol += ac < -kSlack ? 1 : 0;
            viol += lhs > rhs + kSlack ? 1 : 0;
            viol += lhs / std::sqrt(na * nb) > syn + kSlack ? 1 : 0;
            min_ratio_slack = std::min(min_ratio_slack, rhs - lhs);
            if (h == 0) {
                WindowConstants c = scan_window_constants(p, 400.0 / T + 60.0 / t_obs, 20000);
                double dw = std::abs(c.min_plus_inside - std::pow(std::sin(xi) / xi, 2));
                double dw0 = std::abs(p.w0 - t_obs / (xi * T));
                worst_const = std::max({worst_const, dw, dw0});
                const_viol += (dw > kConstTol || dw0 > kConstTol || c.max_abs_outside > p.w0 + kConstTol) ? 1 : 0;
            }
        }
    }
    return {viol == 0 && const_viol == 0,
            std::to_string(checks) + " inequality checks, violations " + std::to_string(viol) + ", min slack " +
                fmt("%.3g", min_ratio_slack) + "; window constants max dev " + fmt("%.2g", worst_const) +
                " (tol 1e-9), " + std::to_string(const_viol) + " constant failures"};
}

// 8. Chain and commutator identity on every computed series, including the
// commuting start.
Outcome criterion_8() {
    constexpr double kTol = 1e-9;
    int points = 0, viol = 0, zero_checked = 0;
    double worst = 0;
    struct Case {
        int n, n_sigma, n_s;
        int src;
    };
    for (Case c : {Case{6, 3, 1, 0}, Case{7, 4, 2, 1}, Case{8, 4, 1, 2}, Case{6, 6, 1, 1}, Case{9, 5, 2, 2}}) {
        ManyBodySetup s;
        s.n_total = c.n;
        s.n_core = c.n_sigma;
        s.n_observed = c.n_s;
        s.core_state = basis_state(s.d_sigma(), 0);
        s.observed_state = basis_state(s.d_s(), 0);
        Rng rng(derive_seed(808, c.n));
        UnitarySource src = c.src == 0 ? UnitarySource(HaarCue{rng.next(), s.d()})
                            : c.src == 1 ? UnitarySource(Hamiltonian(sample_gue(s.d(), rng)))
                                         : UnitarySource(Circuit{c.n, 8, rng.next()});
        std::vector<double> times{0, 1, 2, 3, 4, 6, 8};
        CorrelatorSeries cs = correlator_series(s, src, times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            ++points;
            double e = std::abs(cs.g2[i] - cs.g4[i] - cs.commutator_norm[i]);
            worst = std::max(worst, e);
            viol += (cs.g4[i] > cs.g2[i] + kTol || cs.g2[i] * cs.g2[i] > cs.g4[i] + kTol || e > kTol) ? 1 : 0;
        }
        ++zero_checked;
        viol += (std::abs(cs.g2[0] - cs.g4[0]) > kTol || std::abs(cs.commutator_norm[0]) > kTol) ? 1 : 0;
    }
    return {viol == 0, std::to_string(points) + " series points over 5 setups (" + std::to_string(zero_checked) +
                           " commuting starts), max identity residual " + fmt("%.3g", worst) +
                           " (tol 1e-9), violations " + std::to_string(viol)};
}

// 9. Swap representation on 50 random pairs, D <= 128.
Outcome criterion_9() {
    constexpr double kTol = 1e-10;
    double worst = 0;
    for (int i = 0; i < 50; ++i) {
        Rng rng(derive_seed(909, i));
        Index d = 4 * (1 + i % 32);
        if (d > kSwapMaxDim) d = kSwapMaxDim;
        Projector pr = random_projector(d, 1 + static_cast<Index>(rng.next() % d), rng);
        Projector prho = random_projector(d, 1 + static_cast<Index>(rng.next() % d), rng);
        worst = std::max(worst, swap_representation_check(pr, prho).diff);
    }
    return {worst <= kTol, "50 pairs, D in [4, 128], max |direct - doubled| = " + fmt("%.3g", worst) + " (tol 1e-10)"};
}

// 10. Negative demo at D=256, D_sigma=16.
Outcome criterion_10() {
    NegativeDemoReport r = fourth_order_negative_demo(256, 2, 16, 1010, 200);
    bool ok = r.measured_scale > r.threshold && r.verdict == "premise unsatisfiable";
    return {ok, "measured scale " + fmt("%.4g", r.measured_scale) + " vs threshold 1/D_R^2 = " +
                    fmt("%.4g", r.threshold) + ", ratio " + fmt("%.3g", r.ratio) + ", verdict \"" + r.verdict + "\""};
}

struct Criterion {
    int id;
    const char *name;
    std::function<Outcome()> run;
};

const std::vector<Criterion> &criteria() {
    static const std::vector<Criterion> list = {
        {1, "angle/trace oracle equivalence", criterion_1},
        {2, "forward bound soundness", criterion_2},
        {3, "nonthermal witness on maximal and Haar instances", criterion_3},
        {4, "Haar typicality moments", criterion_4},
        {5, "concentration envelope", criterion_5},
        {6, "sizing numbers", criterion_6},
        {7, "autocorrelator-to-correlator bound", criterion_7},
        {8, "pointwise chain and commutator identity", criterion_8},
        {9, "swap representation identity", criterion_9},
        {10, "fourth-order negative demo", criterion_10},
    };
    return list;
}

}  // namespace

int main(int argc, char **argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
    int failed = 0;
    for (const auto &c : criteria()) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] criterion %d: %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
