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
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "otoc/dynamics.hpp"
#include "otoc/predictor.hpp"
#include "otoc/thermalization.hpp"

namespace otoc {

struct ConfigError : Error {
    using Error::Error;
};

enum ExitCode : int { kExitPass = 0, kExitConfig = 1, kExitSoundness = 2, kExitStatistical = 3 };

struct ExperimentInfo {
    const char *name;
    const char *summary;
};

inline const std::vector<ExperimentInfo> &experiment_list() {
    static const std::vector<ExperimentInfo> list = {
        {"verify-theorem", "forward/converse fraction bounds on random projector pairs"},
        {"haar-typicality", "CUE moments of G2, G4 and sigma2 against the Weingarten values"},
        {"many-body-sweep", "G2(t), G4(t), sigma2(t) and commutator norm for a qubit register"},
        {"predictor-demo", "autocorrelator-to-correlator bounds for GUE and circuit dynamics"},
        {"sizing-table", "core size and sigma2 threshold for a grid of resolutions"},
        {"negative-demo", "Haar check of the fourth-order autocorrelator premise"},
    };
    return list;
}

// ---------------------------------------------------------------------------
// Configuration

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string &s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Flat `key = value` text; `#` starts a comment.
inline KeyValues parse_config_text(const std::string &text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string k = trim(line.substr(0, eq));
        std::string v = trim(line.substr(eq + 1));
        if (k.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (kv.count(k)) throw ConfigError("duplicate key '" + k + "'");
        kv[k] = v;
    }
    return kv;
}

inline KeyValues load_config_file(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 1;
    int n = 7;
    int n_s = 1;
    int n_sigma = 4;
    int instances = 50;
    int bases = 20;
    int samples = 500;
    int hamiltonians = 20;
    int windows = 10;
    std::vector<double> lambdas{0.05, 0.1, 0.2, 0.5};
    std::vector<double> lambda_rel{0.1, 0.2, 0.5, 0.9};
    std::vector<double> f_targets{0.1, 0.2, 0.5, 0.9};
    std::string source = "haar";
    int depth = 8;
    std::vector<double> times{0, 1, 2, 4, 8};
    std::string core_state = "zero";
    std::string observed_state = "zero";
    double kappa = 3.0;
    double t_obs = 2.0;
    double xi = std::numbers::pi / 2;
    int cs_qubits = 6;
    int cs_depth = 12;
    Index max_dim = kDefaultMaxDim;
    std::string out;
    std::string format = "csv";
};

namespace detail {
inline long long parse_int(const std::string &k, const std::string &v) {
    try {
        std::size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception &) {
        throw ConfigError("key '" + k + "': expected an integer, got '" + v + "'");
    }
}
inline std::uint64_t parse_u64(const std::string &k, const std::string &v) {
    try {
        std::size_t pos = 0;
        if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
        unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception &) {
        throw ConfigError("key '" + k + "': expected a nonnegative integer, got '" + v + "'");
    }
}
inline double parse_double(const std::string &k, const std::string &v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception &) {
        throw ConfigError("key '" + k + "': expected a finite number, got '" + v + "'");
    }
}
/// Comma list, or `start:stop:count` for an inclusive linear grid.
inline std::vector<double> parse_list(const std::string &k, const std::string &v) {
    std::vector<double> out;
    if (v.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(v);
        std::string p;
        while (std::getline(ss, p, ':')) parts.push_back(trim(p));
        if (parts.size() != 3) throw ConfigError("key '" + k + "': grid must be start:stop:count");
        double a = parse_double(k, parts[0]), b = parse_double(k, parts[1]);
        long long n = parse_int(k, parts[2]);
        if (n < 1) throw ConfigError("key '" + k + "': grid count must be >= 1");
        for (long long i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
        return out;
    }
    std::stringstream ss(v);
    std::string p;
    while (std::getline(ss, p, ',')) out.push_back(parse_double(k, trim(p)));
    if (out.empty()) throw ConfigError("key '" + k + "': empty list");
    return out;
}
inline int to_int(const std::string &k, const std::string &v) {
    long long x = parse_int(k, v);
    if (x < -1000000000LL || x > 1000000000LL) throw ConfigError("key '" + k + "': out of range");
    return static_cast<int>(x);
}
}  // namespace detail

inline ExperimentConfig config_from_keys(const KeyValues &kv) {
    ExperimentConfig c;
    for (const auto &[k, v] : kv) {
        using namespace detail;
        if (k == "experiment") c.experiment = v;
        else if (k == "seed") c.seed = parse_u64(k, v);
        else if (k == "N") c.n = to_int(k, v);
        else if (k == "N_S") c.n_s = to_int(k, v);
        else if (k == "N_sigma") c.n_sigma = to_int(k, v);
        else if (k == "instances") c.instances = to_int(k, v);
        else if (k == "bases") c.bases = to_int(k, v);
        else if (k == "samples") c.samples = to_int(k, v);
        else if (k == "hamiltonians") c.hamiltonians = to_int(k, v);
        else if (k == "windows") c.windows = to_int(k, v);
        else if (k == "lambda") c.lambdas = parse_list(k, v);
        else if (k == "lambda_rel") c.lambda_rel = parse_list(k, v);
        else if (k == "f") c.f_targets = parse_list(k, v);
        else if (k == "source") c.source = v;
        else if (k == "depth") c.depth = to_int(k, v);
        else if (k == "times") c.times = parse_list(k, v);
        else if (k == "core_state") c.core_state = v;
        else if (k == "observed_state") c.observed_state = v;
        else if (k == "kappa") c.kappa = parse_double(k, v);
        else if (k == "t_obs") c.t_obs = parse_double(k, v);
        else if (k == "xi") c.xi = parse_double(k, v);
        else if (k == "cs_qubits") c.cs_qubits = to_int(k, v);
        else if (k == "cs_depth") c.cs_depth = to_int(k, v);
        else if (k == "max_dim") c.max_dim = static_cast<Index>(parse_u64(k, v));
        else if (k == "out") c.out = v;
        else if (k == "format") c.format = v;
        else throw ConfigError("unknown key '" + k + "'");
    }
    return c;
}

/// Checks every constraint of the named experiment. Nothing is allocated
/// before this passes.
inline void validate_config(const ExperimentConfig &c) {
    auto fail = [](const std::string &m) { throw ConfigError(m); };
    bool known = false;
    for (const auto &e : experiment_list()) known |= c.experiment == e.name;
    if (c.experiment.empty()) fail("missing key 'experiment'");
    if (!known) fail("unknown experiment '" + c.experiment + "'");
    if (c.format != "csv" && c.format != "json") fail("format must be csv or json");
    if (c.max_dim < 2) fail("max_dim must be >= 2");
    auto dims = [&](bool s_le_sigma) {
        if (c.n < 1 || c.n > 30) fail("N must be in [1, 30]");
        if ((Index{1} << c.n) > c.max_dim) {
            fail("D = 2^" + std::to_string(c.n) + " exceeds max_dim " + std::to_string(c.max_dim));
        }
        if (c.n_s < 0 || c.n_sigma < 0) fail("N_S and N_sigma must be nonnegative");
        if (c.n_sigma > c.n) fail("need N_sigma <= N");
        if (c.n_s > c.n) fail("need N_S <= N");
        if (s_le_sigma && c.n_s > c.n_sigma) fail("need N_S <= N_sigma");
    };
    auto lambdas = [&] {
        for (double l : c.lambdas)
            if (!(l > 0 && l < 1)) fail("every lambda must lie in (0, 1)");
    };
    const std::string &e = c.experiment;
    if (e == "verify-theorem") {
        dims(false);
        lambdas();
        if (c.instances < 1) fail("instances must be >= 1");
        if (c.bases < 0) fail("bases must be >= 0");
    } else if (e == "haar-typicality") {
        dims(false);
        if (c.n < 1) fail("N must be >= 1");
        if (c.samples < 2) fail("samples must be >= 2");
        if (!(c.kappa > 0)) fail("kappa must be positive");
    } else if (e == "many-body-sweep") {
        dims(true);
        lambdas();
        if (c.source != "haar" && c.source != "gue" && c.source != "circuit") {
            fail("source must be haar, gue or circuit");
        }
        if (c.times.empty()) fail("times must not be empty");
        if (c.source == "circuit") {
            if (c.n < 2) fail("circuit source needs N >= 2");
            if (c.depth < 0) fail("depth must be >= 0");
            for (double t : c.times)
                if (t < 0 || t > c.depth) fail("circuit times must lie in [0, depth]");
        }
        for (const auto *s : {&c.core_state, &c.observed_state})
            if (*s != "zero" && *s != "random") fail("state must be zero or random");
    } else if (e == "predictor-demo") {
        dims(false);
        if (c.n > 9) fail("predictor-demo needs N <= 9");
        if (c.n_s < 1) fail("predictor-demo needs N_S >= 1");
        if (c.hamiltonians < 1 || c.windows < 1) fail("hamiltonians and windows must be >= 1");
        if (!(c.t_obs > 0)) fail("t_obs must be positive");
        if (!(c.xi > 0 && c.xi < std::numbers::pi)) fail("xi must lie in (0, pi)");
        if (c.cs_qubits != 0 && (c.cs_qubits < 2 || c.cs_qubits > 9)) fail("cs_qubits must be 0 or in [2, 9]");
        if (c.cs_qubits != 0 && c.cs_depth < 1) fail("cs_depth must be >= 1");
    } else if (e == "sizing-table") {
        if (c.n_s < 1 || c.n_s > 20) fail("sizing-table needs N_S in [1, 20]");
        for (double l : c.lambda_rel)
            if (!(l > 0)) fail("lambda_rel must be positive");
        for (double f : c.f_targets)
            if (!(f > 0 && f <= 1)) fail("f must lie in (0, 1]");
    } else if (e == "negative-demo") {
        dims(false);
        if (c.samples < 1) fail("samples must be >= 1");
    }
}

// ---------------------------------------------------------------------------
// Results

struct Record {
    std::string experiment;
    std::uint64_t seed = 0;
    std::optional<double> n, n_s, n_sigma, t, g2, g4, sigma2, lambda, bound, measured;
    std::optional<bool> pass;
};

enum class VerdictKind { soundness, statistical, report };

inline const char *kind_name(VerdictKind k) {
    switch (k) {
        case VerdictKind::soundness: return "soundness";
        case VerdictKind::statistical: return "statistical";
        default: return "report";
    }
}

struct Verdict {
    std::string check;
    std::string anchor;
    double lhs = 0;
    double rhs = 0;
    double slack = 0;
    bool pass = true;
    VerdictKind kind = VerdictKind::report;
    std::string note;
};

/// Folds many lhs <= rhs cases into one verdict row that keeps the tightest
/// case.
class InequalityTally {
  public:
    InequalityTally(std::string check, std::string anchor, VerdictKind kind, double tol = 1e-9)
        : check_(std::move(check)), anchor_(std::move(anchor)), kind_(kind), tol_(tol) {}

    bool add(double lhs, double rhs) {
        ++count_;
        double slack = rhs - lhs;
        bool ok = slack >= -tol_;
        if (!ok) ++violations_;
        if (count_ == 1 || slack < best_slack_) {
            best_slack_ = slack;
            lhs_ = lhs;
            rhs_ = rhs;
        }
        return ok;
    }
    int count() const { return count_; }
    int violations() const { return violations_; }

    Verdict verdict(const std::string &extra = "") const {
        Verdict v;
        v.check = check_;
        v.anchor = anchor_;
        v.lhs = lhs_;
        v.rhs = rhs_;
        v.slack = best_slack_;
        v.pass = violations_ == 0;
        v.kind = kind_;
        v.note = std::to_string(count_) + " cases, " + std::to_string(violations_) + " violations";
        if (!extra.empty()) v.note += "; " + extra;
        return v;
    }

  private:
    std::string check_, anchor_;
    VerdictKind kind_;
    double tol_;
    int count_ = 0;
    int violations_ = 0;
    double best_slack_ = 0, lhs_ = 0, rhs_ = 0;
};

struct RunResult {
    std::vector<Record> records;
    std::vector<Verdict> verdicts;

    int exit_code() const {
        bool stat = false;
        for (const auto &v : verdicts) {
            if (v.pass) continue;
            if (v.kind == VerdictKind::soundness) return kExitSoundness;
            if (v.kind == VerdictKind::statistical) stat = true;
        }
        return stat ? kExitStatistical : kExitPass;
    }
};

namespace detail {

inline Record base_record(const ExperimentConfig &c) {
    Record r;
    r.experiment = c.experiment;
    r.seed = c.seed;
    r.n = c.n;
    r.n_s = c.n_s;
    r.n_sigma = c.n_sigma;
    return r;
}

inline Vector random_state(Index dim, Rng &rng) {
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) v[i] = rng.cnormal();
    return v / v.norm();
}

inline Projector random_projector(Index d, Index rank, Rng &rng) {
    return Projector::from_basis(sample_haar_isometry(d, rank, rng));
}

// -- verify-theorem ---------------------------------------------------------

inline RunResult run_verify_theorem(const ExperimentConfig &c) {
    RunResult out;
    const Index d = Index{1} << c.n;
    const Index d_r = d >> c.n_s, d_rho = d >> c.n_sigma;
    InequalityTally agree("angle/trace agreement", "G^(2n) = (1/D_rho) Tr[(P_R P_rho)^n] = (1/D_rho) sum cos^(2n) theta_k",
                          VerdictKind::soundness);
    InequalityTally chain("correlator chain", "G2 >= G4 >= (G2)^2", VerdictKind::soundness, 1e-12);
    InequalityTally fwd("nonthermal fraction bound", "f_lambda <= (3/lambda)(sigma^2/4)^(1/3)",
                        VerdictKind::soundness);
    InequalityTally dim("thermal dimension bound", "dim H_th(lambda) >= D_rho (1 - sigma^2/lambda^2)",
                        VerdictKind::soundness);
    InequalityTally exp_("thermal subspace expectation", "|<psi|P_R|psi> - G2| <= lambda on H_th(lambda)",
                         VerdictKind::soundness);
    InequalityTally conv("converse variance bound", "sigma^2 <= lambda^2 + (1 - lambda^2) f_max",
                         VerdictKind::soundness);
    InequalityTally wit("nonthermal witness", "f_lambda(principal axes) >= (sigma^2 - lambda^2)/(1 - lambda^2)",
                        VerdictKind::soundness);

    for (int i = 0; i < c.instances; ++i) {
        Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(i)));
        Projector p_r = random_projector(d, d_r, rng);
        Projector p_rho = random_projector(d, d_rho, rng);
        CorrelatorMoments m = correlator_moments(p_r, p_rho);
        SubspaceGeometry g = halmos_decompose(p_r, p_rho);
        for (int n = 1; n <= 4; ++n) {
            agree.add(std::abs(correlator_trace(p_r, p_rho, n) - correlator_from_angles(g, n)), 1e-9);
        }
        chain.add(m.g4, m.g2);
        chain.add(m.g2 * m.g2, m.g4);
        std::vector<Matrix> bases{worst_case_basis(g)};
        for (int b = 0; b < c.bases; ++b) bases.push_back(random_basis(g.axes_w, rng));
        for (double lambda : c.lambdas) {
            BoundValue fb = bound_nonthermal_fraction(m.sigma2, lambda);
            double f_max = 0;
            double f_axes = 0;
            for (std::size_t b = 0; b < bases.size(); ++b) {
                double f = empirical_nonthermal_fraction(p_r, bases[b], m.g2, lambda);
                if (b == 0) f_axes = f;
                f_max = std::max(f_max, f);
                fwd.add(f, fb.value);
            }
            ThermalSubspace th = thermal_subspace(g, lambda);
            dim.add(bound_thermal_dimension(m.sigma2, lambda, d_rho), static_cast<double>(th.dim));
            if (th.dim > 0) {
                for (int s = 0; s < 5; ++s) {
                    Vector coef = random_state(th.dim, rng);
                    Vector psi = th.basis * coef;
                    double e = psi.dot(p_r.matrix() * psi).real();
                    exp_.add(std::abs(e - m.g2), lambda);
                }
            }
            double cb = converse_variance_bound(lambda, f_max);
            conv.add(m.sigma2, cb);
            wit.add(nonthermal_witness_bound(m.sigma2, lambda), f_axes);
            Record r = base_record(c);
            r.g2 = m.g2;
            r.g4 = m.g4;
            r.sigma2 = m.sigma2;
            r.lambda = lambda;
            r.bound = fb.value;
            r.measured = f_max;
            r.pass = f_max <= fb.value + 1e-9;
            out.records.push_back(r);
        }
    }
    for (auto *t : {&agree, &chain, &fwd, &dim, &exp_, &conv, &wit}) out.verdicts.push_back(t->verdict());
    return out;
}

// -- haar-typicality --------------------------------------------------------

inline RunResult run_haar_typicality(const ExperimentConfig &c) {
    RunResult out;
    const Index d = Index{1} << c.n;
    TypicalityReport t =
        typicality_experiment(d, Index{1} << c.n_s, Index{1} << c.n_sigma, c.samples, c.seed, c.kappa);
    const HaarPrediction &p = t.prediction;
    InequalityTally chain("correlator chain", "G2 >= G4 >= (G2)^2", VerdictKind::soundness, 1e-12);
    for (int i = 0; i < t.n_samples; ++i) {
        chain.add(t.g4[i], t.g2[i]);
        chain.add(t.g2[i] * t.g2[i], t.g4[i]);
        Record r = base_record(c);
        r.g2 = t.g2[i];
        r.g4 = t.g4[i];
        r.sigma2 = t.sigma2[i];
        out.records.push_back(r);
    }
    out.verdicts.push_back(chain.verdict());
    auto stat = [&](std::string check, std::string anchor, double lhs, double rhs, std::string note) {
        Verdict v{std::move(check), std::move(anchor), lhs, rhs, rhs - lhs, lhs <= rhs,
                  VerdictKind::statistical, std::move(note)};
        out.verdicts.push_back(v);
    };
    double se2 = std::sqrt(p.var_g2 / t.n_samples);
    stat("mean G2", "<G2> = 1/D_S", std::abs(t.g2_stats.mean - p.mean_g2), 4 * se2,
         "4 standard errors from var(G2) = (D_sigma-1)(D_S-1)/((D^2-1) D_S^2)");
    double ratio = p.var_g2 > 0 ? t.g2_stats.var / p.var_g2 : 1.0;
    stat("variance G2", "var(G2) = (D_sigma-1)(D_S-1)/((D^2-1) D_S^2)",
         p.var_g2 > 0 ? std::abs(std::log2(ratio)) : 0.0, 1.0, "within a factor 2");
    stat("mean G4", "<G4> = (D^2/(D^2-1))(1/D_S^2 + 1/(D_S D_sigma) - 1/(D_S^2 D_sigma) - 1/(D^2 D_S))",
         std::abs(t.g4_stats.mean - p.mean_g4), 4 * std::max(t.g4_stats.se, 1e-15), "4 standard errors");
    stat("mean sigma2", "sigma^2 -> (1/(D_sigma D_S))(1 - 1/D_S)", std::abs(t.sigma2_stats.mean - p.sigma2_typ),
         0.2 * p.sigma2_typ + 1e-15, "within 20%");
    stat("G2 tail", "|G2 - <G2>| <= kappa 2 sqrt(2 D_sigma)/D", t.tail_fraction_g2, 0.01, "violator fraction");
    stat("G4 tail", "|G4 - <G4>| <= kappa 4 sqrt(2 D_sigma)/D", t.tail_fraction_g4, 0.01, "violator fraction");
    return out;
}

// -- many-body-sweep ----------------------------------------------------------

inline UnitarySource make_source(const ExperimentConfig &c) {
    const Index d = Index{1} << c.n;
    std::uint64_t s = derive_seed(c.seed, 0xC0FFEEull);
    if (c.source == "haar") return HaarCue{s, d};
    if (c.source == "gue") {
        Rng rng(s);
        return Hamiltonian(sample_gue(d, rng));
    }
    return Circuit{c.n, c.depth, s};
}

inline RunResult run_many_body_sweep(const ExperimentConfig &c) {
    RunResult out;
    ManyBodySetup setup;
    setup.n_total = c.n;
    setup.n_core = c.n_sigma;
    setup.n_observed = c.n_s;
    setup.max_dim = c.max_dim;
    Rng srng(derive_seed(c.seed, 0x57A7Eull));
    setup.core_state = c.core_state == "random" ? random_state(setup.d_sigma(), srng) : basis_state(setup.d_sigma(), 0);
    setup.observed_state =
        c.observed_state == "random" ? random_state(setup.d_s(), srng) : basis_state(setup.d_s(), 0);
    setup.validate();
    UnitarySource src = make_source(c);
    CorrelatorSeries s = correlator_series(setup, src, c.times, SeriesOptions{true});
    Projector p_r = tensor_embed(setup, Factor::observable);
    Matrix b_psi = tensor_embed(setup, Factor::core).range_basis();

    InequalityTally chain("correlator chain", "G2(t) >= G4(t) >= (G2(t))^2", VerdictKind::soundness, 1e-12);
    InequalityTally comm("commutator identity", "G2 - G4 = (1/(2 D_eta)) ||[P_R, P_psi(t)]||_F^2",
                         VerdictKind::soundness);
    InequalityTally angles("angle/trace sigma2", "sigma^2 from traces = variance of cos^2 theta_k",
                           VerdictKind::soundness);
    InequalityTally fwd("nonthermal fraction bound", "f_lambda <= 3 eps^(2/3) / (4^(1/3) lambda), eps^2 = sigma^2(t)",
                        VerdictKind::soundness);
    InequalityTally zero("commuting start", "[P_R, P_psi(0)] = 0 when S is inside sigma", VerdictKind::soundness);
    const HaarPrediction hp = haar_prediction(setup.d(), setup.d_s(), setup.d_sigma());
    InequalityTally sat("Haar saturation", "|sigma^2(t) - (1/(D_sigma D_S))(1 - 1/D_S)| <= 10 * 8 sqrt(2 D_sigma)/D",
                        VerdictKind::statistical, 0.0);

    bool nested = true;
    {
        auto cs = setup.core_layout();
        for (int q : setup.observed_layout()) nested &= std::find(cs.begin(), cs.end(), q) != cs.end();
    }
    for (std::size_t i = 0; i < c.times.size(); ++i) {
        const double t = c.times[i];
        chain.add(s.g4[i], s.g2[i]);
        chain.add(s.g2[i] * s.g2[i], s.g4[i]);
        comm.add(std::abs(s.g2[i] - s.g4[i] - s.commutator_norm[i]), 1e-9);
        angles.add(std::abs(s.sigma2[i] - s.angle_sigma2[i]), 1e-9);
        if (t == 0.0 && nested) zero.add(s.commutator_norm[i], 1e-9);
        if (c.source == "haar" && t != 0.0) sat.add(std::abs(s.sigma2[i] - hp.sigma2_typ), 10 * hp.fluctuation_scale(4));
        Projector p_t = Projector::from_basis(apply_evolution(src, t, b_psi));
        SubspaceGeometry g = halmos_decompose(p_r, p_t);
        for (double lambda : c.lambdas) {
            double eps = std::sqrt(s.sigma2[i]);
            double corollary = std::min(1.0, 3.0 * std::cbrt(eps * eps) / (std::cbrt(4.0) * lambda));
            BoundValue fb = bound_nonthermal_fraction(s.sigma2[i], lambda);
            double f = empirical_nonthermal_fraction(p_r, worst_case_basis(g), s.g2[i], lambda);
            fwd.add(f, std::min(fb.value, corollary));
            Record r = base_record(c);
            r.t = t;
            r.g2 = s.g2[i];
            r.g4 = s.g4[i];
            r.sigma2 = s.sigma2[i];
            r.lambda = lambda;
            r.bound = fb.value;
            r.measured = f;
            r.pass = f <= fb.value + 1e-9;
            out.records.push_back(r);
        }
    }
    for (auto *t : {&chain, &comm, &angles, &fwd}) out.verdicts.push_back(t->verdict());
    if (zero.count() > 0) out.verdicts.push_back(zero.verdict());
    if (sat.count() > 0) out.verdicts.push_back(sat.verdict());
    return out;
}

// -- predictor-demo -------------------------------------------------------------

inline RunResult run_predictor_demo(const ExperimentConfig &c) {
    RunResult out;
    const Index d = Index{1} << c.n;
    const Index d_s = Index{1} << c.n_s, d_sigma = Index{1} << c.n_sigma;
    const Index d_r = d / d_s, d_rho = d / d_sigma;
    InequalityTally thm("autocorrelator-to-correlator bound",
                        "|int w <B,U_t A>| <= (sqrt(int w_+ <A,U_t A> / W) + w0 sqrt(<A,A>)) sqrt(<B,B>)",
                        VerdictKind::soundness);
    InequalityTally syn("normalized synopsis bound", "T_obs/(xi T) + (xi/|sin xi|) sqrt(autocorrelator average)",
                        VerdictKind::soundness);
    InequalityTally cp("completely positive average", "int w_+ <A, U_t A> >= 0", VerdictKind::soundness);
    InequalityTally win_w("tent window floor", "min_{|E|<=dE} w_+~(E) = sinc^2 xi", VerdictKind::soundness);
    InequalityTally win_0("box window tail", "max_{|E|>=dE} |w~(E)| <= T_obs/(xi T)", VerdictKind::soundness);
    const Matrix id = Matrix::Identity(d, d);
    for (int h = 0; h < c.hamiltonians; ++h) {
        Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(h)));
        Projector p_r = random_projector(d, d_r, rng);
        Projector p_rho = random_projector(d, d_rho, rng);
        Hamiltonian ham(sample_gue(d, rng));
        Matrix a = p_r.matrix() - id / static_cast<double>(d_s);
        Matrix b = static_cast<double>(d_sigma) * p_rho.matrix() - id;
        double norm_a = hs_inner(a, a).real(), norm_b = hs_inner(b, b).real();
        SpectralOperators so = spectral_operators(ham, a, b);
        WeightingFunction tent = WeightingFunction::tent(c.t_obs);
        double ac = spectral_autocorrelator_average(so, tent);
        cp.add(-ac, 0.0);
        for (int j = 0; j < c.windows; ++j) {
            double t0 = -20.0 + 40.0 * rng.uniform();
            double T = c.t_obs / c.xi * (1.05 + 19.0 * rng.uniform());
            WindowPair pair = canonical_window_pair(t0, T, c.t_obs, c.xi);
            double lhs = std::abs(spectral_window_average(so, pair.w));
            double rhs = theorem_bound(ac, norm_a, norm_b, pair);
            bool ok = thm.add(lhs, rhs);
            double nl = lhs / std::sqrt(norm_a * norm_b);
            syn.add(nl, synopsis_bound(ac / norm_a, c.t_obs, T, c.xi));
            if (h == 0) {
                WindowConstants wc = scan_window_constants(pair, 200.0 / T + 40.0 / c.t_obs, 4000);
                win_w.add(std::abs(wc.min_plus_inside - pair.W), 1e-9);
                win_0.add(wc.max_abs_outside, pair.w0);
            }
            Record r = base_record(c);
            r.t = t0;
            r.bound = rhs;
            r.measured = lhs;
            r.pass = ok;
            out.records.push_back(r);
        }
    }
    for (auto *t : {&thm, &syn, &cp, &win_w, &win_0}) out.verdicts.push_back(t->verdict());

    if (c.cs_qubits > 0) {
        // Non-autonomous brickwork dynamics: time is the layer count.
        const int nq = c.cs_qubits;
        const Index dc = Index{1} << nq;
        Circuit circ{nq, c.cs_depth, derive_seed(c.seed, 0xC1Cull)};
        Rng rng(derive_seed(c.seed, 0xC1Dull));
        Projector p_r = embed_state_projector(nq, {0}, basis_state(2, 0));
        Projector p_rho = random_projector(dc, dc / 4, rng);
        const Matrix idc = Matrix::Identity(dc, dc);
        Matrix a = p_r.matrix() - idc / 2.0;
        Matrix b = 4.0 * p_rho.matrix() - idc;
        std::vector<Matrix> at;
        Matrix u = idc;
        for (int l = 0; l <= c.cs_depth; ++l) {
            if (l > 0) apply_circuit_layer(u, circ, l - 1);
            at.push_back(u * a * u.adjoint());
        }
        InequalityTally cs("Cauchy-Schwarz bound", "|int w <B,U_t A>| <= sqrt(int int w w' <U_t' A, U_t A>) sqrt(<B,B>)",
                           VerdictKind::soundness);
        double norm_b = hs_inner(b, b).real();
        for (int j = 0; j < c.windows; ++j) {
            int lo = static_cast<int>(rng.next() % static_cast<std::uint64_t>(c.cs_depth));
            int hi = lo + 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(c.cs_depth - lo));
            std::vector<double> times, weights;
            for (int l = lo; l <= hi; ++l) {
                times.push_back(l);
                weights.push_back(0.5 + rng.uniform());
            }
            WeightingFunction w = WeightingFunction::tabulated(times, weights);
            std::vector<double> q = quadrature_weights(w, times);
            const Index nt = static_cast<Index>(times.size());
            Matrix k(nt, nt);
            Complex lhs(0.0);
            for (Index x = 0; x < nt; ++x) {
                lhs += q[x] * hs_inner(b, at[lo + x]);
                for (Index y = 0; y < nt; ++y) k(x, y) = hs_inner(at[lo + x], at[lo + y]);
            }
            double rhs = cauchy_schwarz_bound(k, q, norm_b);
            bool ok = cs.add(std::abs(lhs), rhs);
            Record r = base_record(c);
            r.n = nq;
            r.n_s = 1;
            r.n_sigma = 2;
            r.t = lo;
            r.bound = rhs;
            r.measured = std::abs(lhs);
            r.pass = ok;
            out.records.push_back(r);
        }
        out.verdicts.push_back(cs.verdict("brickwork circuit on " + std::to_string(nq) + " qubits"));
    }
    return out;
}

// -- sizing-table ---------------------------------------------------------------

inline RunResult run_sizing_table(const ExperimentConfig &c) {
    RunResult out;
    const Index d_s = Index{1} << c.n_s;
    InequalityTally cons("typical variance at minimum core", "(1/(D_sigma D_S))(1 - 1/D_S) <= 4 (f lambda/3)^3",
                         VerdictKind::soundness, 1e-18);
    for (double lr : c.lambda_rel) {
        for (double f : c.f_targets) {
            CoreSizing s = core_sizing(lr, f, d_s);
            const double ds = static_cast<double>(d_s);
            double typ = (1.0 / (static_cast<double>(s.d_sigma_min) * ds)) * (1.0 - 1.0 / ds);
            cons.add(typ, s.sigma2_threshold * (1 + 1e-12));
            Record r;
            r.experiment = c.experiment;
            r.seed = c.seed;
            r.n_s = c.n_s;
            r.n_sigma = s.n_sigma;
            r.sigma2 = typ;
            r.lambda = lr;
            r.bound = s.sigma2_threshold;
            r.measured = f;
            out.records.push_back(r);
        }
    }
    out.verdicts.push_back(cons.verdict("D_sigma >= (D_S (D_S-1)/4)(3/(lambda_rel f))^3, lambda = lambda_rel/D_S"));
    return out;
}

// -- negative-demo --------------------------------------------------------------

inline RunResult run_negative_demo(const ExperimentConfig &c) {
    RunResult out;
    const Index d = Index{1} << c.n;
    NegativeDemoReport r = fourth_order_negative_demo(d, Index{1} << c.n_s, Index{1} << c.n_sigma, c.seed, c.samples);
    Record rec = base_record(c);
    rec.bound = r.threshold;
    rec.measured = r.measured_scale;
    rec.pass = r.premise_satisfied;
    out.records.push_back(rec);
    Verdict v;
    v.check = "fourth-order premise";
    v.anchor = "|[G_rho rho(t)]^2 - 1/D_sigma^2| << 1/D_R^2";
    v.lhs = r.measured_scale;
    v.rhs = r.threshold;
    v.slack = r.threshold - r.measured_scale;
    v.pass = r.premise_satisfied;
    v.kind = VerdictKind::report;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s; ratio %.6g; estimate D_sigma/D^2 = %.6g", r.verdict.c_str(), r.ratio,
                  r.estimate_scale);
    v.note = buf;
    out.verdicts.push_back(v);
    return out;
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig &c) {
    validate_config(c);
    const std::string &e = c.experiment;
    if (e == "verify-theorem") return detail::run_verify_theorem(c);
    if (e == "haar-typicality") return detail::run_haar_typicality(c);
    if (e == "many-body-sweep") return detail::run_many_body_sweep(c);
    if (e == "predictor-demo") return detail::run_predictor_demo(c);
    if (e == "sizing-table") return detail::run_sizing_table(c);
    return detail::run_negative_demo(c);
}

// ---------------------------------------------------------------------------
// Emission

inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string csv_escape(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string o = "\"";
    for (char ch : s) {
        if (ch == '"') o += '"';
        o += ch;
    }
    return o + "\"";
}

inline void write_records_csv(std::ostream &os, const std::vector<Record> &recs) {
    os << "experiment,seed,N,N_S,N_sigma,t,g2,g4,sigma2,lambda,bound,measured,pass\n";
    auto opt = [](const std::optional<double> &x) { return x ? format_number(*x) : std::string(); };
    for (const auto &r : recs) {
        os << csv_escape(r.experiment) << ',' << r.seed << ',' << opt(r.n) << ',' << opt(r.n_s) << ','
           << opt(r.n_sigma) << ',' << opt(r.t) << ',' << opt(r.g2) << ',' << opt(r.g4) << ',' << opt(r.sigma2)
           << ',' << opt(r.lambda) << ',' << opt(r.bound) << ',' << opt(r.measured) << ','
           << (r.pass ? (*r.pass ? "true" : "false") : "") << '\n';
    }
}

inline void write_verdicts_csv(std::ostream &os, const std::vector<Verdict> &vs) {
    os << "check,anchor,lhs,rhs,slack,pass,kind,note\n";
    for (const auto &v : vs) {
        os << csv_escape(v.check) << ',' << csv_escape(v.anchor) << ',' << format_number(v.lhs) << ','
           << format_number(v.rhs) << ',' << format_number(v.slack) << ',' << (v.pass ? "true" : "false") << ','
           << kind_name(v.kind) << ',' << csv_escape(v.note) << '\n';
    }
}

inline nlohmann::ordered_json to_json(const RunResult &res) {
    using J = nlohmann::ordered_json;
    J recs = J::array();
    auto opt = [](const std::optional<double> &x) { return x ? J(*x) : J(nullptr); };
    for (const auto &r : res.records) {
        J j;
        j["experiment"] = r.experiment;
        j["seed"] = r.seed;
        j["N"] = opt(r.n);
        j["N_S"] = opt(r.n_s);
        j["N_sigma"] = opt(r.n_sigma);
        j["t"] = opt(r.t);
        j["g2"] = opt(r.g2);
        j["g4"] = opt(r.g4);
        j["sigma2"] = opt(r.sigma2);
        j["lambda"] = opt(r.lambda);
        j["bound"] = opt(r.bound);
        j["measured"] = opt(r.measured);
        j["pass"] = r.pass ? J(*r.pass) : J(nullptr);
        recs.push_back(std::move(j));
    }
    J verd = J::array();
    for (const auto &v : res.verdicts) {
        verd.push_back(J{{"check", v.check},
                         {"anchor", v.anchor},
                         {"lhs", v.lhs},
                         {"rhs", v.rhs},
                         {"slack", v.slack},
                         {"pass", v.pass},
                         {"kind", kind_name(v.kind)},
                         {"note", v.note}});
    }
    return J{{"records", recs}, {"verdicts", verd}};
}

/// Writes the results. CSV goes to `out` with verdicts in `out.verdicts.csv`,
/// or to `console` (records, blank line, verdicts) when out is empty. JSON is
/// one document either way.
inline void emit_results(const RunResult &res, const ExperimentConfig &c, std::ostream &console) {
    auto open = [](const std::string &p) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw ConfigError("cannot open output file '" + p + "'");
        return f;
    };
    if (c.format == "json") {
        std::string doc = to_json(res).dump(2) + "\n";
        if (c.out.empty()) {
            console << doc;
        } else {
            auto f = open(c.out);
            f << doc;
        }
        return;
    }
    if (c.out.empty()) {
        write_records_csv(console, res.records);
        console << '\n';
        write_verdicts_csv(console, res.verdicts);
        return;
    }
    auto f = open(c.out);
    write_records_csv(f, res.records);
    auto g = open(c.out + ".verdicts.csv");
    write_verdicts_csv(g, res.verdicts);
}

}  // namespace otoc
