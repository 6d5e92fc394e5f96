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

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstring>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace otoc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct PreconditionError : Error {
    using Error::Error;
};
struct NumericalError : Error {
    using Error::Error;
};

inline constexpr Index kDefaultMaxDim = Index{1} << 14;

namespace tol {
inline double herm(Index d) { return 1e-10 * static_cast<double>(d); }
inline double idem(Index d) { return 1e-10 * static_cast<double>(d); }
inline double unit(Index d) { return 1e-10 * static_cast<double>(d); }
inline constexpr double norm = 1e-12;
}  // namespace tol

inline bool all_finite(const Matrix &m) {
    return m.allFinite();
}

/// Dense square complex operator. Entries are checked finite on construction.
class Operator {
  public:
    Operator() = default;
    explicit Operator(Matrix m) : m_(std::move(m)) {
        if (m_.rows() < 1 || m_.rows() != m_.cols()) {
            throw DimensionError("operator must be square with dim >= 1");
        }
        if (!all_finite(m_)) {
            throw NumericalError("operator has non-finite entries");
        }
    }
    Index dim() const { return m_.rows(); }
    const Matrix &matrix() const { return m_; }

  private:
    Matrix m_;
};

inline double unitarity_defect(const Matrix &u) {
    return (u.adjoint() * u - Matrix::Identity(u.cols(), u.cols())).norm();
}

inline double orthonormality_defect(const Matrix &b) {
    if (b.cols() == 0) return 0.0;
    return (b.adjoint() * b - Matrix::Identity(b.cols(), b.cols())).norm();
}

/// Orthogonal projector. Either built from a matrix (invariants checked) or
/// from an orthonormal basis of its range, which is then kept alongside.
class Projector {
  public:
    static Projector from_matrix(Matrix m) {
        const Index d = m.rows();
        if (d < 1 || m.cols() != d) throw DimensionError("projector must be square with dim >= 1");
        if (!all_finite(m)) throw NumericalError("projector has non-finite entries");
        double herm = (m - m.adjoint()).norm();
        if (herm > tol::herm(d)) {
            throw NumericalError("projector not Hermitian: defect " + std::to_string(herm));
        }
        double idem = (m * m - m).norm();
        if (idem > tol::idem(d)) {
            throw NumericalError("projector not idempotent: defect " + std::to_string(idem));
        }
        Complex tr = m.trace();
        double r = std::round(tr.real());
        if (std::abs(tr.imag()) > tol::herm(d) || std::abs(tr.real() - r) > tol::idem(d)) {
            throw NumericalError("projector trace not an integer");
        }
        return Projector(std::move(m), std::nullopt, static_cast<Index>(r));
    }

    static Projector from_basis(Matrix basis) {
        const Index d = basis.rows();
        if (d < 1) throw DimensionError("basis must have at least one row");
        if (basis.cols() > d) throw DimensionError("basis has more columns than rows");
        double defect = orthonormality_defect(basis);
        if (defect > tol::unit(d)) {
            throw NumericalError("basis not orthonormal: defect " + std::to_string(defect));
        }
        Matrix m = basis * basis.adjoint();
        Index r = basis.cols();
        return Projector(std::move(m), std::move(basis), r);
    }

    Index dim() const { return m_.rows(); }
    Index rank() const { return rank_; }
    const Matrix &matrix() const { return m_; }
    bool has_basis() const { return basis_.has_value(); }

    /// Orthonormal columns spanning the range. Uses the stored basis when
    /// present, otherwise the eigenvectors with eigenvalue above 1/2.
    Matrix range_basis() const {
        if (basis_) return *basis_;
        Eigen::SelfAdjointEigenSolver<Matrix> es(m_);
        if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
        const RealVector &ev = es.eigenvalues();
        Index k = 0;
        for (Index i = 0; i < ev.size(); ++i) k += ev[i] > 0.5 ? 1 : 0;
        if (k != rank_) throw NumericalError("range basis extraction is rank deficient");
        // Eigenvalues are ascending, so the retained block is the tail.
        return es.eigenvectors().rightCols(k);
    }

    /// Pairs a basis with a matrix the caller has built to equal basis*basis^dagger
    /// (used for structured embeddings). Only orthonormality is re-checked.
    static Projector from_structured(Matrix m, Matrix basis) {
        if (m.rows() != basis.rows() || m.cols() != m.rows()) throw DimensionError("shape mismatch");
        if (orthonormality_defect(basis) > tol::unit(basis.rows())) {
            throw NumericalError("basis not orthonormal");
        }
        Index r = basis.cols();
        return Projector(std::move(m), std::move(basis), r);
    }

  private:
    Projector(Matrix m, std::optional<Matrix> basis, Index rank)
        : m_(std::move(m)), basis_(std::move(basis)), rank_(rank) {}

    Matrix m_;
    std::optional<Matrix> basis_;
    Index rank_ = 0;
};

// ---------------------------------------------------------------------------
// Random numbers

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double normal() { return nd_(eng_); }
    double uniform() { return ud_(eng_); }
    std::uint64_t next() { return eng_(); }
    std::mt19937_64 &engine() { return eng_; }

    /// Standard complex Gaussian, E|z|^2 = 1.
    Complex cnormal() {
        double x = normal();
        double y = normal();
        return Complex(x, y) * M_SQRT1_2;
    }

  private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> nd_;
    std::uniform_real_distribution<double> ud_;
};

inline Matrix ginibre(Index rows, Index cols, Rng &rng) {
    Matrix g(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) g(i, j) = rng.cnormal();
    }
    return g;
}

namespace detail {
inline Matrix haar_columns(Index d, Index k, Rng &rng) {
    Matrix g = ginibre(d, k, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(d, k);
    const Matrix &r = qr.matrixQR();
    for (Index j = 0; j < k; ++j) {
        Complex rjj = r(j, j);
        double a = std::abs(rjj);
        Complex ph = a > 0 ? rjj / a : Complex(1.0);
        q.col(j) *= ph;
    }
    return q;
}
}  // namespace detail

/// Haar-distributed unitary on U(D): Ginibre matrix, QR, and the phases of
/// diag(R) folded back into Q.
inline Matrix sample_haar_unitary(Index d, Rng &rng) {
    if (d < 1) throw DimensionError("unitary dimension must be >= 1");
    return detail::haar_columns(d, d, rng);
}

inline Matrix sample_haar_unitary(Index d, std::uint64_t seed) {
    Rng rng(seed);
    return sample_haar_unitary(d, rng);
}

/// First k columns of a Haar unitary. With the same generator state this is
/// exactly the leading block of sample_haar_unitary(d), since column j of Q
/// depends only on the first j+1 Ginibre columns.
inline Matrix sample_haar_isometry(Index d, Index k, Rng &rng) {
    if (d < 1 || k < 0 || k > d) throw DimensionError("isometry shape invalid");
    if (k == 0) return Matrix(d, 0);
    return detail::haar_columns(d, k, rng);
}

/// GUE matrix normalized so the spectrum fills [-2, 2] as D grows.
inline Matrix sample_gue(Index d, Rng &rng) {
    if (d < 1) throw DimensionError("GUE dimension must be >= 1");
    Matrix g = ginibre(d, d, rng);
    return (g + g.adjoint()) / std::sqrt(2.0 * static_cast<double>(d));
}

// ---------------------------------------------------------------------------
// Many-body layout

/// Qubit register of N sites. Basis index bit (N-1-q) holds qubit q, so qubit 0
/// is the most significant.
struct ManyBodySetup {
    int n_total = 1;
    int n_core = 1;
    int n_observed = 1;
    Vector core_state;      // in C^{D_sigma}
    Vector observed_state;  // in C^{D_S}
    std::vector<int> core_sites;      // empty: qubits 0..N_sigma-1
    std::vector<int> observed_sites;  // empty: qubits 0..N_S-1
    Index max_dim = kDefaultMaxDim;

    Index d() const { return Index{1} << n_total; }
    Index d_sigma() const { return Index{1} << n_core; }
    Index d_s() const { return Index{1} << n_observed; }
    Index d_eta() const { return d() / d_sigma(); }
    Index d_r() const { return d() / d_s(); }

    std::vector<int> core_layout() const {
        if (!core_sites.empty()) return core_sites;
        std::vector<int> s(n_core);
        for (int i = 0; i < n_core; ++i) s[i] = i;
        return s;
    }
    std::vector<int> observed_layout() const {
        if (!observed_sites.empty()) return observed_sites;
        std::vector<int> s(n_observed);
        for (int i = 0; i < n_observed; ++i) s[i] = i;
        return s;
    }

    void validate() const {
        if (n_total < 1 || n_total > 62) throw DimensionError("N must be in [1, 62]");
        if (n_observed < 0 || n_observed > n_core || n_core > n_total) {
            throw PreconditionError("need 0 <= N_S <= N_sigma <= N");
        }
        if (d() > max_dim) {
            throw DimensionError("D = " + std::to_string(d()) + " exceeds maximum " +
                                 std::to_string(max_dim));
        }
        check_sites(core_layout(), n_core, "core");
        check_sites(observed_layout(), n_observed, "observed");
        check_state(core_state, d_sigma(), "core");
        check_state(observed_state, d_s(), "observed");
    }

  private:
    void check_sites(const std::vector<int> &s, int n, const char *what) const {
        if (static_cast<int>(s.size()) != n) {
            throw PreconditionError(std::string(what) + " site list has wrong length");
        }
        std::vector<bool> seen(n_total, false);
        for (int q : s) {
            if (q < 0 || q >= n_total || seen[q]) {
                throw PreconditionError(std::string(what) + " site list invalid");
            }
            seen[q] = true;
        }
    }
    static void check_state(const Vector &v, Index dim, const char *what) {
        if (v.size() != dim) throw DimensionError(std::string(what) + " state has wrong size");
        if (!v.allFinite() || std::abs(v.norm() - 1.0) > tol::norm) {
            throw PreconditionError(std::string(what) + " state is not unit norm");
        }
    }
};

enum class Factor { observable, core };

inline Vector basis_state(Index dim, Index i) {
    Vector v = Vector::Zero(dim);
    v[i] = 1.0;
    return v;
}

/// Orthonormal basis of |phi><phi| (x) 1 on the given sites. Column e carries
/// the environment configuration e, enumerated over the complementary qubits
/// in increasing qubit order.
inline Matrix embed_state_basis(int n_total, const std::vector<int> &sites, const Vector &phi) {
    const int k = static_cast<int>(sites.size());
    const Index d = Index{1} << n_total;
    const Index de = Index{1} << (n_total - k);
    std::vector<int> env;
    std::vector<bool> in(n_total, false);
    for (int q : sites) in[q] = true;
    for (int q = 0; q < n_total; ++q)
        if (!in[q]) env.push_back(q);
    Matrix b = Matrix::Zero(d, de);
    for (Index i = 0; i < d; ++i) {
        Index loc = 0;
        for (int q : sites) loc = (loc << 1) | ((i >> (n_total - 1 - q)) & 1);
        Index e = 0;
        for (int q : env) e = (e << 1) | ((i >> (n_total - 1 - q)) & 1);
        b(i, e) = phi[loc];
    }
    return b;
}

/// Embedded projector |phi><phi| (x) 1 and its basis. The dense matrix is
/// filled directly from the block structure.
inline Projector embed_state_projector(int n_total, const std::vector<int> &sites,
                                       const Vector &phi) {
    Matrix b = embed_state_basis(n_total, sites, phi);
    const Index d = b.rows();
    Matrix m = Matrix::Zero(d, d);
    for (Index e = 0; e < b.cols(); ++e) {
        std::vector<Index> nz;
        for (Index i = 0; i < d; ++i)
            if (b(i, e) != Complex(0.0)) nz.push_back(i);
        for (Index i : nz)
            for (Index j : nz) m(i, j) += b(i, e) * std::conj(b(j, e));
    }
    return Projector::from_structured(std::move(m), std::move(b));
}

inline Projector tensor_embed(const ManyBodySetup &setup, Factor which) {
    setup.validate();
    if (which == Factor::observable) {
        return embed_state_projector(setup.n_total, setup.observed_layout(), setup.observed_state);
    }
    return embed_state_projector(setup.n_total, setup.core_layout(), setup.core_state);
}

// ---------------------------------------------------------------------------
// Unitary sources

/// Independent CUE draw at every distinct t (t = 0 is the identity).
struct HaarCue {
    std::uint64_t seed = 0;
    Index dim = 1;
};

/// Autonomous evolution exp(-iHt). The eigendecomposition is computed once on
/// first use and shared by copies.
class Hamiltonian {
  public:
    explicit Hamiltonian(Matrix h) : st_(std::make_shared<State>()) {
        if (h.rows() < 1 || h.rows() != h.cols()) throw DimensionError("Hamiltonian must be square");
        if (!h.allFinite()) throw NumericalError("Hamiltonian has non-finite entries");
        if ((h - h.adjoint()).norm() > tol::herm(h.rows())) {
            throw PreconditionError("Hamiltonian is not Hermitian");
        }
        st_->h = std::move(h);
    }
    Index dim() const { return st_->h.rows(); }
    const Matrix &matrix() const { return st_->h; }
    const RealVector &energies() const {
        init();
        return st_->e;
    }
    const Matrix &eigenvectors() const {
        init();
        return st_->v;
    }

  private:
    struct State {
        Matrix h;
        RealVector e;
        Matrix v;
        std::once_flag once;
    };
    void init() const {
        std::call_once(st_->once, [s = st_.get()] {
            Eigen::SelfAdjointEigenSolver<Matrix> es(s->h);
            if (es.info() != Eigen::Success) throw NumericalError("Hamiltonian diagonalization failed");
            s->e = es.eigenvalues();
            s->v = es.eigenvectors();
        });
    }
    std::shared_ptr<State> st_;
};

/// Brickwork of Haar two-qubit gates. Time counts completed layers; layer l
/// acts on pairs (q, q+1) with q = l mod 2, l mod 2 + 2, ...
struct Circuit {
    int n_qubits = 2;
    int depth = 1;
    std::uint64_t seed = 0;
};

using UnitarySource = std::variant<HaarCue, Hamiltonian, Circuit>;

inline Index source_dim(const UnitarySource &src) {
    struct V {
        Index operator()(const HaarCue &h) const { return h.dim; }
        Index operator()(const Hamiltonian &h) const { return h.dim(); }
        Index operator()(const Circuit &c) const { return Index{1} << c.n_qubits; }
    };
    return std::visit(V{}, src);
}

/// Left-multiplies the rows of m by a 4x4 gate on qubits (q, q+1); q is the
/// more significant of the pair.
inline void apply_two_qubit(Matrix &m, const Eigen::Matrix4cd &g, int q, int n) {
    const Index d = Index{1} << n;
    if (m.rows() != d) throw DimensionError("gate register mismatch");
    const Index hi = Index{1} << (n - 1 - q);
    const Index lo = Index{1} << (n - 2 - q);
    Eigen::Matrix<Complex, 4, Eigen::Dynamic> blk(4, m.cols());
    for (Index i = 0; i < d; ++i) {
        if (i & (hi | lo)) continue;
        const Index rows[4] = {i, i | lo, i | hi, i | hi | lo};
        for (int r = 0; r < 4; ++r) blk.row(r) = m.row(rows[r]);
        blk = g * blk;
        for (int r = 0; r < 4; ++r) m.row(rows[r]) = blk.row(r);
    }
}

inline std::vector<Eigen::Matrix4cd> circuit_layer(const Circuit &c, int layer) {
    Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(layer)));
    std::vector<Eigen::Matrix4cd> gates;
    for (int q = layer % 2; q + 1 < c.n_qubits; q += 2) {
        gates.emplace_back(sample_haar_unitary(4, rng));
    }
    return gates;
}

inline void apply_circuit_layer(Matrix &m, const Circuit &c, int layer) {
    auto gates = circuit_layer(c, layer);
    std::size_t gi = 0;
    for (int q = layer % 2; q + 1 < c.n_qubits; q += 2) apply_two_qubit(m, gates[gi++], q, c.n_qubits);
}

inline int circuit_layers(const Circuit &c, double t) {
    if (!std::isfinite(t) || t < 0 || t > c.depth) {
        throw PreconditionError("circuit time must lie in [0, depth]");
    }
    return static_cast<int>(std::floor(t + 1e-12));
}

namespace detail {
inline std::uint64_t time_bits(double t) {
    std::uint64_t b;
    static_assert(sizeof(b) == sizeof(t));
    std::memcpy(&b, &t, sizeof(b));
    return b;
}
}  // namespace detail

/// Applies U(t) to the columns of m, without forming U(t) where avoidable.
inline Matrix apply_evolution(const UnitarySource &src, double t, const Matrix &m) {
    if (!std::isfinite(t)) throw PreconditionError("time must be finite");
    if (m.rows() != source_dim(src)) throw DimensionError("source dimension mismatch");
    struct V {
        double t;
        const Matrix &m;
        Matrix operator()(const HaarCue &h) const {
            if (t == 0.0) return m;
            return sample_haar_unitary(h.dim, derive_seed(h.seed, detail::time_bits(t))) * m;
        }
        Matrix operator()(const Hamiltonian &h) const {
            const Matrix &v = h.eigenvectors();
            const RealVector &e = h.energies();
            Vector ph(e.size());
            for (Index i = 0; i < e.size(); ++i) ph[i] = std::exp(Complex(0.0, -e[i] * t));
            Matrix x = v.adjoint() * m;
            return v * (ph.asDiagonal() * x);
        }
        Matrix operator()(const Circuit &c) const {
            int layers = circuit_layers(c, t);
            Matrix out = m;
            for (int l = 0; l < layers; ++l) apply_circuit_layer(out, c, l);
            return out;
        }
    };
    return std::visit(V{t, m}, src);
}

inline Operator evolve(const UnitarySource &src, double t) {
    const Index d = source_dim(src);
    return Operator(apply_evolution(src, t, Matrix::Identity(d, d)));
}

/// U P U^dagger. Violated projector invariants in the result are reported as
/// NumericalError rather than passed on.
inline Projector conjugate(const Projector &p, const Operator &u) {
    if (p.dim() != u.dim()) throw DimensionError("conjugate: dimension mismatch");
    try {
        if (p.has_basis()) return Projector::from_basis(u.matrix() * p.range_basis());
        Matrix m = u.matrix() * p.matrix() * u.matrix().adjoint();
        return Projector::from_matrix(std::move(m));
    } catch (const NumericalError &e) {
        throw NumericalError(std::string("conjugate: numerical degradation: ") + e.what());
    }
}

}  // namespace otoc
