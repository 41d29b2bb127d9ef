// Copyright 2026 The QUEST Authors
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
#include <complex>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "quest/observable.hpp"
#include "quest/statevector.hpp"

namespace quest {

/// Dense d x d complex matrix, row-major, expected to be Hermitian.
struct HermitianMatrix {
    size_t dim = 0;
    std::vector<complex_t> entries;

    HermitianMatrix() = default;
    explicit HermitianMatrix(size_t d) : dim(d), entries(d * d, complex_t{0, 0}) {
    }

    complex_t &operator()(size_t r, size_t c) {
        return entries[r * dim + c];
    }
    const complex_t &operator()(size_t r, size_t c) const {
        return entries[r * dim + c];
    }

    /// Largest entry magnitude.
    double max_abs() const {
        double m = 0;
        for (const auto &v : entries) {
            m = std::max(m, std::abs(v));
        }
        return m;
    }

    /// Frobenius norm.
    double frobenius_norm() const {
        double s = 0;
        for (const auto &v : entries) {
            s += std::norm(v);
        }
        return std::sqrt(s);
    }

    bool is_hermitian(double tol = 1e-12) const {
        double scale = std::max(1.0, max_abs());
        for (size_t r = 0; r < dim; r++) {
            for (size_t c = r; c < dim; c++) {
                if (std::abs((*this)(r, c) - std::conj((*this)(c, r))) > tol * scale) {
                    return false;
                }
            }
        }
        return true;
    }

    bool is_real() const {
        for (const auto &v : entries) {
            if (v.imag() != 0.0) {
                return false;
            }
        }
        return true;
    }
};

/// Eigenvalues ascending; eigenvector k stored contiguously at vectors[k*dim ...].
struct EigenDecomposition {
    size_t dim = 0;
    std::vector<double> values;
    std::vector<complex_t> vectors;

    std::span<const complex_t> vector(size_t k) const {
        return std::span<const complex_t>(vectors).subspan(k * dim, dim);
    }
};

constexpr size_t kDenseMaxQubits = 12;

/// sum_a c_a matrix(P_a) under the Hermitian phase convention.
inline HermitianMatrix matrix_of(const Observable &o) {
    if (o.num_qubits() > kDenseMaxQubits) {
        throw std::invalid_argument("matrix_of: too many qubits for a dense matrix");
    }
    size_t d = size_t{1} << o.num_qubits();
    HermitianMatrix m(d);
    for (const auto &t : o.terms()) {
        complex_t ph = detail::i_pow(t.pauli.num_y()) * t.coeff;
        for (size_t b = 0; b < d; b++) {
            m(b ^ t.pauli.xs, b) += (std::popcount(b & t.pauli.zs) & 1) ? -ph : ph;
        }
    }
    return m;
}

namespace detail {

inline double conj_of(double v) {
    return v;
}
inline complex_t conj_of(const complex_t &v) {
    return std::conj(v);
}
inline double real_of(double v) {
    return v;
}
inline double real_of(const complex_t &v) {
    return v.real();
}

/// Householder reduction of a Hermitian (or real symmetric) matrix to tridiagonal form.
///
/// On return `diag` and `sub` hold the real diagonal and the (possibly complex) subdiagonal
/// sub[k] = T(k+1, k). If `q` is non-null it receives the unitary Q with A = Q T Q^H.
template <typename T>
void tridiagonalize(std::vector<T> &a, size_t n, std::vector<double> &diag, std::vector<T> &sub, std::vector<T> *q) {
    if (q) {
        q->assign(n * n, T(0));
        for (size_t i = 0; i < n; i++) {
            (*q)[i * n + i] = T(1);
        }
    }
    std::vector<T> v(n), p(n), w(n);
    for (size_t k = 0; k + 2 < n; k++) {
        size_t m = n - k - 1;
        double tail = 0;
        for (size_t j = 1; j < m; j++) {
            tail += std::norm(a[(k + 1 + j) * n + k]);
        }
        T x0 = a[(k + 1) * n + k];
        if (tail == 0.0) {
            continue;
        }
        double xnorm = std::sqrt(tail + std::norm(x0));
        T phase = std::abs(x0) > 0 ? x0 / std::abs(x0) : T(1);
        for (size_t j = 0; j < m; j++) {
            v[j] = a[(k + 1 + j) * n + k];
        }
        v[0] += phase * xnorm;
        double vnorm2 = 0;
        for (size_t j = 0; j < m; j++) {
            vnorm2 += std::norm(v[j]);
        }
        double beta = 2.0 / vnorm2;

        // Trailing block B <- H B H with H = I - beta v v^H.
        for (size_t r = 0; r < m; r++) {
            const T *row = &a[(k + 1 + r) * n + (k + 1)];
            T s(0);
            for (size_t c = 0; c < m; c++) {
                s += row[c] * v[c];
            }
            p[r] = beta * s;
        }
        T vhp(0);
        for (size_t j = 0; j < m; j++) {
            vhp += conj_of(v[j]) * p[j];
        }
        double kfac = 0.5 * beta * real_of(vhp);
        for (size_t j = 0; j < m; j++) {
            w[j] = p[j] - kfac * v[j];
        }
        for (size_t r = 0; r < m; r++) {
            T *row = &a[(k + 1 + r) * n + (k + 1)];
            T vr = v[r];
            T wr = w[r];
            for (size_t c = 0; c < m; c++) {
                row[c] -= vr * conj_of(w[c]) + wr * conj_of(v[c]);
            }
        }
        T alpha = -phase * xnorm;
        a[(k + 1) * n + k] = alpha;
        a[k * n + (k + 1)] = conj_of(alpha);
        for (size_t j = 1; j < m; j++) {
            a[(k + 1 + j) * n + k] = T(0);
            a[k * n + (k + 1 + j)] = T(0);
        }
        if (q) {
            // Q <- Q H on columns k+1..n-1.
            for (size_t r = 0; r < n; r++) {
                T *row = &(*q)[r * n + (k + 1)];
                T s(0);
                for (size_t c = 0; c < m; c++) {
                    s += row[c] * v[c];
                }
                s *= beta;
                for (size_t c = 0; c < m; c++) {
                    row[c] -= s * conj_of(v[c]);
                }
            }
        }
    }
    diag.resize(n);
    sub.assign(n, T(0));
    for (size_t i = 0; i < n; i++) {
        diag[i] = real_of(a[i * n + i]);
        if (i + 1 < n) {
            sub[i] = a[(i + 1) * n + i];
        }
    }
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix. `e[i]` couples i and i+1.
/// If `zt` is non-null its rows are rotated alongside (row k ends as eigenvector k).
inline void tridiagonal_ql(std::vector<double> &d, std::vector<double> &e, std::vector<double> *zt) {
    const int n = static_cast<int>(d.size());
    if (n == 0) {
        return;
    }
    e.resize(n);
    e[n - 1] = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; l++) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; m++) {
                double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) {
                    break;
                }
            }
            if (m != l) {
                if (iter++ == 100) {
                    throw std::runtime_error("tridiagonal_ql: no convergence");
                }
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0;
                double c = 1.0;
                double p = 0.0;
                int i;
                for (i = m - 1; i >= l; i--) {
                    double f = s * e[i];
                    double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    if (zt) {
                        double *zi = &(*zt)[static_cast<size_t>(i) * n];
                        double *zi1 = &(*zt)[static_cast<size_t>(i + 1) * n];
                        for (int k = 0; k < n; k++) {
                            double fz = zi1[k];
                            zi1[k] = s * zi[k] + c * fz;
                            zi[k] = c * zi[k] - s * fz;
                        }
                    }
                }
                if (r == 0.0 && i >= l) {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

template <typename T>
EigenDecomposition eigh_impl(std::vector<T> a, size_t n, bool want_vectors) {
    std::vector<double> diag;
    std::vector<T> sub;
    std::vector<T> q;
    tridiagonalize<T>(a, n, diag, sub, want_vectors ? &q : nullptr);

    // Diagonal unitary D making the subdiagonal real and non-negative.
    std::vector<T> phase(n, T(1));
    std::vector<double> e(n, 0.0);
    for (size_t i = 0; i + 1 < n; i++) {
        double mag = std::abs(sub[i]);
        e[i] = mag;
        phase[i + 1] = mag > 0 ? phase[i] * (sub[i] / mag) : phase[i];
    }

    std::vector<double> zt;
    if (want_vectors) {
        zt.assign(n * n, 0.0);
        for (size_t i = 0; i < n; i++) {
            zt[i * n + i] = 1.0;
        }
    }
    tridiagonal_ql(diag, e, want_vectors ? &zt : nullptr);

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) { return diag[x] < diag[y]; });

    EigenDecomposition out;
    out.dim = n;
    out.values.resize(n);
    for (size_t k = 0; k < n; k++) {
        out.values[k] = diag[order[k]];
    }
    if (!want_vectors) {
        return out;
    }
    // V = Q D Z; column k of V is sum_j (Q D)[:, j] Z[j, k].
    for (size_t r = 0; r < n; r++) {
        for (size_t j = 0; j < n; j++) {
            q[r * n + j] *= phase[j];
        }
    }
    out.vectors.assign(n * n, complex_t{0, 0});
    for (size_t k = 0; k < n; k++) {
        const double *z = &zt[order[k] * n];
        complex_t *dst = &out.vectors[k * n];
        for (size_t r = 0; r < n; r++) {
            const T *qr = &q[r * n];
            T s(0);
            for (size_t j = 0; j < n; j++) {
                s += qr[j] * z[j];
            }
            dst[r] = complex_t(s);
        }
    }
    return out;
}

}  // namespace detail

/// Full eigendecomposition of a Hermitian matrix (Householder tridiagonalization + implicit QL).
inline EigenDecomposition eigh(const HermitianMatrix &m, bool want_vectors = true) {
    if (!m.is_hermitian()) {
        throw std::invalid_argument("eigh: matrix is not Hermitian");
    }
    size_t n = m.dim;
    if (m.is_real()) {
        std::vector<double> a(n * n);
        for (size_t k = 0; k < n * n; k++) {
            a[k] = m.entries[k].real();
        }
        return detail::eigh_impl<double>(std::move(a), n, want_vectors);
    }
    return detail::eigh_impl<complex_t>(m.entries, n, want_vectors);
}

inline std::vector<double> eigvalsh(const HermitianMatrix &m) {
    return eigh(m, false).values;
}

/// Boltzmann weights e^{-beta (E_k - E_min)} / Z for ascending energies.
inline std::vector<double> boltzmann_weights(const std::vector<double> &energies, double beta) {
    if (beta < 0) {
        throw std::invalid_argument("boltzmann_weights: beta must be non-negative");
    }
    std::vector<double> p(energies.size());
    if (energies.empty()) {
        return p;
    }
    double e_min = *std::min_element(energies.begin(), energies.end());
    double z = 0;
    for (size_t k = 0; k < energies.size(); k++) {
        p[k] = std::exp(-beta * (energies[k] - e_min));
        z += p[k];
    }
    for (auto &v : p) {
        v /= z;
    }
    return p;
}

constexpr size_t kGibbsMaxQubits = 10;

/// Thermal expectations Tr[rho_beta(h) O] for each observable.
inline std::vector<double> gibbs_expectations(const Observable &h, double beta, const std::vector<Observable> &observables) {
    if (h.num_qubits() > kGibbsMaxQubits) {
        throw std::invalid_argument("gibbs_expectations: too many qubits");
    }
    if (beta < 0) {
        throw std::invalid_argument("gibbs_expectations: beta must be non-negative");
    }
    for (const auto &o : observables) {
        if (o.num_qubits() != h.num_qubits()) {
            throw std::invalid_argument("gibbs_expectations: observable qubit count does not match");
        }
    }
    EigenDecomposition eig = eigh(matrix_of(h));
    std::vector<double> p = boltzmann_weights(eig.values, beta);
    std::vector<double> out(observables.size(), 0.0);
    for (size_t k = 0; k < eig.dim; k++) {
        if (p[k] == 0.0) {
            continue;
        }
        auto v = eig.vector(k);
        StateVector s = StateVector::from_amplitudes(std::vector<complex_t>(v.begin(), v.end()));
        for (size_t i = 0; i < observables.size(); i++) {
            out[i] += p[k] * observables[i].evaluate(s);
        }
    }
    return out;
}

/// lambda_max - lambda_min. A single non-identity term has width exactly 2|c|.
inline double spectral_width(const Observable &o) {
    size_t non_identity = 0;
    double single = 0;
    for (const auto &t : o.terms()) {
        if (!t.pauli.is_identity() && t.coeff != 0.0) {
            non_identity++;
            single = t.coeff;
        }
    }
    if (non_identity == 0) {
        return 0.0;
    }
    if (non_identity == 1) {
        return 2.0 * std::abs(single);
    }
    if (o.num_qubits() > kDenseMaxQubits) {
        throw std::invalid_argument("spectral_width: too many qubits for a dense solve");
    }
    auto values = eigvalsh(matrix_of(o));
    return values.back() - values.front();
}

/// Weights 1/width^2, mean-normalized to 1.
inline ConstraintSet assign_spectral_weights(const ConstraintSet &set) {
    if (set.empty()) {
        throw std::invalid_argument("assign_spectral_weights: empty constraint set");
    }
    std::vector<Constraint> out = set.constraints();
    for (auto &c : out) {
        double w = spectral_width(c.observable);
        if (!(w > 0)) {
            throw std::invalid_argument("assign_spectral_weights: constant observable has zero spectral width");
        }
        c.weight = 1.0 / (w * w);
    }
    return ConstraintSet(set.num_qubits(), std::move(out)).normalized();
}

}  // namespace quest
