/// @file krylov.hpp
/// @brief Matrix-free restarted GMRES and BiCGSTAB, both right-preconditioned.
///
/// Operators and preconditioners are callables `void(std::span<const double> in, std::span<double> out)`.
/// Convergence is declared on the true residual ||b - A x||_2 <= rel_tol ||b||_2,
/// so a successful return always satisfies the requested tolerance.
#pragma once

#include "sipllg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sipllg {

enum class KrylovMethod { Gmres, Bicgstab };

inline std::string to_string(KrylovMethod m) { return m == KrylovMethod::Gmres ? "gmres" : "bicgstab"; }

struct KrylovResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    std::vector<double> history;
};

struct IdentityPreconditioner {
    void operator()(std::span<const double> in, std::span<double> out) const
    {
        std::copy(in.begin(), in.end(), out.begin());
    }
};

namespace krylov_detail {

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n = a.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s[0] += a[i] * b[i];
        s[1] += a[i + 1] * b[i + 1];
        s[2] += a[i + 2] * b[i + 2];
        s[3] += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) {
        s[0] += a[i] * b[i];
    }
    return (s[0] + s[1]) + (s[2] + s[3]);
}

inline double nrm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y)
{
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] += alpha * x[i];
    }
}

template <class Op>
double residual(const Op& A, std::span<const double> b, std::span<const double> x, std::vector<double>& r)
{
    A(x, r);
    for (std::size_t i = 0; i < b.size(); ++i) {
        r[i] = b[i] - r[i];
    }
    return nrm2(r);
}

} // namespace krylov_detail

/// Scratch storage that lets repeated GMRES solves of one size reuse their Krylov basis.
struct GmresWorkspace {
    std::vector<std::vector<double>> basis;
    std::vector<double> r, z, w;

    void reserve(std::size_t n)
    {
        for (auto* v : {&r, &z, &w}) {
            v->resize(n);
        }
        for (auto& v : basis) {
            v.resize(n);
        }
    }

    std::vector<double>& vector(std::size_t k, std::size_t n)
    {
        while (basis.size() <= k) {
            basis.emplace_back(n);
        }
        return basis[k];
    }
};

/// Restarted GMRES(m) with modified Gram-Schmidt and Givens rotations. `x` holds the initial guess.
template <class Op, class Prec = IdentityPreconditioner>
KrylovResult gmres(const Op& A, std::span<const double> b, std::span<double> x, double rel_tol, int max_iter,
                   int restart, const Prec& M, GmresWorkspace& ws)
{
    using namespace krylov_detail;
    const std::size_t n = b.size();
    KrylovResult res;
    const double bnorm = nrm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        res.converged = true;
        return res;
    }
    const double target = rel_tol * bnorm;
    const int m = std::max(1, restart);

    ws.reserve(n);
    std::vector<double>& r = ws.r;
    std::vector<double>& z = ws.z;
    std::vector<double>& w = ws.w;
    auto V = [&](int k) -> std::vector<double>& { return ws.vector(static_cast<std::size_t>(k), n); };
    std::vector<double> H((m + 1) * m, 0.0);
    std::vector<double> cs(m), sn(m), g(m + 1), y(m);
    auto h = [&](int i, int j) -> double& { return H[i * m + j]; };

    double rnorm = residual(A, b, x, r);
    res.history.push_back(rnorm / bnorm);

    while (rnorm > target && res.iterations < max_iter) {
        for (std::size_t i = 0; i < n; ++i) {
            V(0)[i] = r[i] / rnorm;
        }
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = rnorm;

        int k = 0;
        for (; k < m && res.iterations < max_iter; ++k) {
            M(V(k), z);
            A(z, w);
            ++res.iterations;
            for (int i = 0; i <= k; ++i) {
                h(i, k) = dot(w, V(i));
                axpy(-h(i, k), V(i), w);
            }
            h(k + 1, k) = nrm2(w);
            if (h(k + 1, k) != 0.0) {
                auto& next = V(k + 1);
                for (std::size_t i = 0; i < n; ++i) {
                    next[i] = w[i] / h(k + 1, k);
                }
            }
            for (int i = 0; i < k; ++i) {
                const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
                h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
                h(i, k) = t;
            }
            const double denom = std::hypot(h(k, k), h(k + 1, k));
            cs[k] = denom == 0.0 ? 1.0 : h(k, k) / denom;
            sn[k] = denom == 0.0 ? 0.0 : h(k + 1, k) / denom;
            h(k, k) = denom;
            h(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            res.history.push_back(std::abs(g[k + 1]) / bnorm);
            if (std::abs(g[k + 1]) <= target) {
                ++k;
                break;
            }
        }

        // back substitution on the k x k triangle
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) {
                s -= h(i, j) * y[j];
            }
            y[i] = h(i, i) == 0.0 ? 0.0 : s / h(i, i);
        }
        std::fill(w.begin(), w.end(), 0.0);
        for (int j = 0; j < k; ++j) {
            axpy(y[j], V(j), w);
        }
        M(w, z);
        axpy(1.0, z, x);

        const double previous = rnorm;
        rnorm = residual(A, b, x, r);
        res.history.push_back(rnorm / bnorm);
        if (rnorm >= previous) {
            break; // stagnation: rounding floor reached
        }
    }
    res.relative_residual = rnorm / bnorm;
    res.converged = rnorm <= target;
    return res;
}

template <class Op, class Prec = IdentityPreconditioner>
KrylovResult gmres(const Op& A, std::span<const double> b, std::span<double> x, double rel_tol, int max_iter,
                   int restart, const Prec& M = {})
{
    GmresWorkspace ws;
    return gmres(A, b, x, rel_tol, max_iter, restart, M, ws);
}

/// Right-preconditioned BiCGSTAB. `x` holds the initial guess.
template <class Op, class Prec = IdentityPreconditioner>
KrylovResult bicgstab(const Op& A, std::span<const double> b, std::span<double> x, double rel_tol, int max_iter,
                      const Prec& M = {})
{
    using namespace krylov_detail;
    const std::size_t n = b.size();
    KrylovResult res;
    const double bnorm = nrm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        res.converged = true;
        return res;
    }
    const double target = rel_tol * bnorm;

    std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n);
    double rnorm = residual(A, b, x, r);
    res.history.push_back(rnorm / bnorm);
    r0 = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;

    while (rnorm > target && res.iterations < max_iter) {
        const double rho_new = dot(r0, r);
        if (rho_new == 0.0) {
            break;
        }
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        M(p, phat);
        A(phat, v);
        const double r0v = dot(r0, v);
        if (r0v == 0.0) {
            break;
        }
        alpha = rho / r0v;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = r[i] - alpha * v[i];
        }
        ++res.iterations;
        if (nrm2(s) <= target) {
            axpy(alpha, phat, x);
            rnorm = residual(A, b, x, r);
            res.history.push_back(rnorm / bnorm);
            if (rnorm <= target) {
                break;
            }
            continue;
        }
        M(s, shat);
        A(shat, t);
        const double tt = dot(t, t);
        omega = tt == 0.0 ? 0.0 : dot(t, s) / tt;
        axpy(alpha, phat, x);
        axpy(omega, shat, x);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = s[i] - omega * t[i];
        }
        rnorm = nrm2(r);
        res.history.push_back(rnorm / bnorm);
        if (omega == 0.0) {
            break;
        }
    }
    // replace the recursively updated residual by the true one
    rnorm = residual(A, b, x, r);
    res.relative_residual = rnorm / bnorm;
    res.converged = rnorm <= target;
    return res;
}

} // namespace sipllg
