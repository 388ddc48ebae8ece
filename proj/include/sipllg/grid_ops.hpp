/// @file grid_ops.hpp
/// @brief Discrete gradient, midpoint interpolation, Laplacian, inner products and norms.
///
/// The gradient and the midpoint interpolant live on faces (half-points):
///   (grad_x f)_{i+1/2} = (f_{i+1} - f_i) / h_x
///   (Pi_x f)_{i+1/2}   = (f_{i+1} + f_i) / 2
/// The Laplacian is the 3-point stencil per axis with the grid's boundary rule.
///
/// Inner products are h^dim-weighted sums (trapezoidal factors on Neumann
/// boundaries). With those weights -<Lap f, g> = <grad f, grad g> holds exactly
/// for both boundary kinds. Reductions use compensated summation in a fixed
/// order, so results do not depend on anything but the inputs.
#pragma once

#include "sipllg/errors.hpp"
#include "sipllg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace sipllg {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v)
    {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Raw stencil kernel: out = Lap_h(in), both 3 doubles per node.
inline void laplacian_kernel(const GridSpec& g, std::span<const double> in, std::span<double> out)
{
    const int nx = g.counts[0];
    const int ny = g.counts[1];
    const int nz = g.counts[2];
    const double cx = 1.0 / (g.spacing[0] * g.spacing[0]);
    const double cy = 1.0 / (g.spacing[1] * g.spacing[1]);
    const double cz = g.dim == 3 ? 1.0 / (g.spacing[2] * g.spacing[2]) : 0.0;

    for (int k = 0; k < nz; ++k) {
        const int kp = g.dim == 3 ? g.neighbour(k, +1, 2) : k;
        const int km = g.dim == 3 ? g.neighbour(k, -1, 2) : k;
        for (int j = 0; j < ny; ++j) {
            const int jp = g.neighbour(j, +1, 1);
            const int jm = g.neighbour(j, -1, 1);
            for (int i = 0; i < nx; ++i) {
                const int ip = g.neighbour(i, +1, 0);
                const int im = g.neighbour(i, -1, 0);
                const std::size_t n = 3 * g.index(i, j, k);
                const std::size_t nxp = 3 * g.index(ip, j, k);
                const std::size_t nxm = 3 * g.index(im, j, k);
                const std::size_t nyp = 3 * g.index(i, jp, k);
                const std::size_t nym = 3 * g.index(i, jm, k);
                for (int c = 0; c < 3; ++c) {
                    const double f = in[n + c];
                    double v = cx * (in[nxp + c] - 2.0 * f + in[nxm + c]) +
                               cy * (in[nyp + c] - 2.0 * f + in[nym + c]);
                    if (g.dim == 3) {
                        const std::size_t nzp = 3 * g.index(i, j, kp);
                        const std::size_t nzm = 3 * g.index(i, j, km);
                        v += cz * (in[nzp + c] - 2.0 * f + in[nzm + c]);
                    }
                    out[n + c] = v;
                }
            }
        }
    }
}

inline VectorField laplacian_apply(const VectorField& f)
{
    require_consistent(f);
    VectorField out(f.grid());
    laplacian_kernel(f.grid(), f.values(), out.values());
    return out;
}

inline StaggeredGradient gradient_apply(const VectorField& f)
{
    require_consistent(f);
    const GridSpec& g = f.grid();
    StaggeredGradient out(g);
    for (int a = 0; a < g.dim; ++a) {
        const double inv_h = 1.0 / g.spacing[a];
        for_each_face(g, a, [&](std::size_t face, std::size_t lo, std::size_t hi, int, int, int) {
            out.set(a, face, (f[hi] - f[lo]) * inv_h);
        });
    }
    return out;
}

inline StaggeredField interpolate_midpoint(const VectorField& f)
{
    require_consistent(f);
    const GridSpec& g = f.grid();
    StaggeredField out(g);
    for (int a = 0; a < g.dim; ++a) {
        for_each_face(g, a, [&](std::size_t face, std::size_t lo, std::size_t hi, int, int, int) {
            out.set(a, face, 0.5 * (f[hi] + f[lo]));
        });
    }
    return out;
}

inline double inner_product(const VectorField& f, const VectorField& g)
{
    require_same_grid(f.grid(), g.grid(), "inner_product");
    require_consistent(f);
    require_consistent(g);
    const GridSpec& grid = f.grid();
    CompensatedSum s;
    for (int k = 0; k < grid.counts[2]; ++k) {
        for (int j = 0; j < grid.counts[1]; ++j) {
            for (int i = 0; i < grid.counts[0]; ++i) {
                const std::size_t n = grid.index(i, j, k);
                s.add(grid.node_weight(i, j, k) * dot(f[n], g[n]));
            }
        }
    }
    return grid.cell_volume() * s.value();
}

/// Sum over faces of F:G, weighted like the node inner product.
inline double gradient_inner_product(const StaggeredField& F, const StaggeredField& G)
{
    require_same_grid(F.grid(), G.grid(), "gradient_inner_product");
    const GridSpec& grid = F.grid();
    CompensatedSum s;
    for (int a = 0; a < grid.dim; ++a) {
        for_each_face(grid, a, [&](std::size_t face, std::size_t, std::size_t, int i, int j, int k) {
            s.add(grid.face_weight(a, i, j, k) * dot(F.get(a, face), G.get(a, face)));
        });
    }
    return grid.cell_volume() * s.value();
}

inline double l2_norm(const VectorField& f) { return std::sqrt(inner_product(f, f)); }

inline double gradient_l2_norm(const VectorField& f)
{
    const auto grad = gradient_apply(f);
    return std::sqrt(gradient_inner_product(grad, grad));
}

inline double lp_norm(const VectorField& f, double p)
{
    if (!(p >= 1.0)) {
        throw ArgumentError("lp_norm requires p >= 1, got " + std::to_string(p));
    }
    require_consistent(f);
    const GridSpec& grid = f.grid();
    CompensatedSum s;
    for (int k = 0; k < grid.counts[2]; ++k) {
        for (int j = 0; j < grid.counts[1]; ++j) {
            for (int i = 0; i < grid.counts[0]; ++i) {
                s.add(grid.node_weight(i, j, k) * std::pow(norm(f.at(i, j, k)), p));
            }
        }
    }
    return std::pow(grid.cell_volume() * s.value(), 1.0 / p);
}

inline double linf_norm(const VectorField& f)
{
    require_consistent(f);
    double m = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) {
        m = std::max(m, norm(f[n]));
    }
    return m;
}

inline double h1_norm(const VectorField& f)
{
    const double a = l2_norm(f);
    const double b = gradient_l2_norm(f);
    return std::sqrt(a * a + b * b);
}

struct FieldNorms {
    double l2 = 0.0;
    double lp = 0.0;
    double p = 4.0;
    double linf = 0.0;
    double h1 = 0.0;
};

inline FieldNorms norms(const VectorField& f, double p = 4.0)
{
    return {l2_norm(f), lp_norm(f, p), p, linf_norm(f), h1_norm(f)};
}

/// Central difference (f_{+} - f_{-}) / (2h) along `axis` at node (i, j, k), ghost rule at boundaries.
inline Vec3 central_difference(const VectorField& f, int axis, int i, int j, int k = 0)
{
    const GridSpec& g = f.grid();
    std::array<int, 3> p{i, j, k};
    std::array<int, 3> m{i, j, k};
    p[axis] = g.neighbour(p[axis], +1, axis);
    m[axis] = g.neighbour(m[axis], -1, axis);
    return (f.at(p[0], p[1], p[2]) - f.at(m[0], m[1], m[2])) * (0.5 / g.spacing[axis]);
}

/// Cyclic shift by (si, sj, sk) nodes: out(i + si, ...) = f(i, ...).
inline VectorField cyclic_shift(const VectorField& f, int si, int sj, int sk = 0)
{
    const GridSpec& g = f.grid();
    VectorField out(g);
    auto wrap = [](int v, int n) { return ((v % n) + n) % n; };
    for (int k = 0; k < g.counts[2]; ++k) {
        for (int j = 0; j < g.counts[1]; ++j) {
            for (int i = 0; i < g.counts[0]; ++i) {
                out.set(g.index(wrap(i + si, g.counts[0]), wrap(j + sj, g.counts[1]), wrap(k + sk, g.counts[2])),
                        f.at(i, j, k));
            }
        }
    }
    return out;
}

} // namespace sipllg
