/// @file grid.hpp
/// @brief Uniform rectangular lattices and the grid functions living on them.
///
/// Layout conventions:
///   - nodes are numbered node-major with x fastest: n = i + Nx*(j + Ny*k)
///   - each node carries three contiguous doubles (m1, m2, m3)
///   - a face along axis a joins node I and node I + e_a; it is numbered like a
///     node on the lattice whose a-extent is face_count(a)
///
/// Boundaries:
///   - Periodic: node N aliases node 0, every axis has N faces
///   - Neumann: vertex-centred ghost reflection f_{-1} = f_1, f_N = f_{N-2};
///     every axis has N-1 faces and boundary nodes carry trapezoidal weight 1/2
///     so that summation by parts is exact
#pragma once

#include "sipllg/errors.hpp"
#include "sipllg/vec3.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sipllg {

enum class Boundary { Periodic, Neumann };

inline std::string to_string(Boundary b) { return b == Boundary::Periodic ? "periodic" : "neumann"; }

struct GridSpec {
    int dim = 2;
    std::array<int, 3> counts{1, 1, 1};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    Boundary boundary = Boundary::Periodic;

    static GridSpec make_2d(int nx, int ny, double h, Boundary b, std::array<double, 2> lo = {0.0, 0.0})
    {
        GridSpec g;
        g.dim = 2;
        g.counts = {nx, ny, 1};
        g.spacing = {h, h, 1.0};
        g.origin = {lo[0], lo[1], 0.0};
        g.boundary = b;
        g.validate();
        return g;
    }

    static GridSpec make_3d(int nx, int ny, int nz, double h, Boundary b)
    {
        GridSpec g;
        g.dim = 3;
        g.counts = {nx, ny, nz};
        g.spacing = {h, h, h};
        g.boundary = b;
        g.validate();
        return g;
    }

    void validate() const
    {
        if (dim != 2 && dim != 3) {
            throw ArgumentError("grid dimension must be 2 or 3, got " + std::to_string(dim));
        }
        for (int a = 0; a < dim; ++a) {
            if (counts[a] < 2) {
                throw ArgumentError("grid needs at least 2 nodes per axis (axis " + std::to_string(a) + ")");
            }
            if (!(spacing[a] > 0.0)) {
                throw ArgumentError("grid spacing must be positive (axis " + std::to_string(a) + ")");
            }
        }
        if (dim == 2 && counts[2] != 1) {
            throw ArgumentError("2D grid must have counts[2] == 1");
        }
    }

    std::size_t node_count() const
    {
        return static_cast<std::size_t>(counts[0]) * counts[1] * counts[2];
    }

    std::size_t index(int i, int j, int k = 0) const
    {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(counts[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(counts[1]) * k);
    }

    std::array<int, 3> coords(std::size_t n) const
    {
        const auto nx = static_cast<std::size_t>(counts[0]);
        const auto ny = static_cast<std::size_t>(counts[1]);
        return {static_cast<int>(n % nx), static_cast<int>((n / nx) % ny), static_cast<int>(n / (nx * ny))};
    }

    Point position(int i, int j, int k = 0) const
    {
        return {origin[0] + i * spacing[0], origin[1] + j * spacing[1], dim == 3 ? origin[2] + k * spacing[2] : 0.0};
    }

    /// Index of the neighbour one step along axis (dir = +1 or -1) under the boundary rule.
    int neighbour(int i, int dir, int axis) const
    {
        const int n = counts[axis];
        const int j = i + dir;
        if (j >= 0 && j < n) {
            return j;
        }
        if (boundary == Boundary::Periodic) {
            return (j + n) % n;
        }
        return j < 0 ? 1 : n - 2;
    }

    int face_count(int axis) const
    {
        return boundary == Boundary::Periodic ? counts[axis] : counts[axis] - 1;
    }

    std::array<int, 3> face_counts(int axis) const
    {
        auto c = counts;
        c[axis] = face_count(axis);
        return c;
    }

    std::size_t face_total(int axis) const
    {
        const auto c = face_counts(axis);
        return static_cast<std::size_t>(c[0]) * c[1] * c[2];
    }

    /// h^dim
    double cell_volume() const
    {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) {
            v *= spacing[a];
        }
        return v;
    }

    /// Trapezoidal factor of index i along axis (1 except Neumann end nodes).
    double axis_weight(int i, int axis) const
    {
        if (boundary == Boundary::Neumann && (i == 0 || i == counts[axis] - 1)) {
            return 0.5;
        }
        return 1.0;
    }

    /// Quadrature weight of a node, without the h^dim factor.
    double node_weight(int i, int j, int k = 0) const
    {
        double w = axis_weight(i, 0) * axis_weight(j, 1);
        if (dim == 3) {
            w *= axis_weight(k, 2);
        }
        return w;
    }

    /// Quadrature weight of a face on `axis`, without the h^dim factor.
    /// Only the transverse directions contribute trapezoidal factors.
    double face_weight(int axis, int i, int j, int k = 0) const
    {
        const std::array<int, 3> idx{i, j, k};
        double w = 1.0;
        for (int a = 0; a < dim; ++a) {
            if (a != axis) {
                w *= axis_weight(idx[a], a);
            }
        }
        return w;
    }

    bool is_uniform() const
    {
        for (int a = 1; a < dim; ++a) {
            if (spacing[a] != spacing[0]) {
                return false;
            }
        }
        return true;
    }

    double h() const { return spacing[0]; }

    /// Measure of the box spanned by the nodes (periodic: N*h, Neumann: (N-1)*h).
    double volume() const
    {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) {
            v *= face_count(a) * spacing[a];
        }
        return v;
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// One 3-vector per lattice node.
class VectorField {
public:
    VectorField() = default;

    explicit VectorField(GridSpec grid) : grid_(grid), data_(3 * grid.node_count(), 0.0) {}

    VectorField(GridSpec grid, std::vector<double> data) : grid_(grid), data_(std::move(data))
    {
        if (data_.size() != 3 * grid_.node_count()) {
            throw StructuralError("field data length " + std::to_string(data_.size()) +
                                  " does not match 3 x node count " + std::to_string(grid_.node_count()));
        }
    }

    static VectorField uniform(const GridSpec& grid, const Vec3& v)
    {
        VectorField f(grid);
        for (std::size_t n = 0; n < f.size(); ++n) {
            f.set(n, v);
        }
        return f;
    }

    template <class Fn>
    static VectorField sample(const GridSpec& grid, Fn&& fn)
    {
        VectorField f(grid);
        for (int k = 0; k < grid.counts[2]; ++k) {
            for (int j = 0; j < grid.counts[1]; ++j) {
                for (int i = 0; i < grid.counts[0]; ++i) {
                    f.set(grid.index(i, j, k), fn(grid.position(i, j, k)));
                }
            }
        }
        return f;
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return data_.size() / 3; }

    Vec3 operator[](std::size_t n) const { return {data_[3 * n], data_[3 * n + 1], data_[3 * n + 2]}; }
    Vec3 at(int i, int j, int k = 0) const { return (*this)[grid_.index(i, j, k)]; }

    void set(std::size_t n, const Vec3& v)
    {
        data_[3 * n] = v.x;
        data_[3 * n + 1] = v.y;
        data_[3 * n + 2] = v.z;
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::vector<double>& raw() noexcept { return data_; }
    const std::vector<double>& raw() const noexcept { return data_; }

    friend bool operator==(const VectorField&, const VectorField&) = default;

private:
    GridSpec grid_{};
    std::vector<double> data_;
};

/// 3-vector values on the half-points of every axis: discrete gradients and midpoint interpolants.
class StaggeredField {
public:
    StaggeredField() = default;

    explicit StaggeredField(GridSpec grid) : grid_(grid)
    {
        for (int a = 0; a < grid_.dim; ++a) {
            axes_[a].assign(3 * grid_.face_total(a), 0.0);
        }
    }

    const GridSpec& grid() const noexcept { return grid_; }

    std::size_t face_count(int axis) const { return axes_[axis].size() / 3; }

    std::size_t face_index(int axis, int i, int j, int k = 0) const
    {
        const auto c = grid_.face_counts(axis);
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(c[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(c[1]) * k);
    }

    Vec3 get(int axis, std::size_t f) const
    {
        const auto& a = axes_[axis];
        return {a[3 * f], a[3 * f + 1], a[3 * f + 2]};
    }

    void set(int axis, std::size_t f, const Vec3& v)
    {
        auto& a = axes_[axis];
        a[3 * f] = v.x;
        a[3 * f + 1] = v.y;
        a[3 * f + 2] = v.z;
    }

    std::span<const double> axis_values(int axis) const { return axes_[axis]; }

private:
    GridSpec grid_{};
    std::array<std::vector<double>, 3> axes_;
};

using StaggeredGradient = StaggeredField;

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what)
{
    if (!(a == b)) {
        throw StructuralError(std::string(what) + ": operands live on different grids");
    }
}

inline void require_consistent(const VectorField& f)
{
    if (f.raw().size() != 3 * f.grid().node_count()) {
        throw StructuralError("field length does not match its grid");
    }
}

/// Visit every face on `axis` as fn(face_index, lower_node, upper_node, i, j, k).
template <class Fn>
void for_each_face(const GridSpec& g, int axis, Fn&& fn)
{
    const auto fc = g.face_counts(axis);
    std::size_t f = 0;
    for (int k = 0; k < fc[2]; ++k) {
        for (int j = 0; j < fc[1]; ++j) {
            for (int i = 0; i < fc[0]; ++i, ++f) {
                std::array<int, 3> up{i, j, k};
                up[axis] = (up[axis] + 1) % g.counts[axis];
                fn(f, g.index(i, j, k), g.index(up[0], up[1], up[2]), i, j, k);
            }
        }
    }
}

} // namespace sipllg
