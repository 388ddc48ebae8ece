/// @file preconditioner.hpp
/// @brief Constant-coefficient diffusion preconditioner (I - c Lap_h)^{-1} applied spectrally.
///
/// Writing m x (m x v) = (m.v) m - v for unit m, the implicit operator of the
/// scheme splits into I - gamma dt Lap_h plus a pointwise rank-one correction
/// and the precession term. The symmetric diffusion part is inverted exactly
/// with separable real transforms:
///   - periodic axes: real-to-halfcomplex DFT, eigenvalue -(4/h^2) sin^2(pi f / N)
///   - Neumann axes (ghost reflection): DCT-I, eigenvalue -(4/h^2) sin^2(pi k / (2 (N-1)))
/// DCT-I of length N runs at the speed of a length 2(N-1) DFT. When N-1 has a prime
/// factor above 7 the Neumann axis falls back to the DCT-II pair (eigenvalue
/// -(4/h^2) sin^2(pi k / (2N))), which inverts a cell-centred variant of the stencil
/// and is then only an approximate inverse.
#pragma once

#include "sipllg/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace sipllg {

class DiffusionPreconditioner {
public:
    DiffusionPreconditioner(const GridSpec& grid, double coefficient)
        : grid_(grid), buffer_(3 * grid.node_count())
    {
        const int rank = grid.dim;
        std::array<int, 3> n{};
        std::array<fftw_r2r_kind, 3> fwd{};
        std::array<fftw_r2r_kind, 3> bwd{};
        // FFTW is row-major: the last transform dimension is the fastest (x) axis.
        for (int d = 0; d < rank; ++d) {
            const int axis = rank - 1 - d;
            n[d] = grid.counts[axis];
            if (grid.boundary == Boundary::Periodic) {
                fwd[d] = FFTW_R2HC;
                bwd[d] = FFTW_HC2R;
            } else if (smooth(n[d] - 1)) {
                fwd[d] = FFTW_REDFT00;
                bwd[d] = FFTW_REDFT00;
            } else {
                fwd[d] = FFTW_REDFT10;
                bwd[d] = FFTW_REDFT01;
                cell_centred_[axis] = true;
            }
        }
        // Components are transformed as three contiguous blocks.
        const int nodes = static_cast<int>(grid.node_count());
        const unsigned flags = nodes >= 4096 ? FFTW_MEASURE : FFTW_ESTIMATE;
        forward_ = fftw_plan_many_r2r(rank, n.data(), 3, buffer_.data(), nullptr, 1, nodes, buffer_.data(), nullptr, 1,
                                      nodes, fwd.data(), flags);
        backward_ = fftw_plan_many_r2r(rank, n.data(), 3, buffer_.data(), nullptr, 1, nodes, buffer_.data(), nullptr,
                                       1, nodes, bwd.data(), flags);

        std::array<std::vector<double>, 3> lam;
        double scale = 1.0;
        for (int a = 0; a < grid.dim; ++a) {
            const int N = grid.counts[a];
            const double h2 = grid.spacing[a] * grid.spacing[a];
            lam[a].resize(N);
            for (int k = 0; k < N; ++k) {
                double theta = 0.0;
                if (grid.boundary == Boundary::Periodic) {
                    const int f = std::min(k, N - k);
                    theta = 2.0 * std::numbers::pi * f / N;
                } else if (cell_centred_[a]) {
                    theta = std::numbers::pi * k / N;
                } else {
                    theta = std::numbers::pi * k / (N - 1);
                }
                const double s = std::sin(0.5 * theta);
                lam[a][k] = -4.0 / h2 * s * s;
            }
            if (grid.boundary == Boundary::Periodic) {
                scale *= N;
            } else {
                scale *= cell_centred_[a] ? 2.0 * N : 2.0 * (N - 1);
            }
        }
        inverse_symbol_.resize(grid.node_count());
        for (int k = 0; k < grid.counts[2]; ++k) {
            for (int j = 0; j < grid.counts[1]; ++j) {
                for (int i = 0; i < grid.counts[0]; ++i) {
                    double l = lam[0][i] + lam[1][j];
                    if (grid.dim == 3) {
                        l += lam[2][k];
                    }
                    inverse_symbol_[grid.index(i, j, k)] = 1.0 / (scale * (1.0 - coefficient * l));
                }
            }
        }
    }

    /// True when every axis is inverted exactly.
    bool exact() const noexcept { return !cell_centred_[0] && !cell_centred_[1] && !cell_centred_[2]; }

    DiffusionPreconditioner(const DiffusionPreconditioner&) = delete;
    DiffusionPreconditioner& operator=(const DiffusionPreconditioner&) = delete;

    DiffusionPreconditioner(DiffusionPreconditioner&& o) noexcept
        : grid_(o.grid_), cell_centred_(o.cell_centred_), buffer_(std::move(o.buffer_)), inverse_symbol_(std::move(o.inverse_symbol_)),
          forward_(std::exchange(o.forward_, nullptr)), backward_(std::exchange(o.backward_, nullptr))
    {
    }

    DiffusionPreconditioner& operator=(DiffusionPreconditioner&&) = delete;

    ~DiffusionPreconditioner()
    {
        if (forward_ != nullptr) {
            fftw_destroy_plan(forward_);
        }
        if (backward_ != nullptr) {
            fftw_destroy_plan(backward_);
        }
    }

    void operator()(std::span<const double> in, std::span<double> out) const
    {
        const std::size_t n = inverse_symbol_.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (int c = 0; c < 3; ++c) {
                buffer_[c * n + i] = in[3 * i + c];
            }
        }
        fftw_execute(forward_);
        for (int c = 0; c < 3; ++c) {
            double* b = buffer_.data() + c * n;
            for (std::size_t i = 0; i < n; ++i) {
                b[i] *= inverse_symbol_[i];
            }
        }
        fftw_execute(backward_);
        for (std::size_t i = 0; i < n; ++i) {
            for (int c = 0; c < 3; ++c) {
                out[3 * i + c] = buffer_[c * n + i];
            }
        }
    }

private:
    static bool smooth(int n)
    {
        for (int p : {2, 3, 5, 7}) {
            while (n > 1 && n % p == 0) {
                n /= p;
            }
        }
        return n <= 1;
    }

    GridSpec grid_;
    std::array<bool, 3> cell_centred_{false, false, false};
    mutable std::vector<double> buffer_;
    std::vector<double> inverse_symbol_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

} // namespace sipllg
