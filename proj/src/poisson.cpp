#include "voxdef/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "voxdef/errors.hpp"

namespace voxdef {

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Applies the compact mirror-ghost Laplacian along every axis.
void apply_neumann_laplacian(const LatticeGeometry& g, const std::vector<double>& w,
                             std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    std::size_t dims[3] = {1, 1, 1};
    for (int a = 0; a < g.ndim(); ++a) dims[a] = g.dim(a);
    std::size_t stride[3] = {1, dims[0], dims[0] * dims[1]};
    for (int a = 0; a < g.ndim(); ++a) {
        const double ih2 = 1.0 / (g.spacing(a) * g.spacing(a));
        const std::size_t n = dims[a], s = stride[a];
        for (std::size_t k = 0; k < dims[2]; ++k) {
            for (std::size_t j = 0; j < dims[1]; ++j) {
                for (std::size_t i = 0; i < dims[0]; ++i) {
                    const std::size_t idx = i + dims[0] * (j + dims[1] * k);
                    const std::size_t c = (a == 0) ? i : (a == 1) ? j : k;
                    double second;
                    if (c == 0)
                        second = 2.0 * (w[idx + s] - w[idx]);
                    else if (c + 1 == n)
                        second = 2.0 * (w[idx - s] - w[idx]);
                    else
                        second = w[idx - s] - 2.0 * w[idx] + w[idx + s];
                    out[idx] += second * ih2;
                }
            }
        }
    }
}

ScalarField solve_spectral(const ScalarField& rhs, double mean) {
    const LatticeGeometry& g = rhs.geometry();
    const int nd = g.ndim();
    std::vector<double> data(rhs.values());
    for (double& v : data) v -= mean;

    // FFTW wants row-major (slowest axis first); our layout is x-fastest.
    fftw_plan plan;
    if (nd == 2)
        plan = fftw_plan_r2r_2d(int(g.dim(1)), int(g.dim(0)), data.data(), data.data(),
                                FFTW_REDFT00, FFTW_REDFT00, FFTW_ESTIMATE);
    else
        plan = fftw_plan_r2r_3d(int(g.dim(2)), int(g.dim(1)), int(g.dim(0)), data.data(),
                                data.data(), FFTW_REDFT00, FFTW_REDFT00, FFTW_REDFT00,
                                FFTW_ESTIMATE);
    fftw_execute(plan);

    // Eigenvalues of the compact mirror-ghost Laplacian on DCT-I modes.
    std::array<std::vector<double>, 3> eig;
    double norm = 1.0;
    for (int a = 0; a < nd; ++a) {
        const std::size_t n = g.dim(a);
        const double ih2 = 1.0 / (g.spacing(a) * g.spacing(a));
        eig[a].resize(n);
        for (std::size_t k = 0; k < n; ++k)
            eig[a][k] =
                (2.0 * std::cos(std::numbers::pi * double(k) / double(n - 1)) - 2.0) * ih2;
        norm *= 2.0 * double(n - 1);
    }

    std::size_t dims[3] = {1, 1, 1};
    for (int a = 0; a < nd; ++a) dims[a] = g.dim(a);
    std::size_t idx = 0;
    for (std::size_t kz = 0; kz < dims[2]; ++kz) {
        for (std::size_t ky = 0; ky < dims[1]; ++ky) {
            for (std::size_t kx = 0; kx < dims[0]; ++kx, ++idx) {
                double lam = eig[0][kx] + eig[1][ky] + (nd == 3 ? eig[2][kz] : 0.0);
                data[idx] = (lam == 0.0) ? 0.0 : data[idx] / (lam * norm);
            }
        }
    }

    fftw_execute(plan); // REDFT00 is its own inverse up to the norm factor
    fftw_destroy_plan(plan);

    ScalarField w(g, std::move(data));
    const double gauge = domain_average(w);
    for (double& v : w.values()) v -= gauge;
    return w;
}

ScalarField solve_sor(const ScalarField& rhs, double mean, const PoissonOptions& opts) {
    const LatticeGeometry& g = rhs.geometry();
    std::vector<double> r(rhs.values());
    for (double& v : r) v -= mean;
    const double rhs_scale = max_abs(rhs.values());
    const double target = opts.tol * rhs_scale;

    std::size_t dims[3] = {1, 1, 1};
    for (int a = 0; a < g.ndim(); ++a) dims[a] = g.dim(a);
    const std::size_t stride[3] = {1, dims[0], dims[0] * dims[1]};
    double diag = 0.0;
    for (int a = 0; a < g.ndim(); ++a) diag -= 2.0 / (g.spacing(a) * g.spacing(a));

    ScalarField w(g, 0.0);
    std::vector<double>& wv = w.values();
    std::vector<double> lap(wv.size());
    double residual = max_abs(r);

    for (int sweep = 0; sweep < opts.max_iters; ++sweep) {
        if (residual <= target) break;
        std::size_t idx = 0;
        for (std::size_t k = 0; k < dims[2]; ++k) {
            for (std::size_t j = 0; j < dims[1]; ++j) {
                for (std::size_t i = 0; i < dims[0]; ++i, ++idx) {
                    const std::size_t c[3] = {i, j, k};
                    double off = 0.0;
                    for (int a = 0; a < g.ndim(); ++a) {
                        const double ih2 = 1.0 / (g.spacing(a) * g.spacing(a));
                        const std::size_t s = stride[a], n = dims[a];
                        if (c[a] == 0)
                            off += 2.0 * ih2 * wv[idx + s];
                        else if (c[a] + 1 == n)
                            off += 2.0 * ih2 * wv[idx - s];
                        else
                            off += ih2 * (wv[idx - s] + wv[idx + s]);
                    }
                    const double gs = (r[idx] - off) / diag;
                    wv[idx] = (1.0 - opts.omega) * wv[idx] + opts.omega * gs;
                }
            }
        }
        apply_neumann_laplacian(g, wv, lap);
        residual = 0.0;
        for (std::size_t m = 0; m < wv.size(); ++m)
            residual = std::max(residual, std::abs(lap[m] - r[m]));
    }
    if (residual > target)
        throw ConvergenceError("solve_poisson_neumann: SOR did not reach tolerance " +
                                   std::to_string(target) + " after " +
                                   std::to_string(opts.max_iters) + " sweeps",
                               residual);
    const double gauge = domain_average(w);
    for (double& v : w.values()) v -= gauge;
    return w;
}

} // namespace

ScalarField neumann_laplacian(const ScalarField& w) {
    require_stencil_dims(w.geometry(), "neumann_laplacian");
    ScalarField out(w.geometry());
    apply_neumann_laplacian(w.geometry(), w.values(), out.values());
    return out;
}

ScalarField solve_poisson_neumann(const ScalarField& rhs, const PoissonOptions& opts) {
    require_stencil_dims(rhs.geometry(), "solve_poisson_neumann");
    require_finite(rhs, "solve_poisson_neumann");
    const double mean = domain_average(rhs);
    ScalarField w = (opts.method == PoissonMethod::spectral) ? solve_spectral(rhs, mean)
                                                             : solve_sor(rhs, mean, opts);
    require_finite(w, "solve_poisson_neumann");
    return w;
}

} // namespace voxdef
