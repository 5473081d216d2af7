#include "voxdef/fd_ops.hpp"

#include <cstddef>

#include "voxdef/errors.hpp"

namespace voxdef {

namespace detail {

namespace {

inline std::size_t axis_stride(const LatticeGeometry& g, int axis) {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= g.dim(a);
    return s;
}

// Calls fn(line_start) for every 1-D line running along `axis`.
template <typename Fn>
void for_each_line(const LatticeGeometry& g, int axis, Fn&& fn) {
    const int nd = g.ndim();
    std::size_t other[2] = {1, 1};
    int oa = 0;
    for (int a = 0; a < nd; ++a)
        if (a != axis) other[oa++] = g.dim(a);
    const std::size_t stride = axis_stride(g, axis);
    for (std::size_t j1 = 0; j1 < other[1]; ++j1) {
        for (std::size_t j0 = 0; j0 < other[0]; ++j0) {
            // Rebuild the linear index of the line start from the two
            // non-axis coordinates.
            std::size_t ijk[3] = {0, 0, 0};
            oa = 0;
            const std::size_t oc[2] = {j0, j1};
            for (int a = 0; a < nd; ++a)
                if (a != axis) ijk[a] = oc[oa++];
            fn(g.index(ijk[0], ijk[1], ijk[2]), stride);
        }
    }
}

} // namespace

void axis_derivative(const LatticeGeometry& g, std::span<const double> in, int axis,
                     std::span<double> out) {
    const std::size_t n = g.dim(axis);
    const double inv2h = 1.0 / (2.0 * g.spacing(axis));
    for_each_line(g, axis, [&](std::size_t base, std::size_t s) {
        out[base] = (-3.0 * in[base] + 4.0 * in[base + s] - in[base + 2 * s]) * inv2h;
        for (std::size_t i = 1; i + 1 < n; ++i)
            out[base + i * s] = (in[base + (i + 1) * s] - in[base + (i - 1) * s]) * inv2h;
        const std::size_t e = base + (n - 1) * s;
        out[e] = (3.0 * in[e] - 4.0 * in[e - s] + in[e - 2 * s]) * inv2h;
    });
}

void axis_derivative_adjoint(const LatticeGeometry& g, std::span<const double> in,
                             int axis, std::span<double> out) {
    const std::size_t n = g.dim(axis);
    const double inv2h = 1.0 / (2.0 * g.spacing(axis));
    for_each_line(g, axis, [&](std::size_t base, std::size_t s) {
        // Scatter each derivative row transposed.
        const double r0 = in[base] * inv2h;
        out[base] += -3.0 * r0;
        out[base + s] += 4.0 * r0;
        out[base + 2 * s] += -r0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double ri = in[base + i * s] * inv2h;
            out[base + (i - 1) * s] -= ri;
            out[base + (i + 1) * s] += ri;
        }
        const std::size_t e = base + (n - 1) * s;
        const double re = in[e] * inv2h;
        out[e] += 3.0 * re;
        out[e - s] += -4.0 * re;
        out[e - 2 * s] += re;
    });
}

} // namespace detail

VectorField gradient(const ScalarField& w) {
    require_stencil_dims(w.geometry(), "gradient");
    VectorField u(w.geometry());
    for (int a = 0; a < w.geometry().ndim(); ++a)
        detail::axis_derivative(w.geometry(), w.values(), a, u.component(a));
    return u;
}

ScalarField divergence(const VectorField& u) {
    require_stencil_dims(u.geometry(), "divergence");
    ScalarField d(u.geometry(), 0.0);
    std::vector<double> tmp(u.size());
    for (int a = 0; a < u.ndim(); ++a) {
        detail::axis_derivative(u.geometry(), u.component(a), a, tmp);
        for (std::size_t i = 0; i < tmp.size(); ++i) d[i] += tmp[i];
    }
    return d;
}

ScalarField curl2(const VectorField& u) {
    if (u.ndim() != 2) throw GeometryError("curl2: expected a 2-D vector field");
    require_stencil_dims(u.geometry(), "curl2");
    const LatticeGeometry& g = u.geometry();
    ScalarField c(g);
    std::vector<double> tmp(u.size());
    detail::axis_derivative(g, u.component(1), 0, c.values());
    detail::axis_derivative(g, u.component(0), 1, tmp);
    for (std::size_t i = 0; i < tmp.size(); ++i) c[i] -= tmp[i];
    return c;
}

VectorField curl3(const VectorField& u) {
    if (u.ndim() != 3) throw GeometryError("curl3: expected a 3-D vector field");
    require_stencil_dims(u.geometry(), "curl3");
    const LatticeGeometry& g = u.geometry();
    VectorField c(g);
    std::vector<double> da(u.size()), db(u.size());
    // c0 = d(u2)/dy - d(u1)/dz, c1 = d(u0)/dz - d(u2)/dx, c2 = d(u1)/dx - d(u0)/dy
    const int comp_a[3] = {2, 0, 1};
    const int ax_a[3] = {1, 2, 0};
    const int comp_b[3] = {1, 2, 0};
    const int ax_b[3] = {2, 0, 1};
    for (int k = 0; k < 3; ++k) {
        detail::axis_derivative(g, u.component(comp_a[k]), ax_a[k], da);
        detail::axis_derivative(g, u.component(comp_b[k]), ax_b[k], db);
        for (std::size_t i = 0; i < da.size(); ++i) c.component(k)[i] = da[i] - db[i];
    }
    return c;
}

ScalarField laplacian(const ScalarField& w) {
    return divergence(gradient(w));
}

LatticeGeometry cell_center_geometry(const LatticeGeometry& g) {
    std::size_t dims[3];
    double spacing[3], origin[3];
    for (int a = 0; a < g.ndim(); ++a) {
        dims[a] = g.dim(a) - 1;
        spacing[a] = g.spacing(a);
        origin[a] = g.origin(a) + 0.5 * g.spacing(a);
    }
    return LatticeGeometry(g.ndim(), dims, spacing, origin);
}

ScalarField jacobian_determinant(const DiffeoMap& phi) {
    const LatticeGeometry& g = phi.geometry();
    require_stencil_dims(g, "jacobian_determinant");
    ScalarField jd(cell_center_geometry(g));

    if (g.ndim() == 2) {
        const double ihx = 1.0 / (2.0 * g.spacing(0));
        const double ihy = 1.0 / (2.0 * g.spacing(1));
        const auto& px = phi.position(0);
        const auto& py = phi.position(1);
        std::size_t out = 0;
        for (std::size_t j = 0; j + 1 < g.dim(1); ++j) {
            for (std::size_t i = 0; i + 1 < g.dim(0); ++i, ++out) {
                const std::size_t c00 = g.index(i, j), c10 = g.index(i + 1, j);
                const std::size_t c01 = g.index(i, j + 1), c11 = g.index(i + 1, j + 1);
                const double axx = (px[c10] - px[c00] + px[c11] - px[c01]) * ihx;
                const double ayx = (py[c10] - py[c00] + py[c11] - py[c01]) * ihx;
                const double axy = (px[c01] - px[c00] + px[c11] - px[c10]) * ihy;
                const double ayy = (py[c01] - py[c00] + py[c11] - py[c10]) * ihy;
                jd[out] = axx * ayy - axy * ayx;
            }
        }
        return jd;
    }

    const double ih[3] = {1.0 / (4.0 * g.spacing(0)), 1.0 / (4.0 * g.spacing(1)),
                          1.0 / (4.0 * g.spacing(2))};
    std::size_t out = 0;
    for (std::size_t k = 0; k + 1 < g.dim(2); ++k) {
        for (std::size_t j = 0; j + 1 < g.dim(1); ++j) {
            for (std::size_t i = 0; i + 1 < g.dim(0); ++i, ++out) {
                std::size_t c[2][2][2];
                for (int dk = 0; dk < 2; ++dk)
                    for (int dj = 0; dj < 2; ++dj)
                        for (int di = 0; di < 2; ++di)
                            c[di][dj][dk] = g.index(i + di, j + dj, k + dk);
                double A[3][3];
                for (int a = 0; a < 3; ++a) {
                    const auto& p = phi.position(a);
                    // Average the 4 edge differences along each axis.
                    A[a][0] = (p[c[1][0][0]] - p[c[0][0][0]] + p[c[1][1][0]] - p[c[0][1][0]] +
                               p[c[1][0][1]] - p[c[0][0][1]] + p[c[1][1][1]] - p[c[0][1][1]]) *
                              ih[0];
                    A[a][1] = (p[c[0][1][0]] - p[c[0][0][0]] + p[c[1][1][0]] - p[c[1][0][0]] +
                               p[c[0][1][1]] - p[c[0][0][1]] + p[c[1][1][1]] - p[c[1][0][1]]) *
                              ih[1];
                    A[a][2] = (p[c[0][0][1]] - p[c[0][0][0]] + p[c[1][0][1]] - p[c[1][0][0]] +
                               p[c[0][1][1]] - p[c[0][1][0]] + p[c[1][1][1]] - p[c[1][1][0]]) *
                              ih[2];
                }
                jd[out] = A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                          A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                          A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
            }
        }
    }
    return jd;
}

} // namespace voxdef
