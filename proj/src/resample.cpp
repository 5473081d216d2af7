#include "voxdef/resample.hpp"

#include <algorithm>
#include <cmath>

#include "voxdef/errors.hpp"

namespace voxdef {

namespace detail {

void sample_at_positions(const ScalarField& field, int ndim,
                         const std::span<const double>* pos, std::size_t count,
                         std::span<double> out) {
    const LatticeGeometry& g = field.geometry();
    if (ndim != g.ndim())
        throw GeometryError("resample: axis count mismatch (" + std::to_string(ndim) +
                            " positions vs " + std::to_string(g.ndim()) + "-D field)");
    const auto& v = field.values();

    for (std::size_t p = 0; p < count; ++p) {
        std::size_t i0[3] = {0, 0, 0};
        double frac[3] = {0.0, 0.0, 0.0};
        for (int a = 0; a < ndim; ++a) {
            double s = (pos[a][p] - g.origin(a)) / g.spacing(a);
            s = std::clamp(s, 0.0, double(g.dim(a) - 1));
            double fl = std::floor(s);
            std::size_t i = std::min(std::size_t(fl), g.dim(a) - 2);
            i0[a] = i;
            frac[a] = s - double(i);
        }
        if (ndim == 2) {
            const std::size_t c00 = g.index(i0[0], i0[1]);
            const std::size_t c10 = c00 + 1;
            const std::size_t c01 = c00 + g.dim(0);
            const std::size_t c11 = c01 + 1;
            const double fx = frac[0], fy = frac[1];
            out[p] = (1 - fx) * (1 - fy) * v[c00] + fx * (1 - fy) * v[c10] +
                     (1 - fx) * fy * v[c01] + fx * fy * v[c11];
        } else {
            const std::size_t sx = 1, sy = g.dim(0), sz = g.dim(0) * g.dim(1);
            const std::size_t c = g.index(i0[0], i0[1], i0[2]);
            const double fx = frac[0], fy = frac[1], fz = frac[2];
            const double w000 = (1 - fx) * (1 - fy) * (1 - fz);
            const double w100 = fx * (1 - fy) * (1 - fz);
            const double w010 = (1 - fx) * fy * (1 - fz);
            const double w110 = fx * fy * (1 - fz);
            const double w001 = (1 - fx) * (1 - fy) * fz;
            const double w101 = fx * (1 - fy) * fz;
            const double w011 = (1 - fx) * fy * fz;
            const double w111 = fx * fy * fz;
            out[p] = w000 * v[c] + w100 * v[c + sx] + w010 * v[c + sy] +
                     w110 * v[c + sx + sy] + w001 * v[c + sz] + w101 * v[c + sx + sz] +
                     w011 * v[c + sy + sz] + w111 * v[c + sx + sy + sz];
        }
    }
}

} // namespace detail

ScalarField resample_trilinear(const ScalarField& field, const DiffeoMap& at) {
    std::span<const double> pos[3];
    for (int a = 0; a < at.ndim(); ++a) pos[a] = at.position(a);
    ScalarField out(at.geometry());
    detail::sample_at_positions(field, at.ndim(), pos, at.size(), out.values());
    return out;
}

} // namespace voxdef
