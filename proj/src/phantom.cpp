#include "voxdef/phantom.hpp"

#include <cmath>

namespace voxdef {

namespace {

// Normalized radius of an axis-aligned ellipse around the volume center.
inline double ellipse_r(double x, double cx, double rx, double y, double cy, double ry,
                        double z = 0.0, double cz = 0.0, double rz = 1.0) {
    const double dx = (x - cx) / rx, dy = (y - cy) / ry, dz = (z - cz) / rz;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double blob(double r, double width) {
    return std::exp(-0.5 * (r / width) * (r / width));
}

} // namespace

ScalarField brain_phantom_2d(std::size_t nx, std::size_t ny) {
    ScalarField img(LatticeGeometry::make_2d(nx, ny));
    const double cx = 0.5 * double(nx - 1), cy = 0.5 * double(ny - 1);
    const double rx = 0.42 * double(nx - 1), ry = 0.46 * double(ny - 1);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = double(i), y = double(j);
            const double r = ellipse_r(x, cx, rx, y, cy, ry);
            double v = 0.0;
            if (r < 1.0) {
                v = 0.55;                                   // parenchyma
                if (r > 0.85) v = 0.25;                     // CSF rim
                v += 0.35 * blob(ellipse_r(x, cx - 0.30 * rx, 0.22 * rx, y, cy, 0.30 * ry), 1.0);
                v += 0.30 * blob(ellipse_r(x, cx + 0.28 * rx, 0.20 * rx, y, cy + 0.15 * ry, 0.25 * ry), 1.0);
                v -= 0.25 * blob(ellipse_r(x, cx, 0.10 * rx, y, cy - 0.30 * ry, 0.12 * ry), 1.0);
            }
            img.at(i, j) = v;
        }
    }
    return img;
}

ScalarField brain_phantom_3d(std::size_t nx, std::size_t ny, std::size_t nz) {
    ScalarField img(LatticeGeometry::make_3d(nx, ny, nz));
    const double cx = 0.5 * double(nx - 1), cy = 0.5 * double(ny - 1), cz = 0.5 * double(nz - 1);
    const double rx = 0.42 * double(nx - 1), ry = 0.46 * double(ny - 1), rz = 0.44 * double(nz - 1);
    for (std::size_t k = 0; k < nz; ++k) {
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const double x = double(i), y = double(j), z = double(k);
                const double r = ellipse_r(x, cx, rx, y, cy, ry, z, cz, rz);
                double v = 0.0;
                if (r < 1.0) {
                    v = 0.55;
                    if (r > 0.85) v = 0.25;
                    v += 0.35 * blob(ellipse_r(x, cx - 0.30 * rx, 0.25 * rx, y, cy, 0.30 * ry,
                                               z, cz, 0.40 * rz), 1.0);
                    v -= 0.20 * blob(ellipse_r(x, cx + 0.25 * rx, 0.18 * rx, y, cy + 0.10 * ry,
                                               0.22 * ry, z, cz, 0.35 * rz), 1.0);
                }
                img.at(i, j, k) = v;
            }
        }
    }
    return img;
}

LabelVolume phantom_labels_3d(std::size_t nx, std::size_t ny, std::size_t nz) {
    const ScalarField img = brain_phantom_3d(nx, ny, nz);
    std::vector<std::uint8_t> labels(img.size(), 0);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = img[i];
        if (v <= 0.0) continue;
        if (v < 0.40)
            labels[i] = 1; // CSF
        else if (v < 0.65)
            labels[i] = 2; // GM
        else
            labels[i] = 3; // WM
    }
    return LabelVolume(img.geometry(), std::move(labels));
}

} // namespace voxdef
