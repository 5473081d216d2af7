#include "voxdef/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "voxdef/errors.hpp"

namespace voxdef {

namespace {

// Whole-sample reflection: ..., 2, 1, 0 | 0..n-1 | n-1, n-2, ...
inline std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

void convolve_axis(const LatticeGeometry& g, std::vector<double>& data, int axis,
                   const std::vector<double>& kernel) {
    const std::ptrdiff_t radius = std::ptrdiff_t(kernel.size() / 2);
    const std::ptrdiff_t n = std::ptrdiff_t(g.dim(axis));
    std::size_t stride = 1;
    for (int a = 0; a < axis; ++a) stride *= g.dim(a);

    std::size_t dims[3] = {1, 1, 1};
    for (int a = 0; a < g.ndim(); ++a) dims[a] = g.dim(a);

    std::vector<double> line(n), out(n);
    for (std::size_t k = 0; k < dims[2]; ++k) {
        for (std::size_t j = 0; j < dims[1]; ++j) {
            for (std::size_t i = 0; i < dims[0]; ++i) {
                const std::size_t c[3] = {i, j, k};
                if (c[axis] != 0) continue; // visit each line once
                const std::size_t base = i + dims[0] * (j + dims[1] * k);
                for (std::ptrdiff_t m = 0; m < n; ++m)
                    line[m] = data[base + std::size_t(m) * stride];
                for (std::ptrdiff_t m = 0; m < n; ++m) {
                    double acc = 0.0;
                    for (std::ptrdiff_t t = -radius; t <= radius; ++t)
                        acc += kernel[std::size_t(t + radius)] * line[reflect(m + t, n)];
                    out[m] = acc;
                }
                for (std::ptrdiff_t m = 0; m < n; ++m)
                    data[base + std::size_t(m) * stride] = out[m];
            }
        }
    }
}

} // namespace

ScalarField gaussian_subtract(const ScalarField& image, double sigma_mm) {
    if (!(sigma_mm > 0.0)) throw ParamError("gaussian_subtract: sigma must be positive");
    require_finite(image, "gaussian_subtract");
    const LatticeGeometry& g = image.geometry();

    std::vector<double> smooth(image.values());
    for (int a = 0; a < g.ndim(); ++a) {
        const double sigma_vox = sigma_mm / g.spacing(a);
        const std::ptrdiff_t radius = std::ptrdiff_t(std::ceil(3.0 * sigma_vox));
        std::vector<double> kernel(std::size_t(2 * radius + 1));
        double sum = 0.0;
        for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
            const double v = std::exp(-0.5 * double(t) * double(t) / (sigma_vox * sigma_vox));
            kernel[std::size_t(t + radius)] = v;
            sum += v;
        }
        for (double& v : kernel) v /= sum;
        convolve_axis(g, smooth, a, kernel);
    }

    ScalarField out(g);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = image[i] - smooth[i];
    return out;
}

LabelVolume mask_from_nonzero(const ScalarField& image) {
    std::vector<std::uint8_t> labels(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) labels[i] = image[i] > 0.0 ? 1 : 0;
    return LabelVolume(image.geometry(), std::move(labels));
}

ScalarField zscore(const ScalarField& image, const LabelVolume& mask) {
    require_same_geometry(image.geometry(), mask.geometry(), "zscore");
    require_finite(image, "zscore");

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < image.size(); ++i)
        if (mask.labels()[i]) {
            sum += image[i];
            ++count;
        }
    if (count == 0) throw DegenerateInputError("zscore: mask is empty");
    const double mean = sum / double(count);

    double var = 0.0;
    for (std::size_t i = 0; i < image.size(); ++i)
        if (mask.labels()[i]) {
            const double d = image[i] - mean;
            var += d * d;
        }
    var /= double(count);
    if (!(var > 0.0))
        throw DegenerateInputError("zscore: in-mask variance is zero (" +
                                   std::to_string(count) + " voxels)");
    const double inv_std = 1.0 / std::sqrt(var);

    ScalarField out(image.geometry());
    for (std::size_t i = 0; i < image.size(); ++i)
        out[i] = mask.labels()[i] ? (image[i] - mean) * inv_std : 0.0;
    return out;
}

namespace {

constexpr int kBins = 256;

inline int bin_of(double v) {
    int b = int(v * kBins);
    return std::clamp(b, 0, kBins - 1);
}

// Clipped, renormalized CDF mapping for one tile.
struct TileMapping {
    std::array<double, kBins> map; // bin -> equalized value in (0,1]
};

TileMapping tile_mapping(const std::vector<double>& slice, std::size_t nx,
                         std::size_t x0, std::size_t x1, std::size_t y0, std::size_t y1,
                         double clip) {
    std::array<double, kBins> hist{};
    const double npx = double((x1 - x0) * (y1 - y0));
    for (std::size_t y = y0; y < y1; ++y)
        for (std::size_t x = x0; x < x1; ++x) hist[bin_of(slice[x + nx * y])] += 1.0;

    const double limit = clip * npx;
    double excess = 0.0;
    for (double& h : hist)
        if (h > limit) {
            excess += h - limit;
            h = limit;
        }
    const double boost = excess / double(kBins);
    for (double& h : hist) h += boost;

    TileMapping tm;
    double cdf = 0.0;
    for (int b = 0; b < kBins; ++b) {
        cdf += hist[b];
        tm.map[b] = cdf / npx;
    }
    return tm;
}

} // namespace

ScalarField clahe(const ScalarField& image, const PreprocessConfig& cfg) {
    if (cfg.clahe_tiles < 1) throw ParamError("clahe: tiles must be >= 1");
    if (!(cfg.clahe_clip > 0.0) || cfg.clahe_clip > 1.0)
        throw ParamError("clahe: clip must lie in (0,1]");
    require_finite(image, "clahe");

    const LatticeGeometry& g = image.geometry();
    const double lo = min_value(image), hi = max_value(image);
    if (!(hi > lo)) return ScalarField(g, 0.0); // constant image: nothing to equalize

    const std::size_t nx = g.dim(0), ny = g.dim(1);
    const std::size_t nz = (g.ndim() == 3) ? g.dim(2) : 1;
    const int tiles = std::min<int>(cfg.clahe_tiles, int(std::min(nx, ny)));
    ScalarField out(g);

    std::vector<double> slice(nx * ny);
    std::vector<std::size_t> xb(std::size_t(tiles) + 1), yb(std::size_t(tiles) + 1);
    for (int t = 0; t <= tiles; ++t) {
        xb[std::size_t(t)] = nx * std::size_t(t) / std::size_t(tiles);
        yb[std::size_t(t)] = ny * std::size_t(t) / std::size_t(tiles);
    }

    for (std::size_t z = 0; z < nz; ++z) {
        const std::size_t zoff = nx * ny * z;
        for (std::size_t i = 0; i < slice.size(); ++i)
            slice[i] = (image[zoff + i] - lo) / (hi - lo);

        std::vector<TileMapping> tm(std::size_t(tiles) * std::size_t(tiles));
        std::vector<double> cx(std::size_t(tiles)), cy(std::size_t(tiles));
        for (int ty = 0; ty < tiles; ++ty)
            for (int tx = 0; tx < tiles; ++tx)
                tm[std::size_t(tx + tiles * ty)] =
                    tile_mapping(slice, nx, xb[std::size_t(tx)], xb[std::size_t(tx) + 1],
                                 yb[std::size_t(ty)], yb[std::size_t(ty) + 1],
                                 cfg.clahe_clip);
        for (int t = 0; t < tiles; ++t) {
            cx[std::size_t(t)] = 0.5 * double(xb[std::size_t(t)] + xb[std::size_t(t) + 1] - 1);
            cy[std::size_t(t)] = 0.5 * double(yb[std::size_t(t)] + yb[std::size_t(t) + 1] - 1);
        }

        // Bilinear blend between the four nearest tile mappings; clamp past
        // the outermost tile centers.
        auto locate = [tiles](const std::vector<double>& centers, double v, int& t0,
                              double& frac) {
            if (tiles == 1 || v <= centers[0]) {
                t0 = 0;
                frac = 0.0;
                return;
            }
            if (v >= centers[std::size_t(tiles) - 1]) {
                t0 = tiles - 2 >= 0 ? tiles - 2 : 0;
                frac = tiles > 1 ? 1.0 : 0.0;
                return;
            }
            for (int t = 0; t + 1 < tiles; ++t)
                if (v <= centers[std::size_t(t) + 1]) {
                    t0 = t;
                    frac = (v - centers[std::size_t(t)]) /
                           (centers[std::size_t(t) + 1] - centers[std::size_t(t)]);
                    return;
                }
        };

        for (std::size_t y = 0; y < ny; ++y) {
            int ty0;
            double fy;
            locate(cy, double(y), ty0, fy);
            const int ty1 = std::min(ty0 + 1, tiles - 1);
            for (std::size_t x = 0; x < nx; ++x) {
                int tx0;
                double fx;
                locate(cx, double(x), tx0, fx);
                const int tx1 = std::min(tx0 + 1, tiles - 1);
                const int b = bin_of(slice[x + nx * y]);
                const double m00 = tm[std::size_t(tx0 + tiles * ty0)].map[std::size_t(b)];
                const double m10 = tm[std::size_t(tx1 + tiles * ty0)].map[std::size_t(b)];
                const double m01 = tm[std::size_t(tx0 + tiles * ty1)].map[std::size_t(b)];
                const double m11 = tm[std::size_t(tx1 + tiles * ty1)].map[std::size_t(b)];
                out[zoff + x + nx * y] = (1 - fx) * (1 - fy) * m00 + fx * (1 - fy) * m10 +
                                         (1 - fx) * fy * m01 + fx * fy * m11;
            }
        }
    }
    return out;
}

ScalarField preprocess_chain(const ScalarField& image, const PreprocessConfig& cfg) {
    const LabelVolume mask = mask_from_nonzero(image);
    ScalarField highpass = gaussian_subtract(image, cfg.gaussian_sigma);
    ScalarField normalized = zscore(highpass, mask);
    return clahe(normalized, cfg);
}

} // namespace voxdef
