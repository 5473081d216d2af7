#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "voxdef/errors.hpp"
#include "voxdef/field.hpp"
#include "voxdef/preprocess.hpp"

using namespace voxdef;

namespace {

// Reflection convention shared with the implementation contract.
std::ptrdiff_t reflect_idx(std::ptrdiff_t i, std::ptrdiff_t n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

// Dense separable-convolution oracle, one axis at a time, written directly
// from the definition.
ScalarField smooth_oracle(const ScalarField& in, double sigma_mm) {
    const LatticeGeometry& g = in.geometry();
    std::vector<double> cur(in.values());
    for (int axis = 0; axis < g.ndim(); ++axis) {
        const double sv = sigma_mm / g.spacing(axis);
        const std::ptrdiff_t r = std::ptrdiff_t(std::ceil(3.0 * sv));
        std::vector<double> k(std::size_t(2 * r + 1));
        double sum = 0.0;
        for (std::ptrdiff_t t = -r; t <= r; ++t) {
            k[std::size_t(t + r)] = std::exp(-0.5 * double(t * t) / (sv * sv));
            sum += k[std::size_t(t + r)];
        }
        for (double& v : k) v /= sum;

        std::vector<double> next(cur.size());
        std::size_t dims[3] = {1, 1, 1};
        for (int a = 0; a < g.ndim(); ++a) dims[a] = g.dim(a);
        for (std::size_t z = 0; z < dims[2]; ++z)
            for (std::size_t y = 0; y < dims[1]; ++y)
                for (std::size_t x = 0; x < dims[0]; ++x) {
                    std::ptrdiff_t c[3] = {std::ptrdiff_t(x), std::ptrdiff_t(y),
                                           std::ptrdiff_t(z)};
                    double acc = 0.0;
                    for (std::ptrdiff_t t = -r; t <= r; ++t) {
                        std::ptrdiff_t cc[3] = {c[0], c[1], c[2]};
                        cc[axis] = reflect_idx(c[axis] + t,
                                               std::ptrdiff_t(dims[std::size_t(axis)]));
                        acc += k[std::size_t(t + r)] *
                               cur[std::size_t(cc[0]) +
                                   dims[0] * (std::size_t(cc[1]) +
                                              dims[1] * std::size_t(cc[2]))];
                    }
                    next[x + dims[0] * (y + dims[1] * z)] = acc;
                }
        cur = std::move(next);
    }
    return ScalarField(g, std::move(cur));
}

} // namespace

TEST_CASE("gaussian_subtract annihilates constants") {
    LatticeGeometry g = LatticeGeometry::make_3d(8, 8, 8);
    const ScalarField out = gaussian_subtract(ScalarField(g, 5.0), 2.0);
    for (double v : out.values()) CHECK(std::abs(v) <= 1e-10);
}

TEST_CASE("gaussian_subtract matches the direct convolution oracle") {
    LatticeGeometry g = LatticeGeometry::make_3d(16, 16, 16);
    ScalarField img(g, 0.0);
    std::mt19937 gen(13);
    // random content only in the interior so the 3-sigma kernel never
    // reaches the border: the smoother is then exactly mass-preserving
    for (std::size_t k = 6; k < 10; ++k)
        for (std::size_t j = 6; j < 10; ++j)
            for (std::size_t i = 6; i < 10; ++i)
                img.at(i, j, k) = std::uniform_real_distribution<double>(0, 1)(gen);

    const double sigma = 1.5;
    const ScalarField out = gaussian_subtract(img, sigma);
    const ScalarField smooth = smooth_oracle(img, sigma);
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out[i] == doctest::Approx(img[i] - smooth[i]).epsilon(1e-12));

    // high-pass: the output mean is a vanishing fraction of the input range
    double mean = 0.0;
    for (double v : out.values()) mean += v;
    mean /= double(out.size());
    CHECK(std::abs(mean) <= 1e-6 * (max_value(img) - min_value(img)));
}

TEST_CASE("gaussian_subtract: centered impulse leaves a zero-sum residue") {
    LatticeGeometry g = LatticeGeometry::make_2d(33, 33);
    ScalarField img(g, 0.0);
    img.at(16, 16) = 1.0;
    const ScalarField out = gaussian_subtract(img, 2.0);
    double sum = 0.0;
    for (double v : out.values()) sum += v;
    CHECK(std::abs(sum) <= 1e-10);
}

TEST_CASE("gaussian_subtract is linear") {
    LatticeGeometry g = LatticeGeometry::make_2d(12, 10);
    ScalarField i1(g), i2(g);
    std::mt19937 gen(19);
    for (std::size_t i = 0; i < i1.size(); ++i) {
        i1[i] = std::uniform_real_distribution<double>(-1, 1)(gen);
        i2[i] = std::uniform_real_distribution<double>(-1, 1)(gen);
    }
    const double a = 2.5, b = -1.25;
    ScalarField combo(g);
    for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * i1[i] + b * i2[i];
    const ScalarField lhs = gaussian_subtract(combo, 1.0);
    const ScalarField o1 = gaussian_subtract(i1, 1.0);
    const ScalarField o2 = gaussian_subtract(i2, 1.0);
    for (std::size_t i = 0; i < lhs.size(); ++i)
        CHECK(lhs[i] == doctest::Approx(a * o1[i] + b * o2[i]).epsilon(1e-9));
}

TEST_CASE("zscore: in-mask mean 0 and std 1, zeros outside") {
    LatticeGeometry g = LatticeGeometry::make_3d(10, 10, 6);
    ScalarField img(g, 0.0);
    std::mt19937 gen(29);
    for (std::size_t i = 0; i < img.size(); ++i)
        if (i % 3 != 0) img[i] = std::uniform_real_distribution<double>(10, 60)(gen);
    const LabelVolume mask = mask_from_nonzero(img);
    const ScalarField out = zscore(img, mask);

    double mean = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (mask.labels()[i]) {
            mean += out[i];
            ++n;
        } else {
            CHECK(out[i] == 0.0);
        }
    }
    mean /= double(n);
    double var = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (mask.labels()[i]) var += (out[i] - mean) * (out[i] - mean);
    var /= double(n);
    CHECK(std::abs(mean) <= 1e-10);
    CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-10);
}

TEST_CASE("zscore is invariant under positive affine rescaling") {
    LatticeGeometry g = LatticeGeometry::make_2d(9, 9);
    ScalarField img(g, 0.0);
    std::mt19937 gen(31);
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = std::uniform_real_distribution<double>(1, 2)(gen);
    const LabelVolume mask = mask_from_nonzero(img);
    ScalarField scaled(g);
    for (std::size_t i = 0; i < img.size(); ++i) scaled[i] = 3.7 * img[i] + 11.0;
    const ScalarField a = zscore(img, mask);
    const ScalarField b = zscore(scaled, mask);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
}

TEST_CASE("zscore degenerate inputs") {
    LatticeGeometry g = LatticeGeometry::make_2d(5, 5);
    ScalarField img(g, 0.0);
    img.at(2, 2) = 4.0; // single-voxel mask
    CHECK_THROWS_AS(zscore(img, mask_from_nonzero(img)), DegenerateInputError);
    CHECK_THROWS_AS(zscore(ScalarField(g, 0.0), mask_from_nonzero(ScalarField(g, 0.0))),
                    DegenerateInputError);
    CHECK_THROWS_AS(zscore(img, LabelVolume(LatticeGeometry::make_2d(6, 5),
                                            std::vector<std::uint8_t>(30, 1))),
                    GeometryError);
}

TEST_CASE("clahe: constant images map to a constant and are idempotent") {
    LatticeGeometry g = LatticeGeometry::make_2d(32, 32);
    PreprocessConfig cfg;
    const ScalarField out = clahe(ScalarField(g, 3.5), cfg);
    for (double v : out.values()) CHECK(v == 0.0);
    const ScalarField out2 = clahe(out, cfg);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out2[i] == out[i]);
}

TEST_CASE("clahe output stays in [0,1]") {
    LatticeGeometry g = LatticeGeometry::make_3d(24, 24, 5);
    ScalarField img(g);
    std::mt19937 gen(37);
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = std::uniform_real_distribution<double>(-400, 900)(gen);
    PreprocessConfig cfg;
    cfg.clahe_tiles = 4;
    cfg.clahe_clip = 0.02;
    const ScalarField out = clahe(img, cfg);
    for (double v : out.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("clahe at clip=1, tiles=1 degenerates to global histogram equalization") {
    LatticeGeometry g = LatticeGeometry::make_2d(40, 30);
    ScalarField img(g);
    std::mt19937 gen(41);
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = std::uniform_real_distribution<double>(5, 25)(gen);

    PreprocessConfig cfg;
    cfg.clahe_tiles = 1;
    cfg.clahe_clip = 1.0;
    const ScalarField out = clahe(img, cfg);

    // plain global HE over the same 256-bin quantization
    const double lo = min_value(img), hi = max_value(img);
    std::vector<double> hist(256, 0.0);
    auto bin_of = [&](double v) {
        const int b = int((v - lo) / (hi - lo) * 256.0);
        return std::size_t(std::clamp(b, 0, 255));
    };
    for (double v : img.values()) hist[bin_of(v)] += 1.0;
    std::vector<double> cdf(256, 0.0);
    double acc = 0.0;
    for (std::size_t b = 0; b < 256; ++b) {
        acc += hist[b];
        cdf[b] = acc / double(img.size());
    }
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(std::abs(out[i] - cdf[bin_of(img[i])]) <= 1.0 / 256.0);

    // monotone: larger inputs never map below smaller ones
    for (std::size_t i = 0; i + 1 < img.size(); i += 7) {
        if (img[i] <= img[i + 1])
            CHECK(out[i] <= out[i + 1] + 1e-12);
        else
            CHECK(out[i + 1] <= out[i] + 1e-12);
    }
}

TEST_CASE("clahe rejects bad configuration") {
    ScalarField img(LatticeGeometry::make_2d(8, 8), 1.0);
    PreprocessConfig bad;
    bad.clahe_tiles = 0;
    CHECK_THROWS_AS(clahe(img, bad), ParamError);
    bad.clahe_tiles = 8;
    bad.clahe_clip = 0.0;
    CHECK_THROWS_AS(clahe(img, bad), ParamError);
}

TEST_CASE("preprocess_chain runs end to end and stays in range") {
    LatticeGeometry g = LatticeGeometry::make_3d(20, 20, 8);
    ScalarField img(g, 0.0);
    std::mt19937 gen(43);
    for (std::size_t k = 2; k < 6; ++k)
        for (std::size_t j = 3; j < 17; ++j)
            for (std::size_t i = 3; i < 17; ++i)
                img.at(i, j, k) = std::uniform_real_distribution<double>(20, 80)(gen);
    PreprocessConfig cfg;
    cfg.clahe_tiles = 4;
    const ScalarField out = preprocess_chain(img, cfg);
    CHECK(out.size() == img.size());
    for (double v : out.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}
