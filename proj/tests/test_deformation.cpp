#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "voxdef/deformation.hpp"
#include "voxdef/errors.hpp"
#include "voxdef/fd_ops.hpp"
#include "voxdef/field.hpp"
#include "voxdef/resample.hpp"

using namespace voxdef;

namespace {

constexpr double pi = std::numbers::pi;

LatticeGeometry unit_square(std::size_t n) {
    return LatticeGeometry::make_2d(n, n, 1.0 / double(n - 1), 1.0 / double(n - 1));
}

// Reciprocal monitor 1/f1 = normalized(1 + a * gaussian bump); the bump is
// resolvable on every grid used here.
ScalarField gaussian_bump_monitor(const LatticeGeometry& g, double a = 0.5,
                                  double sigma = 0.15) {
    ScalarField recip(g);
    for (std::size_t j = 0; j < g.dim(1); ++j)
        for (std::size_t i = 0; i < g.dim(0); ++i) {
            const double x = g.node_position(0, i) / g.extent(0) - 0.5;
            const double y = g.node_position(1, j) / g.extent(1) - 0.5;
            recip.at(i, j) = 1.0 + a * std::exp(-0.5 * (x * x + y * y) / (sigma * sigma));
        }
    const double c = domain_average(recip);
    ScalarField f1(g);
    for (std::size_t i = 0; i < f1.size(); ++i) f1[i] = c / recip[i];
    return f1;
}

// phi evaluated at cell centers (average of the cell corners), then f1
// sampled there; returns the max relative Jacobian mismatch.
double jacobian_mismatch(const ScalarField& f1, const DiffeoMap& phi) {
    const LatticeGeometry& g = phi.geometry();
    const ScalarField jd = jacobian_determinant(phi);
    DiffeoMap centers(jd.geometry());
    std::size_t cell = 0;
    for (std::size_t j = 0; j + 1 < g.dim(1); ++j)
        for (std::size_t i = 0; i + 1 < g.dim(0); ++i, ++cell)
            for (int a = 0; a < 2; ++a)
                centers.position(a)[cell] =
                    0.25 * (phi.position(a)[g.index(i, j)] +
                            phi.position(a)[g.index(i + 1, j)] +
                            phi.position(a)[g.index(i, j + 1)] +
                            phi.position(a)[g.index(i + 1, j + 1)]);
    const ScalarField target = resample_trilinear(f1, centers);
    double worst = 0.0;
    for (std::size_t c = 0; c < jd.size(); ++c)
        worst = std::max(worst, std::abs(jd[c] - target[c]) / target[c]);
    return worst;
}

} // namespace

TEST_CASE("monitor: constant image gives f1 = 1 for any weights") {
    LatticeGeometry g = unit_square(17);
    MonitorSpec spec;
    spec.alpha = 2.0;
    spec.beta = 3.0;
    const ScalarField f1 = monitor_from_image(ScalarField(g, 42.0), spec);
    for (double v : f1.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("monitor: 1/f1 integrates to the domain volume") {
    LatticeGeometry g = LatticeGeometry::make_2d(33, 21, 0.7, 1.3);
    ScalarField img(g);
    std::mt19937 gen(3);
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = std::uniform_real_distribution<double>(0, 100)(gen);
    const ScalarField f1 = monitor_from_image(img, MonitorSpec{});

    // independent trapezoid quadrature of 1/f1
    double integral = 0.0;
    for (std::size_t j = 0; j < g.dim(1); ++j)
        for (std::size_t i = 0; i < g.dim(0); ++i) {
            double w = (i == 0 || i + 1 == g.dim(0)) ? 0.5 : 1.0;
            w *= (j == 0 || j + 1 == g.dim(1)) ? 0.5 : 1.0;
            integral += w / f1.at(i, j);
        }
    integral *= g.spacing(0) * g.spacing(1);
    CHECK(integral == doctest::Approx(g.domain_volume()).epsilon(1e-10));
}

TEST_CASE("monitor: checkerboard replays the stated formula, compresses on edges") {
    LatticeGeometry g = unit_square(17);
    ScalarField img(g);
    for (std::size_t j = 0; j < 17; ++j)
        for (std::size_t i = 0; i < 17; ++i) img.at(i, j) = double((i / 4 + j / 4) % 2);
    MonitorSpec spec;
    spec.alpha = 0.0;
    spec.beta = 1.0;
    spec.floor = 0.1;
    const ScalarField f1 = monitor_from_image(img, spec);

    // replay: normalized brightness is img itself (already in {0,1}); the
    // gradient magnitude of it, normalized, drives the raw monitor
    VectorField gb = gradient(img);
    std::vector<double> gm(img.size());
    double gmax = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        gm[i] = std::hypot(gb.component(0)[i], gb.component(1)[i]);
        gmax = std::max(gmax, gm[i]);
    }
    std::vector<double> raw(img.size());
    double mean = 0.0;
    for (std::size_t j = 0; j < 17; ++j)
        for (std::size_t i = 0; i < 17; ++i) {
            const std::size_t lin = g.index(i, j);
            raw[lin] = std::max(1.0 / (1.0 + gm[lin] / gmax), 0.1);
            double w = (i == 0 || i == 16) ? 0.5 : 1.0;
            w *= (j == 0 || j == 16) ? 0.5 : 1.0;
            mean += w / raw[lin];
        }
    mean /= 256.0; // 16*16 cells of trapezoid weight
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(f1[i] == doctest::Approx(raw[i] * mean).epsilon(1e-12));

    // edges (large gradient) compress, flat interior expands
    double f_edge = 2.0, f_flat = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (gm[i] > 0.5 * gmax) f_edge = std::min(f_edge, f1[i]);
        if (gm[i] == 0.0) f_flat = std::max(f_flat, f1[i]);
    }
    CHECK(f_edge < 1.0);
    CHECK(f_flat > 1.0);
}

TEST_CASE("monitor rejects bad parameters") {
    LatticeGeometry g = unit_square(9);
    ScalarField img(g, 1.0);
    MonitorSpec zero;
    zero.alpha = 0.0;
    zero.beta = 0.0;
    CHECK_THROWS_AS(monitor_from_image(img, zero), ParamError);
    MonitorSpec bad_floor;
    bad_floor.floor = 0.0;
    CHECK_THROWS_AS(monitor_from_image(img, bad_floor), ParamError);
}

TEST_CASE("build_velocity: unit monitor gives exactly zero velocity") {
    LatticeGeometry g = unit_square(33);
    const VectorField u = build_velocity(ScalarField(g, 1.0));
    for (int a = 0; a < 2; ++a)
        for (double v : u.component(a)) CHECK(v == 0.0);
}

TEST_CASE("build_velocity: residual replay on a discrete eigenmode") {
    // 1 - 1/f1 = a*(cos(pi x) + cos(pi y)) sampled on the lattice is an exact
    // eigenvector of the discretization, so divergence(u) must reproduce it
    // at interior nodes to much better than 1e-6.
    const std::size_t n = 257;
    LatticeGeometry g = unit_square(n);
    const double a = 0.01;
    ScalarField f1(g);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            const double rhs = a * (std::cos(pi * double(i) / double(n - 1)) +
                                    std::cos(pi * double(j) / double(n - 1)));
            f1.at(i, j) = 1.0 / (1.0 - rhs);
        }

    const VectorField u = build_velocity(f1);
    const ScalarField div_u = divergence(u);
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j)
        for (std::size_t i = 1; i + 1 < n; ++i)
            worst = std::max(worst,
                             std::abs(div_u.at(i, j) - (1.0 - 1.0 / f1.at(i, j))));
    CHECK(worst <= 1e-6);

    // u is a gradient: its curl vanishes at interior nodes
    const ScalarField c = curl2(u);
    double curl_worst = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j)
        for (std::size_t i = 1; i + 1 < n; ++i)
            curl_worst = std::max(curl_worst, std::abs(c.at(i, j)));
    CHECK(curl_worst <= 1e-10);

    // slippery walls: normal component is exactly zero on each face
    for (std::size_t j = 0; j < n; ++j) {
        CHECK(u.component(0)[g.index(0, j)] == 0.0);
        CHECK(u.component(0)[g.index(n - 1, j)] == 0.0);
        CHECK(u.component(1)[g.index(j, 0)] == 0.0);
        CHECK(u.component(1)[g.index(j, n - 1)] == 0.0);
    }
}

TEST_CASE("build_velocity rejects non-positive or unnormalized monitors") {
    LatticeGeometry g = unit_square(9);
    ScalarField bad(g, 1.0);
    bad[5] = -0.5;
    CHECK_THROWS_AS(build_velocity(bad), ParamError);
    CHECK_THROWS_AS(build_velocity(ScalarField(g, 2.0)), ParamError);
}

TEST_CASE("integrate_map: unit monitor stays at the identity") {
    LatticeGeometry g = unit_square(65);
    const ScalarField f1(g, 1.0);
    const DiffeoMap phi = integrate_map(f1, build_velocity(f1), DeformationConfig{});
    const DiffeoMap id = DiffeoMap::identity(g);
    double worst = 0.0;
    for (int a = 0; a < 2; ++a)
        for (std::size_t i = 0; i < phi.size(); ++i)
            worst = std::max(worst, std::abs(phi.position(a)[i] - id.position(a)[i]));
    CHECK(worst <= 1e-9);
}

TEST_CASE("integrate_map: Gaussian bump matches its prescribed Jacobian within 5%") {
    LatticeGeometry g = unit_square(65);
    const ScalarField f1 = gaussian_bump_monitor(g);
    const DiffeoMap phi = integrate_map(f1, build_velocity(f1), DeformationConfig{});
    CHECK(jacobian_mismatch(f1, phi) <= 0.05);
}

TEST_CASE("integrate_map: refinement does not increase the Jacobian mismatch") {
    auto mismatch_at = [](std::size_t n, int steps) {
        LatticeGeometry g = unit_square(n);
        const ScalarField f1 = gaussian_bump_monitor(g);
        DeformationConfig cfg;
        cfg.time_steps = steps;
        const DiffeoMap phi = integrate_map(f1, build_velocity(f1), cfg);
        return jacobian_mismatch(f1, phi);
    };
    const double coarse = mismatch_at(33, 50);
    const double fine = mismatch_at(65, 100);
    CHECK(fine <= coarse);
}

TEST_CASE("integrate_map: doubling rk4 steps moves nodes by under 1e-6 cells") {
    LatticeGeometry g = unit_square(65);
    const ScalarField f1 = gaussian_bump_monitor(g);
    const VectorField u = build_velocity(f1);
    DeformationConfig c100, c200;
    c100.time_steps = 100;
    c200.time_steps = 200;
    const DiffeoMap p100 = integrate_map(f1, u, c100);
    const DiffeoMap p200 = integrate_map(f1, u, c200);
    double worst = 0.0;
    for (int a = 0; a < 2; ++a)
        for (std::size_t i = 0; i < p100.size(); ++i)
            worst = std::max(worst, std::abs(p100.position(a)[i] - p200.position(a)[i]) /
                                        g.spacing(a));
    CHECK(worst <= 1e-6);
}

TEST_CASE("time interpolation preserves the unit-mass constraint at all times") {
    LatticeGeometry g = unit_square(33);
    const ScalarField f1 = gaussian_bump_monitor(g);
    for (double t : {0.0, 0.5, 1.0}) {
        ScalarField recip_t(g);
        for (std::size_t i = 0; i < f1.size(); ++i)
            recip_t[i] = (1.0 - t) + t / f1[i];
        CHECK(trapezoid_integral(recip_t) ==
              doctest::Approx(g.domain_volume()).epsilon(1e-6));
    }
}

TEST_CASE("integrate_map reports folding with the worst cell") {
    LatticeGeometry g = unit_square(17);
    const ScalarField f1(g, 1.0);
    VectorField u(g);
    // strong compression along x only; one Euler step inverts the middle
    for (std::size_t j = 0; j < 17; ++j)
        for (std::size_t i = 0; i < 17; ++i)
            u.component(0)[g.index(i, j)] = -5.0 * (g.node_position(0, i) - 0.5);
    DeformationConfig cfg;
    cfg.time_steps = 1;
    cfg.integrator = Integrator::euler;
    try {
        integrate_map(f1, u, cfg);
        FAIL("expected FoldingError");
    } catch (const FoldingError& e) {
        CHECK(e.worst_jacobian <= 0.0);
        CHECK(e.worst_cell < 16 * 16);
    }
}

TEST_CASE("generate_grid: constant image yields the identity grid") {
    LatticeGeometry g = unit_square(33);
    const DiffeoMap phi = generate_grid(ScalarField(g, 7.0));
    const DiffeoMap id = DiffeoMap::identity(g);
    double worst = 0.0;
    for (int a = 0; a < 2; ++a)
        for (std::size_t i = 0; i < phi.size(); ++i)
            worst = std::max(worst, std::abs(phi.position(a)[i] - id.position(a)[i]));
    CHECK(worst <= 1e-9);
}

TEST_CASE("generate_grid: disk image compresses cells at the disk edge") {
    const std::size_t n = 65;
    LatticeGeometry g = unit_square(n);
    ScalarField img(g);
    const double r0 = 0.3;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            const double x = g.node_position(0, i) - 0.5, y = g.node_position(1, j) - 0.5;
            img.at(i, j) = (std::hypot(x, y) < r0) ? 1.0 : 0.0;
        }
    const DiffeoMap phi = generate_grid(img);
    const ScalarField jd = jacobian_determinant(phi);

    double min_area = 1e9, mean_area = 0.0;
    std::size_t argmin = 0;
    for (std::size_t c = 0; c < jd.size(); ++c) {
        const double area = jd[c] * g.cell_volume();
        mean_area += area;
        if (area < min_area) {
            min_area = area;
            argmin = c;
        }
    }
    mean_area /= double(jd.size());
    CHECK(min_area < mean_area);

    // the tightest cell sits within 2 cells of the disk edge
    std::size_t ij[3];
    jd.geometry().coords(argmin, ij);
    const double cx = jd.geometry().node_position(0, ij[0]) - 0.5;
    const double cy = jd.geometry().node_position(1, ij[1]) - 0.5;
    CHECK(std::abs(std::hypot(cx, cy) - r0) <= 2.0 * g.spacing(0));

    // total volume is conserved (the map is box-onto-box)
    double total = 0.0;
    for (double v : jd.values()) total += v;
    total *= g.cell_volume();
    CHECK(total == doctest::Approx(g.domain_volume()).epsilon(0.01));
}

TEST_CASE("grid export writes one line per node") {
    LatticeGeometry g = unit_square(5);
    const DiffeoMap phi = DiffeoMap::identity(g);
    const std::string path = "/tmp/voxdef_tests_grid.txt";
    export_grid_text(phi, path);
    std::ifstream f(path);
    REQUIRE(f.good());
    std::size_t lines = 0;
    std::string line;
    std::size_t idx;
    double x, y;
    while (std::getline(f, line)) {
        std::istringstream is(line);
        REQUIRE((is >> idx >> x >> y));
        CHECK(idx == lines);
        ++lines;
    }
    CHECK(lines == 25);
}
