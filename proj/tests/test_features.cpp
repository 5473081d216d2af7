#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "voxdef/errors.hpp"
#include "voxdef/features.hpp"
#include "voxdef/field.hpp"
#include "voxdef/phantom.hpp"

using namespace voxdef;
namespace fs = std::filesystem;

namespace {

ChannelStack random_stack(const LatticeGeometry& g, std::size_t channels,
                          std::mt19937& gen) {
    ChannelStack s;
    for (std::size_t c = 0; c < channels; ++c) {
        ScalarField f(g);
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = std::uniform_real_distribution<double>(-1, 1)(gen);
        s.channels.push_back(std::move(f));
        s.names.push_back("ch" + std::to_string(c));
    }
    return s;
}

} // namespace

TEST_CASE("extract_jd_cv: constant image gives jd=1, cv=0") {
    LatticeGeometry g = LatticeGeometry::make_2d(33, 33);
    const FeatureImages fi = extract_jd_cv(ScalarField(g, 9.0));
    REQUIRE(fi.cv.size() == 1);
    CHECK(fi.jd.geometry() == g);
    for (double v : fi.jd.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : fi.cv[0].values()) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("extract_jd_cv: jd is positive and integrates to the domain volume") {
    const ScalarField img = brain_phantom_2d(65, 65);
    const FeatureImages fi = extract_jd_cv(img);
    for (double v : fi.jd.values()) CHECK(v > 0.0);
    CHECK(trapezoid_integral(fi.jd) ==
          doctest::Approx(img.geometry().domain_volume()).epsilon(0.01));
}

TEST_CASE("extract_jd_cv: jd attains its minimum near a synthetic edge") {
    const std::size_t n = 65;
    LatticeGeometry g = LatticeGeometry::make_2d(n, n);
    ScalarField img(g);
    const double edge_x = 0.5 * double(n - 1);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) img.at(i, j) = (double(i) < edge_x) ? 0.0 : 1.0;

    const FeatureImages fi = extract_jd_cv(img);
    std::size_t argmin = 0;
    for (std::size_t i = 1; i < fi.jd.size(); ++i)
        if (fi.jd[i] < fi.jd[argmin]) argmin = i;
    std::size_t ij[3];
    g.coords(argmin, ij);
    CHECK(std::abs(double(ij[0]) - edge_x) <= 2.0);
}

TEST_CASE("extract_jd_cv: 3-D cv magnitude versus explicit components") {
    const ScalarField img = brain_phantom_3d(20, 20, 12);
    DeformationConfig cfg;
    cfg.time_steps = 40;
    const FeatureImages mag = extract_jd_cv(img, MonitorSpec{}, cfg, false);
    const FeatureImages comps = extract_jd_cv(img, MonitorSpec{}, cfg, true);
    REQUIRE(mag.cv.size() == 1);
    REQUIRE(comps.cv.size() == 3);
    CHECK(comps.cv_names[0] == "CVx");
    for (std::size_t i = 0; i < mag.cv[0].size(); ++i) {
        const double m = std::sqrt(comps.cv[0][i] * comps.cv[0][i] +
                                   comps.cv[1][i] * comps.cv[1][i] +
                                   comps.cv[2][i] * comps.cv[2][i]);
        CHECK(mag.cv[0][i] == doctest::Approx(m).epsilon(1e-12));
    }
}

TEST_CASE("assemble_stack: arm layouts and bit-exact channel values") {
    LatticeGeometry g = LatticeGeometry::make_3d(8, 8, 4);
    std::mt19937 gen(7);
    ChannelStack src = random_stack(g, 4, gen);

    const ChannelStack three_jd = assemble_stack(
        {src.channels[0], src.channels[1], src.channels[2]}, {src.channels[3]},
        {"T1", "T1-IR", "FLAIR", "JD"});
    REQUIRE(three_jd.channel_count() == 4);
    CHECK(three_jd.names == std::vector<std::string>{"T1", "T1-IR", "FLAIR", "JD"});
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t i = 0; i < g.node_count(); ++i)
            CHECK(three_jd.channels[c][i] == src.channels[c][i]);

    const ChannelStack single = assemble_stack({src.channels[0]}, {}, {"T1"});
    CHECK(single.channel_count() == 1);
}

TEST_CASE("assemble_stack: geometry mismatch names the offending channel") {
    LatticeGeometry g = LatticeGeometry::make_3d(8, 8, 4);
    LatticeGeometry g2 = LatticeGeometry::make_3d(8, 8, 5);
    try {
        assemble_stack({ScalarField(g, 0.0)}, {ScalarField(g2, 0.0)}, {"T1", "JD"});
        FAIL("expected GeometryError");
    } catch (const GeometryError& e) {
        CHECK(std::string(e.what()).find("JD") != std::string::npos);
    }
}

TEST_CASE("crop_subvolumes: the reference tiling is a 9-tile exact cover") {
    LatticeGeometry g = LatticeGeometry::make_3d(240, 240, 48);
    std::mt19937 gen(11);
    ChannelStack stack = random_stack(g, 2, gen);

    const auto tiles = crop_subvolumes(stack, {80, 80, 80}, {80, 80, 80});
    CHECK(tiles.size() == 9); // 3 x 3 x 1, z clamped to 48

    // coverage: every voxel belongs to at least one tile
    std::vector<int> cover(g.node_count(), 0);
    for (const Tile& t : tiles) {
        const LatticeGeometry& tg = t.stack.geometry();
        for (std::size_t k = 0; k < tg.dim(2); ++k)
            for (std::size_t j = 0; j < tg.dim(1); ++j)
                for (std::size_t i = 0; i < tg.dim(0); ++i)
                    cover[g.index(t.offset[0] + i, t.offset[1] + j, t.offset[2] + k)] += 1;
    }
    for (int c : cover) CHECK(c >= 1);

    // stitching unmodified tiles reproduces the stack bit-exactly
    const ChannelStack back = stitch_tiles(tiles, g, stack.names);
    for (std::size_t c = 0; c < stack.channel_count(); ++c)
        for (std::size_t i = 0; i < g.node_count(); ++i)
            CHECK(back.channels[c][i] == stack.channels[c][i]);
}

TEST_CASE("crop_subvolumes: size equal to dims yields a single identical tile") {
    LatticeGeometry g = LatticeGeometry::make_3d(12, 10, 8);
    std::mt19937 gen(13);
    ChannelStack stack = random_stack(g, 1, gen);
    const auto tiles = crop_subvolumes(stack, {12, 10, 8}, {12, 10, 8});
    REQUIRE(tiles.size() == 1);
    CHECK(tiles[0].offset == std::array<std::size_t, 3>{0, 0, 0});
    for (std::size_t i = 0; i < g.node_count(); ++i)
        CHECK(tiles[0].stack.channels[0][i] == stack.channels[0][i]);
}

TEST_CASE("crop_subvolumes: random geometries always produce exact covers") {
    std::mt19937 gen(17);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t nx = 6 + gen() % 30, ny = 6 + gen() % 30, nz = 4 + gen() % 20;
        LatticeGeometry g = LatticeGeometry::make_3d(nx, ny, nz);
        ChannelStack stack = random_stack(g, 1, gen);
        const std::size_t size = 3 + gen() % 12;
        const std::size_t stride = 1 + gen() % size;
        const auto tiles = crop_subvolumes(stack, {size, size, size}, {stride, stride, stride});
        std::vector<int> cover(g.node_count(), 0);
        for (const Tile& t : tiles) {
            const LatticeGeometry& tg = t.stack.geometry();
            for (std::size_t k = 0; k < tg.dim(2); ++k)
                for (std::size_t j = 0; j < tg.dim(1); ++j)
                    for (std::size_t i = 0; i < tg.dim(0); ++i)
                        cover[g.index(t.offset[0] + i, t.offset[1] + j, t.offset[2] + k)] += 1;
        }
        for (int c : cover) CHECK(c >= 1);
        const ChannelStack back = stitch_tiles(tiles, g, stack.names);
        CHECK(back.channels[0].values() == stack.channels[0].values());
    }
}

TEST_CASE("crop_subvolumes rejects zero sizes") {
    LatticeGeometry g = LatticeGeometry::make_3d(8, 8, 8);
    std::mt19937 gen(19);
    ChannelStack stack = random_stack(g, 1, gen);
    CHECK_THROWS_AS(crop_subvolumes(stack, {0, 8, 8}, {8, 8, 8}), ParamError);
    CHECK_THROWS_AS(crop_subvolumes(stack, {8, 8, 8}, {0, 8, 8}), ParamError);
}

TEST_CASE("write_stack emits channels plus a manifest") {
    const fs::path dir = fs::temp_directory_path() / "voxdef_tests_stack";
    fs::remove_all(dir);
    LatticeGeometry g = LatticeGeometry::make_3d(8, 8, 6, 1.0, 1.0, 3.0);
    std::mt19937 gen(23);
    ChannelStack stack = random_stack(g, 2, gen);
    stack.names = {"T1", "JD"};
    write_stack(stack, dir.string(), "single+jd");

    std::ifstream mf(dir / "manifest.json");
    REQUIRE(mf.good());
    nlohmann::json manifest;
    mf >> manifest;
    CHECK(manifest["arm"] == "single+jd");
    REQUIRE(manifest["channels"].size() == 2);
    CHECK(manifest["channels"][0]["name"] == "T1");
    CHECK(manifest["channels"][1]["file"] == "JD.nii");
    CHECK(manifest["geometry"]["dims"][2] == 6);
    CHECK(fs::exists(dir / "T1.nii"));
    CHECK(fs::exists(dir / "JD.nii"));
}

TEST_CASE("write_stack_tiles writes per-tile manifests with offsets") {
    const fs::path dir = fs::temp_directory_path() / "voxdef_tests_tiles";
    fs::remove_all(dir);
    LatticeGeometry g = LatticeGeometry::make_3d(12, 12, 6);
    std::mt19937 gen(29);
    ChannelStack stack = random_stack(g, 1, gen);
    write_stack_tiles(stack, dir.string(), "single", {8, 8, 8}, {8, 8, 8});

    std::ifstream tf(dir / "tiles.json");
    REQUIRE(tf.good());
    nlohmann::json top;
    tf >> top;
    CHECK(top["tiles"].size() == 4); // 2 x 2 x 1
    const std::string sub = top["tiles"][1]["dir"];
    std::ifstream sf(dir / sub / "manifest.json");
    REQUIRE(sf.good());
    nlohmann::json tile;
    sf >> tile;
    CHECK(tile["offset"].size() == 3);
}
