#include "voxdef/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "voxdef/errors.hpp"
#include "voxdef/fd_ops.hpp"
#include "voxdef/nifti.hpp"
#include "voxdef/resample.hpp"

namespace voxdef {

FeatureImages features_from_map(const DiffeoMap& phi, bool cv_components) {
    const LatticeGeometry& g = phi.geometry();

    FeatureImages out;
    out.jd = resample_trilinear(jacobian_determinant(phi), DiffeoMap::identity(g));

    const VectorField disp = phi.displacement();
    if (g.ndim() == 2) {
        out.cv.push_back(curl2(disp));
        out.cv_names.push_back("CV");
    } else {
        const VectorField c = curl3(disp);
        if (cv_components) {
            const char* names[3] = {"CVx", "CVy", "CVz"};
            for (int a = 0; a < 3; ++a) {
                out.cv.push_back(ScalarField(g, std::vector<double>(c.component(a))));
                out.cv_names.push_back(names[a]);
            }
        } else {
            ScalarField mag(g);
            for (std::size_t i = 0; i < mag.size(); ++i)
                mag[i] = std::sqrt(c.component(0)[i] * c.component(0)[i] +
                                   c.component(1)[i] * c.component(1)[i] +
                                   c.component(2)[i] * c.component(2)[i]);
            out.cv.push_back(std::move(mag));
            out.cv_names.push_back("CV");
        }
    }
    return out;
}

FeatureImages extract_jd_cv(const ScalarField& t1, const MonitorSpec& spec,
                            const DeformationConfig& cfg, bool cv_components) {
    return features_from_map(generate_grid(t1, spec, cfg), cv_components);
}

ChannelStack assemble_stack(const std::vector<ScalarField>& modalities,
                            const std::vector<ScalarField>& features,
                            const std::vector<std::string>& names) {
    if (modalities.empty() && features.empty())
        throw ParamError("assemble_stack: no channels given");
    if (names.size() != modalities.size() + features.size())
        throw ParamError("assemble_stack: got " + std::to_string(names.size()) +
                         " names for " + std::to_string(modalities.size() + features.size()) +
                         " channels");

    ChannelStack stack;
    for (const ScalarField& m : modalities) stack.channels.push_back(m);
    for (const ScalarField& f : features) stack.channels.push_back(f);
    stack.names = names;

    const LatticeGeometry& g = stack.channels.front().geometry();
    for (std::size_t i = 1; i < stack.channels.size(); ++i)
        if (stack.channels[i].geometry() != g)
            throw GeometryError("assemble_stack: channel '" + stack.names[i] +
                                "' geometry " + stack.channels[i].geometry().describe() +
                                " does not match '" + stack.names[0] + "' (" +
                                g.describe() + ")");
    return stack;
}

namespace {

std::vector<std::size_t> tile_starts(std::size_t dim, std::size_t size, std::size_t stride) {
    std::vector<std::size_t> starts;
    std::size_t s = 0;
    while (s + size < dim) {
        starts.push_back(s);
        s += stride;
    }
    starts.push_back(dim - size); // last tile clamped to the boundary
    return starts;
}

} // namespace

std::vector<Tile> crop_subvolumes(const ChannelStack& stack,
                                  std::array<std::size_t, 3> size,
                                  std::array<std::size_t, 3> stride) {
    const LatticeGeometry& g = stack.geometry();
    const int nd = g.ndim();
    std::array<std::vector<std::size_t>, 3> starts;
    std::size_t eff[3] = {1, 1, 1};
    for (int a = 0; a < nd; ++a) {
        if (size[std::size_t(a)] == 0)
            throw ParamError("crop_subvolumes: tile size must be positive");
        if (stride[std::size_t(a)] == 0)
            throw ParamError("crop_subvolumes: stride must be positive");
        eff[a] = std::min(size[std::size_t(a)], g.dim(a));
        starts[std::size_t(a)] = tile_starts(g.dim(a), eff[a], stride[std::size_t(a)]);
    }
    for (int a = nd; a < 3; ++a) starts[std::size_t(a)] = {0};

    std::vector<Tile> tiles;
    for (std::size_t sz : starts[2]) {
        for (std::size_t sy : starts[1]) {
            for (std::size_t sx : starts[0]) {
                Tile tile;
                tile.offset = {sx, sy, sz};
                std::size_t tdims[3] = {eff[0], eff[1], eff[2]};
                double spacing[3], origin[3];
                const std::size_t off[3] = {sx, sy, sz};
                for (int a = 0; a < nd; ++a) {
                    spacing[a] = g.spacing(a);
                    origin[a] = g.origin(a) + double(off[a]) * g.spacing(a);
                }
                LatticeGeometry tg(nd, tdims, spacing, origin);
                for (std::size_t ch = 0; ch < stack.channel_count(); ++ch) {
                    ScalarField f(tg);
                    const ScalarField& src = stack.channels[ch];
                    std::size_t o = 0;
                    for (std::size_t k = 0; k < (nd == 3 ? eff[2] : 1); ++k)
                        for (std::size_t j = 0; j < eff[1]; ++j)
                            for (std::size_t i = 0; i < eff[0]; ++i, ++o)
                                f[o] = src[g.index(sx + i, sy + j, nd == 3 ? sz + k : 0)];
                    tile.stack.channels.push_back(std::move(f));
                }
                tile.stack.names = stack.names;
                tiles.push_back(std::move(tile));
            }
        }
    }
    return tiles;
}

ChannelStack stitch_tiles(const std::vector<Tile>& tiles, const LatticeGeometry& full,
                          const std::vector<std::string>& names) {
    if (tiles.empty()) throw ParamError("stitch_tiles: no tiles");
    const std::size_t nch = tiles.front().stack.channel_count();
    ChannelStack out;
    out.names = names;
    for (std::size_t ch = 0; ch < nch; ++ch) out.channels.emplace_back(full, 0.0);

    const int nd = full.ndim();
    for (const Tile& t : tiles) {
        const LatticeGeometry& tg = t.stack.geometry();
        if (t.stack.channel_count() != nch)
            throw ParamError("stitch_tiles: inconsistent channel counts");
        for (std::size_t ch = 0; ch < nch; ++ch) {
            const ScalarField& src = t.stack.channels[ch];
            ScalarField& dst = out.channels[ch];
            std::size_t o = 0;
            for (std::size_t k = 0; k < (nd == 3 ? tg.dim(2) : 1); ++k)
                for (std::size_t j = 0; j < tg.dim(1); ++j)
                    for (std::size_t i = 0; i < tg.dim(0); ++i, ++o)
                        dst[full.index(t.offset[0] + i, t.offset[1] + j,
                                       nd == 3 ? t.offset[2] + k : 0)] = src[o];
        }
    }
    return out;
}

namespace {

nlohmann::json geometry_json(const LatticeGeometry& g) {
    nlohmann::json j;
    for (int a = 0; a < g.ndim(); ++a) {
        j["dims"].push_back(g.dim(a));
        j["spacing_mm"].push_back(g.spacing(a));
        j["origin_mm"].push_back(g.origin(a));
    }
    return j;
}

std::string channel_filename(const std::string& name) {
    std::string s = name;
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    return s + ".nii";
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f << j.dump(2) << "\n";
    if (!f) throw IoError("failed writing '" + path.string() + "'");
}

} // namespace

void write_stack(const ChannelStack& stack, const std::string& dir, const std::string& arm) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["arm"] = arm;
    manifest["geometry"] = geometry_json(stack.geometry());
    manifest["channels"] = nlohmann::json::array();
    for (std::size_t i = 0; i < stack.channel_count(); ++i) {
        const std::string file = channel_filename(stack.names[i]);
        write_volume(stack.channels[i], (std::filesystem::path(dir) / file).string());
        manifest["channels"].push_back({{"name", stack.names[i]}, {"file", file}});
    }
    write_json(manifest, std::filesystem::path(dir) / "manifest.json");
}

void write_stack_tiles(const ChannelStack& stack, const std::string& dir,
                       const std::string& arm, std::array<std::size_t, 3> size,
                       std::array<std::size_t, 3> stride) {
    const std::vector<Tile> tiles = crop_subvolumes(stack, size, stride);
    std::filesystem::create_directories(dir);

    nlohmann::json top;
    top["arm"] = arm;
    top["geometry"] = geometry_json(stack.geometry());
    top["tile_size"] = size;
    top["tile_stride"] = stride;
    top["tiles"] = nlohmann::json::array();

    char name[32];
    for (std::size_t t = 0; t < tiles.size(); ++t) {
        std::snprintf(name, sizeof(name), "tile_%03zu", t);
        const std::filesystem::path tdir = std::filesystem::path(dir) / name;
        write_stack(tiles[t].stack, tdir.string(), arm);
        nlohmann::json tj;
        tj["dir"] = name;
        tj["offset"] = tiles[t].offset;
        top["tiles"].push_back(std::move(tj));
        // Each tile manifest also records its offset in the parent volume.
        nlohmann::json sub;
        std::ifstream mf(tdir / "manifest.json");
        mf >> sub;
        sub["offset"] = tiles[t].offset;
        write_json(sub, tdir / "manifest.json");
    }
    write_json(top, std::filesystem::path(dir) / "tiles.json");
}

} // namespace voxdef
