#pragma once

#include <array>
#include <string>
#include <vector>

#include "voxdef/deformation.hpp"
#include "voxdef/field.hpp"

namespace voxdef {

// Ordered list of co-registered channels forming a multi-channel segmenter
// input. Values are stored as-is; assembly never rescales.
struct ChannelStack {
    std::vector<ScalarField> channels;
    std::vector<std::string> names;

    const LatticeGeometry& geometry() const { return channels.front().geometry(); }
    std::size_t channel_count() const { return channels.size(); }
};

struct FeatureImages {
    ScalarField jd;                   // strictly positive
    std::vector<ScalarField> cv;      // 1 channel (scalar / magnitude) or 3 components
    std::vector<std::string> cv_names;
};

// Turns a generated map into voxel-lattice feature images: jd is the
// cell-centered Jacobian determinant interpolated back to the nodes; cv is
// the scalar displacement curl in 2-D and the curl magnitude in 3-D (or the
// 3 raw components when cv_components is set).
FeatureImages features_from_map(const DiffeoMap& phi, bool cv_components = false);

// generate_grid on the image, then features_from_map.
FeatureImages extract_jd_cv(const ScalarField& t1, const MonitorSpec& spec = {},
                            const DeformationConfig& cfg = {}, bool cv_components = false);

// Concatenates modality channels and feature channels; all geometries must
// match and errors name the offending channel.
ChannelStack assemble_stack(const std::vector<ScalarField>& modalities,
                            const std::vector<ScalarField>& features,
                            const std::vector<std::string>& names);

struct Tile {
    std::array<std::size_t, 3> offset{0, 0, 0};
    ChannelStack stack;
};

// Overlap tiling that covers every voxel exactly: tile starts advance by
// stride and the last start per axis is clamped so the tile ends at the
// boundary. A requested size larger than the volume is clamped to it.
std::vector<Tile> crop_subvolumes(const ChannelStack& stack,
                                  std::array<std::size_t, 3> size,
                                  std::array<std::size_t, 3> stride);

// Writes tile contents back at their offsets; with unmodified tiles this
// reproduces the original stack exactly.
ChannelStack stitch_tiles(const std::vector<Tile>& tiles, const LatticeGeometry& full,
                          const std::vector<std::string>& names);

// One float32 NIfTI per channel plus manifest.json (arm, channel order and
// files, geometry).
void write_stack(const ChannelStack& stack, const std::string& dir,
                 const std::string& arm);

// Tiles as tile_NNN/ subdirectories, each with its own manifest carrying the
// voxel offset, plus a top-level manifest listing the tiling.
void write_stack_tiles(const ChannelStack& stack, const std::string& dir,
                       const std::string& arm, std::array<std::size_t, 3> size,
                       std::array<std::size_t, 3> stride);

} // namespace voxdef
