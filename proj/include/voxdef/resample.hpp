#pragma once

#include <span>

#include "voxdef/field.hpp"

namespace voxdef {

// Multi-linear interpolation of `field` at the positions of `at`. Positions
// outside the node box are clamped to the boundary, matching the slippery
// walls: the flow may transiently step a node a hair outside the domain.
ScalarField resample_trilinear(const ScalarField& field, const DiffeoMap& at);

namespace detail {

// Same interpolation over raw position arrays (one span per axis, physical
// mm); out must have count elements.
void sample_at_positions(const ScalarField& field, int ndim,
                         const std::span<const double>* pos, std::size_t count,
                         std::span<double> out);

} // namespace detail

} // namespace voxdef
