#pragma once

#include "voxdef/field.hpp"

namespace voxdef {

// Deterministic brain-like test images: an elliptical head with a darker
// rim and a few interior blobs of different intensity. Stands in for real
// scans in tests and demos.
ScalarField brain_phantom_2d(std::size_t nx = 65, std::size_t ny = 65);
ScalarField brain_phantom_3d(std::size_t nx = 48, std::size_t ny = 48, std::size_t nz = 24);

// Matching coarse tissue labels (0 background, 1 CSF, 2 GM, 3 WM), handy as
// a ground-truth stand-in for the metrics tooling.
LabelVolume phantom_labels_3d(std::size_t nx = 48, std::size_t ny = 48, std::size_t nz = 24);

} // namespace voxdef
