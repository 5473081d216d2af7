#pragma once

#include "voxdef/field.hpp"

namespace voxdef {

struct PreprocessConfig {
    double gaussian_sigma = 2.0; // mm
    int clahe_tiles = 8;         // tiles per in-plane axis
    double clahe_clip = 0.01;    // relative clip limit in (0,1]
};

// I - G_sigma * I: separable Gaussian truncated at 3 sigma, reflective
// borders. Sigma is in mm and converted per axis using the spacing.
ScalarField gaussian_subtract(const ScalarField& image, double sigma_mm);

// Nonzero intensities become label 1; the usual brain mask for volumes that
// are already skull stripped.
LabelVolume mask_from_nonzero(const ScalarField& image);

// (I - mean)/std inside the mask, 0 outside. Throws DegenerateInputError on
// an empty mask or zero in-mask variance.
ScalarField zscore(const ScalarField& image, const LabelVolume& mask);

// Contrast-limited adaptive histogram equalization, applied per axial slice:
// the volume is scaled to [0,1], each slice is split into tiles x tiles
// regions with 256-bin histograms clipped at clip * (tile pixel count) and
// the excess redistributed uniformly, and pixels blend bilinearly between
// neighboring tile mappings. Output values lie in [0,1].
ScalarField clahe(const ScalarField& image, const PreprocessConfig& cfg);

// gaussian_subtract -> zscore (mask from the nonzero input voxels) -> clahe.
ScalarField preprocess_chain(const ScalarField& image, const PreprocessConfig& cfg);

} // namespace voxdef
