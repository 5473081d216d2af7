#pragma once

#include <string>
#include <variant>

#include "voxdef/field.hpp"

namespace voxdef {

// Deliberately small NIfTI-1 subset: single-file volumes ("n+1" magic,
// little-endian, 348-byte header), datatypes uint8 / int16 / float32,
// optional gzip. Spacing comes from pixdim, origin from a diagonal sform
// when present; no other orientation handling. scl_slope/scl_inter are
// applied on read when the slope is nonzero.

// uint8 files load as LabelVolume, int16/float32 as ScalarField.
std::variant<ScalarField, LabelVolume> read_volume(const std::string& path);

// Any supported datatype, converted to real values.
ScalarField read_scalar_volume(const std::string& path);

// Requires an integer datatype (uint8 or int16) with values in [0,255].
LabelVolume read_label_volume(const std::string& path);

// Scalar fields are written as float32, labels as uint8. A path ending in
// ".gz" produces a gzip-compressed file.
void write_volume(const ScalarField& field, const std::string& path);
void write_volume(const LabelVolume& labels, const std::string& path);

} // namespace voxdef
