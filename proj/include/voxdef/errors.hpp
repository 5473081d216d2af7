#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace voxdef {

// Base class for everything this library throws.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
class IoError : public Error {
  public:
    using Error::Error;
};

// File exists but is not a volume we recognize (bad magic, truncated header, ...).
class FormatError : public Error {
  public:
    using Error::Error;
};

// Valid file, but uses a feature outside the supported subset (e.g. datatype).
class UnsupportedError : public Error {
  public:
    using Error::Error;
};

// Lattice shape problems: axis-count mismatch, dims too small for stencils,
// non-positive spacing, or two fields that were required to share a geometry.
class GeometryError : public Error {
  public:
    using Error::Error;
};

// Caller-supplied configuration value out of range.
class ParamError : public Error {
  public:
    using Error::Error;
};

// Input technically valid but statistically unusable (e.g. zero variance mask).
class DegenerateInputError : public Error {
  public:
    using Error::Error;
};

// Iterative solver hit its cap. Carries the final residual for diagnostics.
class ConvergenceError : public Error {
  public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), final_residual(residual) {}
    double final_residual;
};

// A map stopped being a diffeomorphism: some cell has non-positive Jacobian.
class FoldingError : public Error {
  public:
    FoldingError(const std::string& what, std::size_t cell, double jacobian)
        : Error(what), worst_cell(cell), worst_jacobian(jacobian) {}
    std::size_t worst_cell;
    double worst_jacobian;
};

// Line search could not find a descent step.
class StallError : public Error {
  public:
    using Error::Error;
};

// Loss or intermediate quantity became NaN/Inf.
class NumericalError : public Error {
  public:
    using Error::Error;
};

// Metric has no defined value for this input (e.g. Hausdorff on an empty set).
class UndefinedMetricError : public Error {
  public:
    using Error::Error;
};

} // namespace voxdef
