#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "voxdef/errors.hpp"

namespace voxdef {

// Regular 2-D or 3-D node lattice: per-axis node counts, spacing (mm) and
// origin (mm). Linear node index is x-fastest: i + nx*(j + ny*k), matching
// the NIfTI data layout.
class LatticeGeometry {
  public:
    LatticeGeometry() = default;

    LatticeGeometry(int ndim, const std::size_t* dims, const double* spacing,
                    const double* origin = nullptr);

    static LatticeGeometry make_2d(std::size_t nx, std::size_t ny,
                                   double hx = 1.0, double hy = 1.0,
                                   double ox = 0.0, double oy = 0.0);
    static LatticeGeometry make_3d(std::size_t nx, std::size_t ny, std::size_t nz,
                                   double hx = 1.0, double hy = 1.0, double hz = 1.0,
                                   double ox = 0.0, double oy = 0.0, double oz = 0.0);

    int ndim() const { return ndim_; }
    std::size_t dim(int axis) const { return dims_[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }
    double origin(int axis) const { return origin_[axis]; }

    std::size_t node_count() const;

    // Physical extent of the node box along one axis: (dim-1)*spacing.
    double extent(int axis) const { return (double(dims_[axis]) - 1.0) * spacing_[axis]; }

    // Volume (area in 2-D) of the box spanned by the nodes.
    double domain_volume() const;

    // Volume (area) of one grid cell.
    double cell_volume() const;

    std::size_t index(std::size_t i, std::size_t j, std::size_t k = 0) const {
        return i + dims_[0] * (j + dims_[1] * k);
    }

    void coords(std::size_t linear, std::size_t* ijk) const;

    // Physical position of a node along one axis.
    double node_position(int axis, std::size_t i) const {
        return origin_[axis] + spacing_[axis] * double(i);
    }

    bool operator==(const LatticeGeometry& o) const;
    bool operator!=(const LatticeGeometry& o) const { return !(*this == o); }

    std::string describe() const;

  private:
    int ndim_ = 0;
    std::array<std::size_t, 3> dims_{1, 1, 1};
    std::array<double, 3> spacing_{1.0, 1.0, 1.0};
    std::array<double, 3> origin_{0.0, 0.0, 0.0};
};

// Finite-difference stencils need at least 3 nodes per axis; callers of the
// stencil operators and the volume readers enforce this.
void require_stencil_dims(const LatticeGeometry& g, const char* where);

void require_same_geometry(const LatticeGeometry& a, const LatticeGeometry& b,
                           const char* where);

} // namespace voxdef
