#include "voxdef/geometry.hpp"

#include <cmath>
#include <sstream>

namespace voxdef {

LatticeGeometry::LatticeGeometry(int ndim, const std::size_t* dims,
                                 const double* spacing, const double* origin) {
    if (ndim != 2 && ndim != 3)
        throw GeometryError("lattice must have 2 or 3 axes, got " + std::to_string(ndim));
    ndim_ = ndim;
    for (int a = 0; a < ndim; ++a) {
        if (dims[a] < 2)
            throw GeometryError("axis " + std::to_string(a) + " has fewer than 2 nodes");
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
            throw GeometryError("axis " + std::to_string(a) + " spacing must be positive");
        dims_[a] = dims[a];
        spacing_[a] = spacing[a];
        origin_[a] = origin ? origin[a] : 0.0;
    }
}

LatticeGeometry LatticeGeometry::make_2d(std::size_t nx, std::size_t ny,
                                         double hx, double hy, double ox, double oy) {
    const std::size_t d[2] = {nx, ny};
    const double h[2] = {hx, hy};
    const double o[2] = {ox, oy};
    return LatticeGeometry(2, d, h, o);
}

LatticeGeometry LatticeGeometry::make_3d(std::size_t nx, std::size_t ny, std::size_t nz,
                                         double hx, double hy, double hz,
                                         double ox, double oy, double oz) {
    const std::size_t d[3] = {nx, ny, nz};
    const double h[3] = {hx, hy, hz};
    const double o[3] = {ox, oy, oz};
    return LatticeGeometry(3, d, h, o);
}

std::size_t LatticeGeometry::node_count() const {
    std::size_t n = 1;
    for (int a = 0; a < ndim_; ++a) n *= dims_[a];
    return n;
}

double LatticeGeometry::domain_volume() const {
    double v = 1.0;
    for (int a = 0; a < ndim_; ++a) v *= extent(a);
    return v;
}

double LatticeGeometry::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < ndim_; ++a) v *= spacing_[a];
    return v;
}

void LatticeGeometry::coords(std::size_t linear, std::size_t* ijk) const {
    ijk[0] = linear % dims_[0];
    linear /= dims_[0];
    ijk[1] = linear % dims_[1];
    ijk[2] = (ndim_ == 3) ? linear / dims_[1] : 0;
}

bool LatticeGeometry::operator==(const LatticeGeometry& o) const {
    if (ndim_ != o.ndim_) return false;
    for (int a = 0; a < ndim_; ++a)
        if (dims_[a] != o.dims_[a] || spacing_[a] != o.spacing_[a] ||
            origin_[a] != o.origin_[a])
            return false;
    return true;
}

std::string LatticeGeometry::describe() const {
    std::ostringstream os;
    for (int a = 0; a < ndim_; ++a) {
        if (a) os << "x";
        os << dims_[a];
    }
    os << " @ (";
    for (int a = 0; a < ndim_; ++a) {
        if (a) os << ",";
        os << spacing_[a];
    }
    os << ") mm";
    return os.str();
}

void require_stencil_dims(const LatticeGeometry& g, const char* where) {
    for (int a = 0; a < g.ndim(); ++a)
        if (g.dim(a) < 3)
            throw GeometryError(std::string(where) + ": axis " + std::to_string(a) +
                                " needs at least 3 nodes, has " + std::to_string(g.dim(a)));
}

void require_same_geometry(const LatticeGeometry& a, const LatticeGeometry& b,
                           const char* where) {
    if (a != b)
        throw GeometryError(std::string(where) + ": geometry mismatch (" + a.describe() +
                            " vs " + b.describe() + ")");
}

} // namespace voxdef
