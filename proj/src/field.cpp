#include "voxdef/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "voxdef/errors.hpp"

namespace voxdef {

ScalarField::ScalarField(LatticeGeometry g, double fill)
    : geom_(g), values_(g.node_count(), fill) {}

ScalarField::ScalarField(LatticeGeometry g, std::vector<double> values)
    : geom_(g), values_(std::move(values)) {
    if (values_.size() != geom_.node_count())
        throw GeometryError("ScalarField: value count " + std::to_string(values_.size()) +
                            " does not match lattice with " +
                            std::to_string(geom_.node_count()) + " nodes");
}

VectorField::VectorField(LatticeGeometry g, double fill) : geom_(g) {
    for (int a = 0; a < geom_.ndim(); ++a)
        comp_[a].assign(geom_.node_count(), fill);
}

DiffeoMap::DiffeoMap(LatticeGeometry g) : geom_(g) {
    for (int a = 0; a < geom_.ndim(); ++a)
        pos_[a].assign(geom_.node_count(), 0.0);
}

DiffeoMap DiffeoMap::identity(const LatticeGeometry& g) {
    DiffeoMap m(g);
    const std::size_t n = g.node_count();
    std::size_t ijk[3];
    for (std::size_t lin = 0; lin < n; ++lin) {
        g.coords(lin, ijk);
        for (int a = 0; a < g.ndim(); ++a)
            m.pos_[a][lin] = g.node_position(a, ijk[a]);
    }
    return m;
}

VectorField DiffeoMap::displacement() const {
    VectorField d(geom_);
    const std::size_t n = geom_.node_count();
    std::size_t ijk[3];
    for (std::size_t lin = 0; lin < n; ++lin) {
        geom_.coords(lin, ijk);
        for (int a = 0; a < geom_.ndim(); ++a)
            d.component(a)[lin] = pos_[a][lin] - geom_.node_position(a, ijk[a]);
    }
    return d;
}

namespace {
std::string default_class_name(int label) {
    switch (label) {
        case 0: return "background";
        case 1: return "CSF";
        case 2: return "GM";
        case 3: return "WM";
        default: return "class_" + std::to_string(label);
    }
}
} // namespace

LabelVolume::LabelVolume(LatticeGeometry g, std::vector<std::uint8_t> labels)
    : geom_(g), labels_(std::move(labels)) {
    if (labels_.size() != geom_.node_count())
        throw GeometryError("LabelVolume: label count does not match lattice");
    refresh_class_names();
}

void LabelVolume::refresh_class_names() {
    class_names_.clear();
    for (std::uint8_t v : labels_)
        if (!class_names_.count(v)) class_names_[v] = default_class_name(v);
}

double min_value(const ScalarField& f) {
    return *std::min_element(f.values().begin(), f.values().end());
}

double max_value(const ScalarField& f) {
    return *std::max_element(f.values().begin(), f.values().end());
}

double node_mean(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s / double(f.size());
}

namespace {
// Per-axis trapezoid weight: 1/2 at the first and last node.
inline double axis_weight(std::size_t i, std::size_t n) {
    return (i == 0 || i + 1 == n) ? 0.5 : 1.0;
}
} // namespace

double trapezoid_integral(const ScalarField& f) {
    const LatticeGeometry& g = f.geometry();
    double sum = 0.0;
    std::size_t ijk[3];
    for (std::size_t lin = 0; lin < f.size(); ++lin) {
        g.coords(lin, ijk);
        double w = 1.0;
        for (int a = 0; a < g.ndim(); ++a) w *= axis_weight(ijk[a], g.dim(a));
        sum += w * f[lin];
    }
    return sum * g.cell_volume();
}

double domain_average(const ScalarField& f) {
    return trapezoid_integral(f) / f.geometry().domain_volume();
}

void require_finite(const ScalarField& f, const char* where) {
    for (double v : f.values())
        if (!std::isfinite(v))
            throw NumericalError(std::string(where) + ": non-finite field value");
}

void require_finite(const VectorField& f, const char* where) {
    for (int a = 0; a < f.ndim(); ++a)
        for (double v : f.component(a))
            if (!std::isfinite(v))
                throw NumericalError(std::string(where) + ": non-finite vector component");
}

} // namespace voxdef
