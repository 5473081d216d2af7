#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "voxdef/geometry.hpp"

namespace voxdef {

// Real-valued function sampled at lattice nodes.
class ScalarField {
  public:
    ScalarField() = default;
    explicit ScalarField(LatticeGeometry g, double fill = 0.0);
    ScalarField(LatticeGeometry g, std::vector<double> values);

    const LatticeGeometry& geometry() const { return geom_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double at(std::size_t i, std::size_t j, std::size_t k = 0) const {
        return values_[geom_.index(i, j, k)];
    }
    double& at(std::size_t i, std::size_t j, std::size_t k = 0) {
        return values_[geom_.index(i, j, k)];
    }

    std::size_t size() const { return values_.size(); }

  private:
    LatticeGeometry geom_;
    std::vector<double> values_;
};

// One d-vector per node, stored as per-component planes.
class VectorField {
  public:
    VectorField() = default;
    explicit VectorField(LatticeGeometry g, double fill = 0.0);

    const LatticeGeometry& geometry() const { return geom_; }
    int ndim() const { return geom_.ndim(); }

    const std::vector<double>& component(int a) const { return comp_[a]; }
    std::vector<double>& component(int a) { return comp_[a]; }

    std::size_t size() const { return comp_[0].size(); }

  private:
    LatticeGeometry geom_;
    std::array<std::vector<double>, 3> comp_;
};

// Node-sampled transformation: physical position (mm) of the image of each
// reference node. Boundary handling and Jacobian positivity are enforced by
// the operations that produce maps, not by this container.
class DiffeoMap {
  public:
    DiffeoMap() = default;
    explicit DiffeoMap(LatticeGeometry g);

    static DiffeoMap identity(const LatticeGeometry& g);

    const LatticeGeometry& geometry() const { return geom_; }
    int ndim() const { return geom_.ndim(); }

    const std::vector<double>& position(int a) const { return pos_[a]; }
    std::vector<double>& position(int a) { return pos_[a]; }

    // Displacement relative to the identity map, componentwise.
    VectorField displacement() const;

    std::size_t size() const { return pos_[0].size(); }

  private:
    LatticeGeometry geom_;
    std::array<std::vector<double>, 3> pos_;
};

// Integer class labels per voxel. Every label value that occurs is present
// in class_names; labels 0..3 get the conventional tissue names.
class LabelVolume {
  public:
    LabelVolume() = default;
    LabelVolume(LatticeGeometry g, std::vector<std::uint8_t> labels);

    const LatticeGeometry& geometry() const { return geom_; }
    const std::vector<std::uint8_t>& labels() const { return labels_; }
    std::vector<std::uint8_t>& labels() { return labels_; }

    const std::map<int, std::string>& class_names() const { return class_names_; }

    // Re-derives class_names after external edits to labels().
    void refresh_class_names();

    std::size_t size() const { return labels_.size(); }

  private:
    LatticeGeometry geom_;
    std::vector<std::uint8_t> labels_;
    std::map<int, std::string> class_names_;
};

// ---- small field utilities ----

double min_value(const ScalarField& f);
double max_value(const ScalarField& f);

// Plain arithmetic mean over nodes.
double node_mean(const ScalarField& f);

// Trapezoid-rule integral over the node box; the natural quadrature for
// node-centered samples and the one used for every "integral over Omega"
// statement in this library.
double trapezoid_integral(const ScalarField& f);

// trapezoid_integral / domain_volume.
double domain_average(const ScalarField& f);

// Throws NumericalError if any value is NaN/Inf.
void require_finite(const ScalarField& f, const char* where);
void require_finite(const VectorField& f, const char* where);

} // namespace voxdef
