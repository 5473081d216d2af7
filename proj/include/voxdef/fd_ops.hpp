#pragma once

#include <span>

#include "voxdef/field.hpp"

namespace voxdef {

// Declared discretization, fixed in v1: 2nd-order central differences in the
// interior, 2nd-order one-sided stencils on the boundary.
enum class StencilScheme { central_2nd_order };
enum class BoundaryScheme { one_sided_2nd_order };

struct StencilConfig {
    StencilScheme scheme = StencilScheme::central_2nd_order;
    BoundaryScheme boundary = BoundaryScheme::one_sided_2nd_order;
};

constexpr StencilConfig stencil_config() { return {}; }

// u = grad(w), in value/mm.
VectorField gradient(const ScalarField& w);

ScalarField divergence(const VectorField& u);

// Scalar curl of a 2-D field: d(u1)/dx - d(u0)/dy.
ScalarField curl2(const VectorField& u);

// 3-vector curl of a 3-D field.
VectorField curl3(const VectorField& u);

// Composition divergence(gradient(w)); the library's Laplacian for
// node-centered fields outside the Poisson solver.
ScalarField laplacian(const ScalarField& w);

// Cell-centered lattice of a node lattice: dims-1 per axis, origin shifted
// by half a cell.
LatticeGeometry cell_center_geometry(const LatticeGeometry& g);

// Determinant of the finite-difference Jacobian of a map, evaluated at cell
// centers from corner differences. Negative values are returned as-is; they
// diagnose folding.
ScalarField jacobian_determinant(const DiffeoMap& phi);

namespace detail {

// d/d(axis) with the declared stencils, applied to one node-centered array.
void axis_derivative(const LatticeGeometry& g, std::span<const double> in, int axis,
                     std::span<double> out);

// Transpose of axis_derivative (accumulates into out; caller zero-fills).
void axis_derivative_adjoint(const LatticeGeometry& g, std::span<const double> in,
                             int axis, std::span<double> out);

} // namespace detail

} // namespace voxdef
