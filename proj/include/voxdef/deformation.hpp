#pragma once

#include <optional>
#include <string>

#include "voxdef/field.hpp"
#include "voxdef/poisson.hpp"

namespace voxdef {

// How a monitor function is derived from an image: the target cell-size
// field is small where the weighted mix of normalized brightness and
// normalized gradient magnitude is large.
struct MonitorSpec {
    double alpha = 1.0; // weight of normalized brightness
    double beta = 1.0;  // weight of normalized gradient magnitude
    double floor = 0.1; // lower clamp on the raw monitor, in (0,1]
};

enum class Integrator { euler, rk4 };

struct DeformationConfig {
    int time_steps = 100;
    Integrator integrator = Integrator::rk4;
    std::optional<DiffeoMap> initial_map; // default: identity
    PoissonOptions poisson;
};

// Builds f1 > 0 from image brightness and gradient with the integral of
// 1/f1 over the domain normalized to the domain volume:
//   raw = 1 / (1 + alpha*norm(I) + beta*norm(|grad norm(I)|)), clamped below
//   by spec.floor, then 1/f1 is scaled once so its trapezoid integral equals
//   the domain volume.
ScalarField monitor_from_image(const ScalarField& image, const MonitorSpec& spec);

// Velocity u = grad(w) with laplacian(w) = 1 - 1/f1 under Neumann walls.
// With the linear-in-time density interpolation 1/f(x,t) = (1-t) + t/f1(x)
// the right side is time independent, so one Poisson solve suffices. Normal
// components on the walls are exactly zero.
VectorField build_velocity(const ScalarField& f1, const PoissonOptions& opts = {});

// Integrates dphi/dt = f(phi,t) * u(phi) from t=0 to 1, sampling f and u at
// phi by trilinear interpolation; boundary nodes are re-projected onto their
// wall after every step. Throws FoldingError if any cell Jacobian at t=1 is
// non-positive.
DiffeoMap integrate_map(const ScalarField& f1, const VectorField& u,
                        const DeformationConfig& cfg = {});

// monitor_from_image -> build_velocity -> integrate_map.
DiffeoMap generate_grid(const ScalarField& image, const MonitorSpec& spec = {},
                        const DeformationConfig& cfg = {});

// Plain-text node coordinates, one line per node: index x y [z].
void export_grid_text(const DiffeoMap& phi, const std::string& path);

} // namespace voxdef
