#include "voxdef/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <vector>

#include "voxdef/errors.hpp"
#include "voxdef/fd_ops.hpp"
#include "voxdef/resample.hpp"

namespace voxdef {

namespace {

// Zero the normal velocity component on each wall (slippery walls).
void zero_wall_normals(VectorField& u) {
    const LatticeGeometry& g = u.geometry();
    std::size_t ijk[3];
    for (std::size_t lin = 0; lin < u.size(); ++lin) {
        g.coords(lin, ijk);
        for (int a = 0; a < g.ndim(); ++a)
            if (ijk[a] == 0 || ijk[a] + 1 == g.dim(a)) u.component(a)[lin] = 0.0;
    }
}

} // namespace

ScalarField monitor_from_image(const ScalarField& image, const MonitorSpec& spec) {
    require_stencil_dims(image.geometry(), "monitor_from_image");
    require_finite(image, "monitor_from_image");
    if (spec.alpha < 0.0 || spec.beta < 0.0)
        throw ParamError("monitor_from_image: alpha and beta must be non-negative");
    if (spec.alpha + spec.beta <= 0.0)
        throw ParamError("monitor_from_image: alpha + beta must be positive");
    if (!(spec.floor > 0.0) || spec.floor > 1.0)
        throw ParamError("monitor_from_image: floor must lie in (0,1]");

    const std::size_t n = image.size();

    // Brightness normalized to [0,1]; a constant image normalizes to 0.
    ScalarField bright(image.geometry(), image.values());
    const double lo = min_value(image), hi = max_value(image);
    if (hi > lo)
        for (double& v : bright.values()) v = (v - lo) / (hi - lo);
    else
        std::fill(bright.values().begin(), bright.values().end(), 0.0);

    // Gradient magnitude of the normalized brightness, normalized to [0,1].
    VectorField gb = gradient(bright);
    std::vector<double> gmag(n, 0.0);
    for (int a = 0; a < gb.ndim(); ++a)
        for (std::size_t i = 0; i < n; ++i)
            gmag[i] += gb.component(a)[i] * gb.component(a)[i];
    double gmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        gmag[i] = std::sqrt(gmag[i]);
        gmax = std::max(gmax, gmag[i]);
    }
    if (gmax > 0.0)
        for (double& v : gmag) v /= gmax;

    ScalarField f1(image.geometry());
    for (std::size_t i = 0; i < n; ++i) {
        const double raw = 1.0 / (1.0 + spec.alpha * bright[i] + spec.beta * gmag[i]);
        f1[i] = std::max(raw, spec.floor);
    }

    // One multiplicative normalization of 1/f1 so its integral equals |Omega|.
    ScalarField recip(f1.geometry());
    for (std::size_t i = 0; i < n; ++i) recip[i] = 1.0 / f1[i];
    const double c = domain_average(recip);
    for (std::size_t i = 0; i < n; ++i) f1[i] *= c;

    require_finite(f1, "monitor_from_image");
    return f1;
}

VectorField build_velocity(const ScalarField& f1, const PoissonOptions& opts) {
    require_stencil_dims(f1.geometry(), "build_velocity");
    const std::size_t n = f1.size();

    ScalarField rhs(f1.geometry());
    for (std::size_t i = 0; i < n; ++i) {
        if (!(f1[i] > 0.0))
            throw ParamError("build_velocity: monitor must be strictly positive");
        rhs[i] = 1.0 - 1.0 / f1[i];
    }
    // The integral constraint makes the Neumann problem compatible.
    double rhs_scale = 0.0;
    for (double v : rhs.values()) rhs_scale = std::max(rhs_scale, std::abs(v));
    if (std::abs(domain_average(rhs)) > 1e-8 * std::max(1.0, rhs_scale))
        throw ParamError("build_velocity: monitor violates the unit-mass constraint");

    ScalarField w = solve_poisson_neumann(rhs, opts);
    VectorField u = gradient(w);
    zero_wall_normals(u);
    return u;
}

namespace {

struct FlowSampler {
    const ScalarField* recip_f1; // 1/f1 on the reference lattice
    std::array<ScalarField, 3> u_comp;
    int nd;

    FlowSampler(const ScalarField& recip, const VectorField& u)
        : recip_f1(&recip), nd(u.ndim()) {
        for (int a = 0; a < nd; ++a)
            u_comp[a] = ScalarField(u.geometry(), std::vector<double>(u.component(a)));
    }

    // velocity(p,t) = f(p,t) * u(p), f = 1 / ((1-t) + t * (1/f1)(p))
    void eval(const std::array<std::vector<double>, 3>& p, double t,
              std::array<std::vector<double>, 3>& vel, std::vector<double>& scratch) const {
        const std::size_t n = p[0].size();
        std::span<const double> pos[3];
        for (int a = 0; a < nd; ++a) pos[a] = p[a];
        detail::sample_at_positions(*recip_f1, nd, pos, n, scratch);
        for (std::size_t i = 0; i < n; ++i)
            scratch[i] = 1.0 / ((1.0 - t) + t * scratch[i]);
        for (int a = 0; a < nd; ++a) {
            detail::sample_at_positions(u_comp[a], nd, pos, n, vel[a]);
            for (std::size_t i = 0; i < n; ++i) vel[a][i] *= scratch[i];
        }
    }
};

void project_walls(const LatticeGeometry& g, std::array<std::vector<double>, 3>& p) {
    std::size_t ijk[3];
    const std::size_t n = p[0].size();
    for (std::size_t lin = 0; lin < n; ++lin) {
        g.coords(lin, ijk);
        for (int a = 0; a < g.ndim(); ++a) {
            const double lo = g.origin(a);
            const double hi = g.origin(a) + g.extent(a);
            if (ijk[a] == 0)
                p[a][lin] = lo;
            else if (ijk[a] + 1 == g.dim(a))
                p[a][lin] = hi;
            else
                p[a][lin] = std::clamp(p[a][lin], lo, hi);
        }
    }
}

} // namespace

DiffeoMap integrate_map(const ScalarField& f1, const VectorField& u,
                        const DeformationConfig& cfg) {
    require_same_geometry(f1.geometry(), u.geometry(), "integrate_map");
    if (cfg.time_steps < 1) throw ParamError("integrate_map: time_steps must be >= 1");
    const LatticeGeometry& g = f1.geometry();
    const int nd = g.ndim();
    const std::size_t n = g.node_count();

    DiffeoMap phi = cfg.initial_map ? *cfg.initial_map : DiffeoMap::identity(g);
    require_same_geometry(phi.geometry(), g, "integrate_map initial map");

    ScalarField recip(g);
    for (std::size_t i = 0; i < n; ++i) recip[i] = 1.0 / f1[i];
    FlowSampler sampler(recip, u);

    std::array<std::vector<double>, 3> p, k1, k2, k3, k4, tmp;
    for (int a = 0; a < nd; ++a) {
        p[a] = phi.position(a);
        k1[a].resize(n);
        k2[a].resize(n);
        k3[a].resize(n);
        k4[a].resize(n);
        tmp[a].resize(n);
    }
    std::vector<double> scratch(n);

    const double dt = 1.0 / double(cfg.time_steps);
    for (int step = 0; step < cfg.time_steps; ++step) {
        const double t = dt * double(step);
        if (cfg.integrator == Integrator::euler) {
            sampler.eval(p, t, k1, scratch);
            for (int a = 0; a < nd; ++a)
                for (std::size_t i = 0; i < n; ++i) p[a][i] += dt * k1[a][i];
        } else {
            sampler.eval(p, t, k1, scratch);
            for (int a = 0; a < nd; ++a)
                for (std::size_t i = 0; i < n; ++i)
                    tmp[a][i] = p[a][i] + 0.5 * dt * k1[a][i];
            sampler.eval(tmp, t + 0.5 * dt, k2, scratch);
            for (int a = 0; a < nd; ++a)
                for (std::size_t i = 0; i < n; ++i)
                    tmp[a][i] = p[a][i] + 0.5 * dt * k2[a][i];
            sampler.eval(tmp, t + 0.5 * dt, k3, scratch);
            for (int a = 0; a < nd; ++a)
                for (std::size_t i = 0; i < n; ++i) tmp[a][i] = p[a][i] + dt * k3[a][i];
            sampler.eval(tmp, t + dt, k4, scratch);
            for (int a = 0; a < nd; ++a)
                for (std::size_t i = 0; i < n; ++i)
                    p[a][i] += dt / 6.0 * (k1[a][i] + 2.0 * k2[a][i] + 2.0 * k3[a][i] +
                                           k4[a][i]);
        }
        project_walls(g, p);
    }

    for (int a = 0; a < nd; ++a) phi.position(a) = std::move(p[a]);

    ScalarField jd = jacobian_determinant(phi);
    std::size_t worst = 0;
    double worst_jd = jd[0];
    for (std::size_t i = 1; i < jd.size(); ++i)
        if (jd[i] < worst_jd) {
            worst_jd = jd[i];
            worst = i;
        }
    if (!(worst_jd > 0.0))
        throw FoldingError("integrate_map: map folded (cell " + std::to_string(worst) +
                               ", jacobian " + std::to_string(worst_jd) + ")",
                           worst, worst_jd);
    return phi;
}

DiffeoMap generate_grid(const ScalarField& image, const MonitorSpec& spec,
                        const DeformationConfig& cfg) {
    ScalarField f1 = monitor_from_image(image, spec);
    VectorField u = build_velocity(f1, cfg.poisson);
    return integrate_map(f1, u, cfg);
}

void export_grid_text(const DiffeoMap& phi, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    const int nd = phi.ndim();
    char line[128];
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (nd == 2)
            std::snprintf(line, sizeof(line), "%zu %.17g %.17g\n", i, phi.position(0)[i],
                          phi.position(1)[i]);
        else
            std::snprintf(line, sizeof(line), "%zu %.17g %.17g %.17g\n", i,
                          phi.position(0)[i], phi.position(1)[i], phi.position(2)[i]);
        f << line;
    }
    if (!f) throw IoError("failed writing '" + path + "'");
}

} // namespace voxdef
