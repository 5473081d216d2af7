#include "voxdef/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>

#include "voxdef/errors.hpp"
#include "voxdef/fd_ops.hpp"

namespace voxdef {

namespace {

const LatticeGeometry& node_geometry(const RecoveryProblem& p) {
    if (std::holds_alternative<ScalarField>(p.target_curl))
        return std::get<ScalarField>(p.target_curl).geometry();
    return std::get<VectorField>(p.target_curl).geometry();
}

void validate_problem(const RecoveryProblem& p) {
    const LatticeGeometry& g = node_geometry(p);
    require_stencil_dims(g, "recover");
    const bool curl_is_scalar = std::holds_alternative<ScalarField>(p.target_curl);
    if (g.ndim() == 2 && !curl_is_scalar)
        throw GeometryError("recover: 2-D problems take a scalar target curl");
    if (g.ndim() == 3 && curl_is_scalar)
        throw GeometryError("recover: 3-D problems take a 3-vector target curl");
    require_same_geometry(p.target_jd.geometry(), cell_center_geometry(g),
                          "recover target_jd");
    if (p.smooth_weight < 0.0) throw ParamError("recover: smooth_weight must be >= 0");
    if (p.max_iters < 1) throw ParamError("recover: max_iters must be >= 1");
    if (!(p.step_size > 0.0)) throw ParamError("recover: step_size must be positive");
}

// Accumulates the Jacobian data term and (optionally) its gradient.
double jd_term(const RecoveryProblem& p, const DiffeoMap& phi, VectorField* grad) {
    const LatticeGeometry& g = phi.geometry();
    const ScalarField jd = jacobian_determinant(phi);
    const double vc = g.cell_volume();
    double loss = 0.0;

    if (g.ndim() == 2) {
        const double ihx = 1.0 / (2.0 * g.spacing(0));
        const double ihy = 1.0 / (2.0 * g.spacing(1));
        const auto& px = phi.position(0);
        const auto& py = phi.position(1);
        std::size_t cell = 0;
        for (std::size_t j = 0; j + 1 < g.dim(1); ++j) {
            for (std::size_t i = 0; i + 1 < g.dim(0); ++i, ++cell) {
                const double r = jd[cell] - p.target_jd[cell];
                loss += 0.5 * r * r * vc;
                if (!grad) continue;
                const std::size_t c[4] = {g.index(i, j), g.index(i + 1, j),
                                          g.index(i, j + 1), g.index(i + 1, j + 1)};
                const double sx[4] = {-ihx, ihx, -ihx, ihx};
                const double sy[4] = {-ihy, -ihy, ihy, ihy};
                double A[2][2];
                A[0][0] = (px[c[1]] - px[c[0]] + px[c[3]] - px[c[2]]) * ihx;
                A[1][0] = (py[c[1]] - py[c[0]] + py[c[3]] - py[c[2]]) * ihx;
                A[0][1] = (px[c[2]] - px[c[0]] + px[c[3]] - px[c[1]]) * ihy;
                A[1][1] = (py[c[2]] - py[c[0]] + py[c[3]] - py[c[1]]) * ihy;
                const double cof[2][2] = {{A[1][1], -A[1][0]}, {-A[0][1], A[0][0]}};
                const double w = r * vc;
                for (int k = 0; k < 4; ++k) {
                    grad->component(0)[c[k]] += w * (cof[0][0] * sx[k] + cof[0][1] * sy[k]);
                    grad->component(1)[c[k]] += w * (cof[1][0] * sx[k] + cof[1][1] * sy[k]);
                }
            }
        }
        return loss;
    }

    const double ih[3] = {1.0 / (4.0 * g.spacing(0)), 1.0 / (4.0 * g.spacing(1)),
                          1.0 / (4.0 * g.spacing(2))};
    std::size_t cell = 0;
    for (std::size_t k = 0; k + 1 < g.dim(2); ++k) {
        for (std::size_t j = 0; j + 1 < g.dim(1); ++j) {
            for (std::size_t i = 0; i + 1 < g.dim(0); ++i, ++cell) {
                const double r = jd[cell] - p.target_jd[cell];
                loss += 0.5 * r * r * vc;
                if (!grad) continue;
                std::size_t c[8];
                double s[3][8];
                int idx = 0;
                for (int dk = 0; dk < 2; ++dk)
                    for (int dj = 0; dj < 2; ++dj)
                        for (int di = 0; di < 2; ++di, ++idx) {
                            c[idx] = g.index(i + di, j + dj, k + dk);
                            s[0][idx] = (di ? ih[0] : -ih[0]);
                            s[1][idx] = (dj ? ih[1] : -ih[1]);
                            s[2][idx] = (dk ? ih[2] : -ih[2]);
                        }
                double A[3][3] = {{0}};
                for (int a = 0; a < 3; ++a) {
                    const auto& pp = phi.position(a);
                    for (int m = 0; m < 8; ++m)
                        for (int b = 0; b < 3; ++b) A[a][b] += s[b][m] * pp[c[m]];
                }
                double cof[3][3];
                cof[0][0] = A[1][1] * A[2][2] - A[1][2] * A[2][1];
                cof[0][1] = -(A[1][0] * A[2][2] - A[1][2] * A[2][0]);
                cof[0][2] = A[1][0] * A[2][1] - A[1][1] * A[2][0];
                cof[1][0] = -(A[0][1] * A[2][2] - A[0][2] * A[2][1]);
                cof[1][1] = A[0][0] * A[2][2] - A[0][2] * A[2][0];
                cof[1][2] = -(A[0][0] * A[2][1] - A[0][1] * A[2][0]);
                cof[2][0] = A[0][1] * A[1][2] - A[0][2] * A[1][1];
                cof[2][1] = -(A[0][0] * A[1][2] - A[0][2] * A[1][0]);
                cof[2][2] = A[0][0] * A[1][1] - A[0][1] * A[1][0];
                const double w = r * vc;
                for (int m = 0; m < 8; ++m)
                    for (int a = 0; a < 3; ++a) {
                        double acc = 0.0;
                        for (int b = 0; b < 3; ++b) acc += cof[a][b] * s[b][m];
                        grad->component(a)[c[m]] += w * acc;
                    }
            }
        }
    }
    return loss;
}

double curl_term(const RecoveryProblem& p, const VectorField& disp, VectorField* grad) {
    const LatticeGeometry& g = disp.geometry();
    const double vn = g.cell_volume();
    double loss = 0.0;

    if (g.ndim() == 2) {
        ScalarField c = curl2(disp);
        const ScalarField& cv = std::get<ScalarField>(p.target_curl);
        std::vector<double> r(c.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] = c[i] - cv[i];
            loss += 0.5 * r[i] * r[i] * vn;
        }
        if (grad) {
            for (double& v : r) v *= vn;
            detail::axis_derivative_adjoint(g, r, 0, grad->component(1));
            for (double& v : r) v = -v;
            detail::axis_derivative_adjoint(g, r, 1, grad->component(0));
        }
        return loss;
    }

    VectorField c = curl3(disp);
    const VectorField& cv = std::get<VectorField>(p.target_curl);
    // c_k = D_{ax_a}(u_{comp_a}) - D_{ax_b}(u_{comp_b})
    const int comp_a[3] = {2, 0, 1}, ax_a[3] = {1, 2, 0};
    const int comp_b[3] = {1, 2, 0}, ax_b[3] = {2, 0, 1};
    std::vector<double> r(disp.size());
    for (int k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] = c.component(k)[i] - cv.component(k)[i];
            loss += 0.5 * r[i] * r[i] * vn;
        }
        if (grad) {
            for (double& v : r) v *= vn;
            detail::axis_derivative_adjoint(g, r, ax_a[k], grad->component(comp_a[k]));
            for (double& v : r) v = -v;
            detail::axis_derivative_adjoint(g, r, ax_b[k], grad->component(comp_b[k]));
        }
    }
    return loss;
}

double smooth_term(const RecoveryProblem& p, const VectorField& disp, VectorField* grad) {
    if (p.smooth_weight == 0.0) return 0.0;
    const LatticeGeometry& g = disp.geometry();
    const double vn = g.cell_volume();
    const double lam = p.smooth_weight;
    double loss = 0.0;
    std::vector<double> da(disp.size()), lap(disp.size()), adj(disp.size());

    for (int a = 0; a < g.ndim(); ++a) {
        std::fill(lap.begin(), lap.end(), 0.0);
        for (int b = 0; b < g.ndim(); ++b) {
            detail::axis_derivative(g, disp.component(a), b, da);
            std::vector<double> dd(disp.size());
            detail::axis_derivative(g, da, b, dd);
            for (std::size_t i = 0; i < lap.size(); ++i) lap[i] += dd[i];
        }
        for (double v : lap) loss += 0.5 * lam * v * v * vn;
        if (grad) {
            for (double& v : lap) v *= lam * vn;
            for (int b = 0; b < g.ndim(); ++b) {
                std::fill(adj.begin(), adj.end(), 0.0);
                detail::axis_derivative_adjoint(g, lap, b, adj);
                detail::axis_derivative_adjoint(g, adj, b, grad->component(a));
            }
        }
    }
    return loss;
}

void apply_mask(const LatticeGeometry& g, VectorField& grad) {
    std::size_t ijk[3];
    for (std::size_t lin = 0; lin < grad.size(); ++lin) {
        g.coords(lin, ijk);
        for (int a = 0; a < g.ndim(); ++a)
            if (ijk[a] == 0 || ijk[a] + 1 == g.dim(a)) grad.component(a)[lin] = 0.0;
    }
}

double loss_impl(const RecoveryProblem& p, const DiffeoMap& phi, VectorField* grad) {
    if (grad)
        for (int a = 0; a < phi.ndim(); ++a)
            std::fill(grad->component(a).begin(), grad->component(a).end(), 0.0);
    const VectorField disp = phi.displacement();
    double loss = jd_term(p, phi, grad);
    loss += curl_term(p, disp, grad);
    loss += smooth_term(p, disp, grad);
    if (!std::isfinite(loss)) throw NumericalError("recover: loss is not finite");
    if (grad) apply_mask(phi.geometry(), *grad);
    return loss;
}

} // namespace

double recovery_loss(const RecoveryProblem& p, const DiffeoMap& phi) {
    return loss_impl(p, phi, nullptr);
}

double recovery_loss_and_gradient(const RecoveryProblem& p, const DiffeoMap& phi,
                                  VectorField& grad) {
    return loss_impl(p, phi, &grad);
}

VectorField recovery_dof_mask(const LatticeGeometry& g) {
    VectorField m(g, 1.0);
    apply_mask(g, m);
    return m;
}

DiffeoMap synthesize_t0(const LatticeGeometry& g, double amplitude, std::uint32_t seed) {
    require_stencil_dims(g, "synthesize_t0");
    if (amplitude < 0.0) throw ParamError("synthesize_t0: amplitude must be >= 0");
    const int nd = g.ndim();
    const std::size_t n = g.node_count();

    std::mt19937 gen(seed);
    auto unit = [&gen]() { return double(gen()) / 4294967296.0; }; // [0,1)

    DiffeoMap t0 = DiffeoMap::identity(g);
    constexpr int modes = 3;
    std::size_t ijk[3];
    for (int a = 0; a < nd; ++a) {
        int k[modes][3];
        double coef[modes];
        for (int m = 0; m < modes; ++m) {
            for (int b = 0; b < nd; ++b) k[m][b] = 1 + int(gen() % 3);
            coef[m] = 2.0 * unit() - 1.0;
        }
        std::vector<double> d(n, 0.0);
        double dmax = 0.0;
        for (std::size_t lin = 0; lin < n; ++lin) {
            g.coords(lin, ijk);
            double x[3];
            for (int b = 0; b < nd; ++b) x[b] = double(ijk[b]) / double(g.dim(b) - 1);
            double v = 0.0;
            for (int m = 0; m < modes; ++m) {
                double term = coef[m];
                for (int b = 0; b < nd; ++b) {
                    const double arg = std::numbers::pi * double(k[m][b]) * x[b];
                    term *= (b == a) ? std::sin(arg) : std::cos(arg);
                }
                v += term;
            }
            d[lin] = v;
            dmax = std::max(dmax, std::abs(v));
        }
        const double scale = (dmax > 0.0) ? amplitude * g.extent(a) / dmax : 0.0;
        for (std::size_t lin = 0; lin < n; ++lin) {
            g.coords(lin, ijk);
            const bool wall = (ijk[a] == 0 || ijk[a] + 1 == g.dim(a));
            if (!wall) t0.position(a)[lin] += scale * d[lin];
        }
    }

    const ScalarField jd = jacobian_determinant(t0);
    const double mn = min_value(jd);
    if (!(mn > 0.0))
        throw ParamError("synthesize_t0: amplitude " + std::to_string(amplitude) +
                         " folds the map (min jacobian " + std::to_string(mn) + ")");
    return t0;
}

RecoveryResult recover(const RecoveryProblem& p) {
    validate_problem(p);
    const LatticeGeometry& g = node_geometry(p);
    const int nd = g.ndim();
    const std::size_t n = g.node_count();

    RecoveryResult res;
    // The prescribed Jacobian of a box-to-box map should integrate to the
    // domain volume; warn (but keep going) when it does not.
    {
        double sum = 0.0;
        for (double v : p.target_jd.values()) sum += v;
        sum *= g.cell_volume();
        const double vol = g.domain_volume();
        if (std::abs(sum - vol) > 0.01 * vol)
            res.warnings.push_back("target_jd integrates to " + std::to_string(sum) +
                                   ", domain volume is " + std::to_string(vol));
    }

    DiffeoMap phi = DiffeoMap::identity(g);
    VectorField grad(g);
    double loss = recovery_loss_and_gradient(p, phi, grad);

    auto dot = [nd, n](const VectorField& x, const VectorField& y) {
        double s = 0.0;
        for (int a = 0; a < nd; ++a)
            for (std::size_t i = 0; i < n; ++i) s += x.component(a)[i] * y.component(a)[i];
        return s;
    };

    res.loss_history.push_back(loss);
    res.grad_norm_history.push_back(std::sqrt(dot(grad, grad)));

    constexpr double armijo = 1e-4;
    constexpr double min_step = 1e-20;
    double step = p.step_size;
    DiffeoMap trial(g);
    VectorField prev_grad(g);

    for (int iter = 0; iter < p.max_iters; ++iter) {
        const double gn2 = dot(grad, grad);
        if (gn2 == 0.0) {
            res.converged = true;
            break;
        }

        double t = step;
        double trial_loss = std::numeric_limits<double>::infinity();
        bool accepted = false;
        while (t >= min_step) {
            for (int a = 0; a < nd; ++a)
                for (std::size_t i = 0; i < n; ++i)
                    trial.position(a)[i] = phi.position(a)[i] - t * grad.component(a)[i];
            trial_loss = recovery_loss(p, trial);
            if (trial_loss <= loss - armijo * t * gn2) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // When the largest provable decrease is below fp resolution the
            // iterate is at the numerical floor; otherwise something is wrong.
            if (armijo * min_step * gn2 > 16.0 * std::numeric_limits<double>::epsilon() *
                                              std::max(loss, 1e-300))
                throw StallError("recover: line search stalled at iteration " +
                                 std::to_string(iter) + " (loss " + std::to_string(loss) +
                                 ", grad norm " + std::to_string(std::sqrt(gn2)) + ")");
            res.converged = true;
            break;
        }

        const double prev_loss = loss;
        for (int a = 0; a < nd; ++a) prev_grad.component(a) = grad.component(a);
        std::swap(phi, trial);
        recovery_loss_and_gradient(p, phi, grad); // refresh the gradient
        loss = trial_loss;

        res.loss_history.push_back(loss);
        res.grad_norm_history.push_back(std::sqrt(dot(grad, grad)));

        if (prev_loss - loss < p.tol * std::max(prev_loss, 1e-300)) {
            res.converged = true;
            break;
        }

        // Barzilai-Borwein step seed for the next iteration, clamped to the
        // accepted step when the curvature estimate is unusable.
        double sy = 0.0, ss = 0.0;
        for (int a = 0; a < nd; ++a)
            for (std::size_t i = 0; i < n; ++i) {
                const double s_i = -t * prev_grad.component(a)[i];
                const double y_i = grad.component(a)[i] - prev_grad.component(a)[i];
                sy += s_i * y_i;
                ss += s_i * s_i;
            }
        step = (sy > 0.0) ? std::max(ss / sy, min_step) : t * 2.0;
    }

    res.map = std::move(phi);
    return res;
}

} // namespace voxdef
