#include "voxdef/voxdef.h"

#include <cstring>
#include <string>
#include <vector>

#include "voxdef/deformation.hpp"
#include "voxdef/errors.hpp"
#include "voxdef/features.hpp"
#include "voxdef/fd_ops.hpp"
#include "voxdef/field.hpp"
#include "voxdef/metrics.hpp"
#include "voxdef/nifti.hpp"
#include "voxdef/phantom.hpp"
#include "voxdef/preprocess.hpp"
#include "voxdef/recovery.hpp"

struct vd_field {
    voxdef::ScalarField f;
};
struct vd_labels {
    voxdef::LabelVolume l;
};
struct vd_map {
    voxdef::DiffeoMap m;
};
struct vd_stack {
    voxdef::ChannelStack s;
};
struct vd_recovery {
    voxdef::RecoveryResult r;
    vd_map map_view;
};

namespace {

thread_local std::string g_last_error;

vd_status fail(vd_status code, const char* what) {
    g_last_error = what;
    return code;
}

// Runs fn, translating the library's exceptions into status codes.
template <typename Fn>
vd_status guarded(Fn&& fn) {
    try {
        fn();
        return VD_OK;
    } catch (const voxdef::IoError& e) {
        return fail(VD_ERROR_IO, e.what());
    } catch (const voxdef::FormatError& e) {
        return fail(VD_ERROR_FORMAT, e.what());
    } catch (const voxdef::UnsupportedError& e) {
        return fail(VD_ERROR_UNSUPPORTED, e.what());
    } catch (const voxdef::GeometryError& e) {
        return fail(VD_ERROR_GEOMETRY, e.what());
    } catch (const voxdef::ParamError& e) {
        return fail(VD_ERROR_PARAM, e.what());
    } catch (const voxdef::DegenerateInputError& e) {
        return fail(VD_ERROR_DEGENERATE, e.what());
    } catch (const voxdef::ConvergenceError& e) {
        return fail(VD_ERROR_CONVERGENCE, e.what());
    } catch (const voxdef::FoldingError& e) {
        return fail(VD_ERROR_FOLDING, e.what());
    } catch (const voxdef::StallError& e) {
        return fail(VD_ERROR_STALL, e.what());
    } catch (const voxdef::NumericalError& e) {
        return fail(VD_ERROR_NUMERIC, e.what());
    } catch (const voxdef::UndefinedMetricError& e) {
        return fail(VD_ERROR_UNDEFINED_METRIC, e.what());
    } catch (const std::exception& e) {
        return fail(VD_ERROR_INTERNAL, e.what());
    } catch (...) {
        return fail(VD_ERROR_INTERNAL, "unknown error");
    }
}

vd_status require(bool ok, const char* what) {
    return ok ? VD_OK : fail(VD_ERROR_PARAM, what);
}

voxdef::MonitorSpec monitor_spec(const vd_extract_params& p) {
    voxdef::MonitorSpec s;
    s.alpha = p.alpha;
    s.beta = p.beta;
    s.floor = p.floor_;
    return s;
}

voxdef::DeformationConfig deform_config(const vd_extract_params& p) {
    voxdef::DeformationConfig c;
    c.time_steps = p.time_steps;
    c.integrator = p.use_rk4 ? voxdef::Integrator::rk4 : voxdef::Integrator::euler;
    return c;
}

} // namespace

const char* vd_version(void) {
    return "0.1.0";
}

const char* vd_last_error(void) {
    return g_last_error.c_str();
}

/* ---- scalar volumes ---- */

vd_status vd_field_read(const char* path, vd_field** out) {
    if (vd_status s = require(path && out, "vd_field_read: null argument")) return s;
    return guarded([&] { *out = new vd_field{voxdef::read_scalar_volume(path)}; });
}

vd_status vd_field_write(const vd_field* f, const char* path) {
    if (vd_status s = require(f && path, "vd_field_write: null argument")) return s;
    return guarded([&] { voxdef::write_volume(f->f, path); });
}

vd_status vd_field_create(int ndim, const size_t* dims, const double* spacing_mm,
                          const double* origin_mm, const double* values, vd_field** out) {
    if (vd_status s = require(dims && spacing_mm && values && out,
                              "vd_field_create: null argument"))
        return s;
    return guarded([&] {
        voxdef::LatticeGeometry g(ndim, dims, spacing_mm, origin_mm);
        std::vector<double> v(values, values + g.node_count());
        auto f = new vd_field{voxdef::ScalarField(g, std::move(v))};
        voxdef::require_finite(f->f, "vd_field_create");
        *out = f;
    });
}

void vd_field_free(vd_field* f) {
    delete f;
}

int vd_field_ndim(const vd_field* f) {
    return f->f.geometry().ndim();
}

void vd_field_dims(const vd_field* f, size_t dims[3]) {
    for (int a = 0; a < 3; ++a)
        dims[a] = a < f->f.geometry().ndim() ? f->f.geometry().dim(a) : 1;
}

void vd_field_spacing(const vd_field* f, double spacing_mm[3]) {
    for (int a = 0; a < 3; ++a)
        spacing_mm[a] = a < f->f.geometry().ndim() ? f->f.geometry().spacing(a) : 1.0;
}

size_t vd_field_value_count(const vd_field* f) {
    return f->f.size();
}

const double* vd_field_values(const vd_field* f) {
    return f->f.values().data();
}

void vd_field_stats(const vd_field* f, double* min, double* max, double* mean) {
    if (min) *min = voxdef::min_value(f->f);
    if (max) *max = voxdef::max_value(f->f);
    if (mean) *mean = voxdef::node_mean(f->f);
}

/* ---- label volumes ---- */

vd_status vd_labels_read(const char* path, vd_labels** out) {
    if (vd_status s = require(path && out, "vd_labels_read: null argument")) return s;
    return guarded([&] { *out = new vd_labels{voxdef::read_label_volume(path)}; });
}

vd_status vd_labels_write(const vd_labels* l, const char* path) {
    if (vd_status s = require(l && path, "vd_labels_write: null argument")) return s;
    return guarded([&] { voxdef::write_volume(l->l, path); });
}

vd_status vd_labels_create(int ndim, const size_t* dims, const double* spacing_mm,
                           const uint8_t* labels, vd_labels** out) {
    if (vd_status s = require(dims && spacing_mm && labels && out,
                              "vd_labels_create: null argument"))
        return s;
    return guarded([&] {
        voxdef::LatticeGeometry g(ndim, dims, spacing_mm);
        std::vector<std::uint8_t> v(labels, labels + g.node_count());
        *out = new vd_labels{voxdef::LabelVolume(g, std::move(v))};
    });
}

void vd_labels_free(vd_labels* l) {
    delete l;
}

size_t vd_labels_value_count(const vd_labels* l) {
    return l->l.size();
}

const uint8_t* vd_labels_values(const vd_labels* l) {
    return l->l.labels().data();
}

/* ---- preprocessing ---- */

vd_status vd_gaussian_subtract(const vd_field* in, double sigma_mm, vd_field** out) {
    if (vd_status s = require(in && out, "vd_gaussian_subtract: null argument")) return s;
    return guarded([&] { *out = new vd_field{voxdef::gaussian_subtract(in->f, sigma_mm)}; });
}

vd_status vd_mask_from_nonzero(const vd_field* in, vd_labels** out) {
    if (vd_status s = require(in && out, "vd_mask_from_nonzero: null argument")) return s;
    return guarded([&] { *out = new vd_labels{voxdef::mask_from_nonzero(in->f)}; });
}

vd_status vd_zscore(const vd_field* in, const vd_labels* mask, vd_field** out) {
    if (vd_status s = require(in && out, "vd_zscore: null argument")) return s;
    return guarded([&] {
        const voxdef::LabelVolume m = mask ? mask->l : voxdef::mask_from_nonzero(in->f);
        *out = new vd_field{voxdef::zscore(in->f, m)};
    });
}

vd_status vd_clahe(const vd_field* in, int tiles, double clip, vd_field** out) {
    if (vd_status s = require(in && out, "vd_clahe: null argument")) return s;
    return guarded([&] {
        voxdef::PreprocessConfig cfg;
        cfg.clahe_tiles = tiles;
        cfg.clahe_clip = clip;
        *out = new vd_field{voxdef::clahe(in->f, cfg)};
    });
}

vd_status vd_preprocess_chain(const vd_field* in, double sigma_mm, int tiles, double clip,
                              vd_field** out) {
    if (vd_status s = require(in && out, "vd_preprocess_chain: null argument")) return s;
    return guarded([&] {
        voxdef::PreprocessConfig cfg;
        cfg.gaussian_sigma = sigma_mm;
        cfg.clahe_tiles = tiles;
        cfg.clahe_clip = clip;
        *out = new vd_field{voxdef::preprocess_chain(in->f, cfg)};
    });
}

/* ---- deformation features ---- */

void vd_extract_params_init(vd_extract_params* p) {
    p->alpha = 1.0;
    p->beta = 1.0;
    p->floor_ = 0.1;
    p->time_steps = 100;
    p->use_rk4 = 1;
    p->cv_components = 0;
}

vd_status vd_generate_grid(const vd_field* image, const vd_extract_params* p, vd_map** out) {
    if (vd_status s = require(image && p && out, "vd_generate_grid: null argument"))
        return s;
    return guarded([&] {
        *out = new vd_map{voxdef::generate_grid(image->f, monitor_spec(*p),
                                                deform_config(*p))};
    });
}

void vd_map_free(vd_map* m) {
    delete m;
}

vd_status vd_map_write_grid_text(const vd_map* m, const char* path) {
    if (vd_status s = require(m && path, "vd_map_write_grid_text: null argument")) return s;
    return guarded([&] { voxdef::export_grid_text(m->m, path); });
}

vd_status vd_map_jacobian(const vd_map* m, vd_field** out) {
    if (vd_status s = require(m && out, "vd_map_jacobian: null argument")) return s;
    return guarded([&] { *out = new vd_field{voxdef::jacobian_determinant(m->m)}; });
}

vd_status vd_map_displacement_curl(const vd_map* m, vd_stack** out) {
    if (vd_status s = require(m && out, "vd_map_displacement_curl: null argument")) return s;
    return guarded([&] {
        const voxdef::VectorField disp = m->m.displacement();
        auto stack = new vd_stack;
        if (m->m.ndim() == 2) {
            stack->s.channels.push_back(voxdef::curl2(disp));
            stack->s.names.push_back("CV");
        } else {
            const voxdef::VectorField c = voxdef::curl3(disp);
            const char* names[3] = {"CVx", "CVy", "CVz"};
            for (int a = 0; a < 3; ++a) {
                stack->s.channels.push_back(voxdef::ScalarField(
                    m->m.geometry(), std::vector<double>(c.component(a))));
                stack->s.names.push_back(names[a]);
            }
        }
        *out = stack;
    });
}

vd_status vd_map_compare(const vd_map* a, const vd_map* b, double* mean_cells,
                         double* max_cells) {
    if (vd_status s = require(a && b, "vd_map_compare: null argument")) return s;
    return guarded([&] {
        voxdef::require_same_geometry(a->m.geometry(), b->m.geometry(), "vd_map_compare");
        const voxdef::LatticeGeometry& g = a->m.geometry();
        double sum = 0.0, worst = 0.0;
        for (std::size_t i = 0; i < a->m.size(); ++i) {
            double d2 = 0.0;
            for (int ax = 0; ax < g.ndim(); ++ax) {
                const double d =
                    (a->m.position(ax)[i] - b->m.position(ax)[i]) / g.spacing(ax);
                d2 += d * d;
            }
            const double d = std::sqrt(d2);
            sum += d;
            worst = std::max(worst, d);
        }
        if (mean_cells) *mean_cells = sum / double(a->m.size());
        if (max_cells) *max_cells = worst;
    });
}

namespace {

vd_stack* feature_stack(voxdef::FeatureImages&& fi) {
    auto stack = new vd_stack;
    stack->s.channels.push_back(std::move(fi.jd));
    stack->s.names.push_back("JD");
    for (std::size_t i = 0; i < fi.cv.size(); ++i) {
        stack->s.channels.push_back(std::move(fi.cv[i]));
        stack->s.names.push_back(fi.cv_names[i]);
    }
    return stack;
}

} // namespace

vd_status vd_extract_features(const vd_field* t1, const vd_extract_params* p,
                              vd_stack** out) {
    if (vd_status s = require(t1 && p && out, "vd_extract_features: null argument"))
        return s;
    return guarded([&] {
        *out = feature_stack(voxdef::extract_jd_cv(t1->f, monitor_spec(*p),
                                                   deform_config(*p),
                                                   p->cv_components != 0));
    });
}

vd_status vd_extract_features_grid(const vd_field* t1, const vd_extract_params* p,
                                   vd_stack** features, vd_map** grid) {
    if (vd_status s = require(t1 && p, "vd_extract_features_grid: null argument")) return s;
    return guarded([&] {
        voxdef::DiffeoMap phi =
            voxdef::generate_grid(t1->f, monitor_spec(*p), deform_config(*p));
        if (features)
            *features = feature_stack(voxdef::features_from_map(phi, p->cv_components != 0));
        if (grid) *grid = new vd_map{std::move(phi)};
    });
}

/* ---- channel stacks ---- */

vd_status vd_stack_new(vd_stack** out) {
    if (vd_status s = require(out != nullptr, "vd_stack_new: null argument")) return s;
    *out = new vd_stack;
    return VD_OK;
}

vd_status vd_stack_add(vd_stack* s, const char* name, const vd_field* f) {
    if (vd_status st = require(s && name && f, "vd_stack_add: null argument")) return st;
    return guarded([&] {
        if (!s->s.channels.empty())
            voxdef::require_same_geometry(s->s.geometry(), f->f.geometry(), name);
        s->s.channels.push_back(f->f);
        s->s.names.push_back(name);
    });
}

void vd_stack_free(vd_stack* s) {
    delete s;
}

size_t vd_stack_channel_count(const vd_stack* s) {
    return s->s.channel_count();
}

const char* vd_stack_channel_name(const vd_stack* s, size_t i) {
    return i < s->s.names.size() ? s->s.names[i].c_str() : nullptr;
}

const vd_field* vd_stack_channel(const vd_stack* s, size_t i) {
    if (i >= s->s.channels.size()) return nullptr;
    // ScalarField is the first (and only) member of vd_field.
    static_assert(sizeof(vd_field) == sizeof(voxdef::ScalarField));
    return reinterpret_cast<const vd_field*>(&s->s.channels[i]);
}

vd_status vd_stack_write(const vd_stack* s, const char* dir, const char* arm) {
    if (vd_status st = require(s && dir && arm, "vd_stack_write: null argument")) return st;
    if (vd_status st = require(!s->s.channels.empty(), "vd_stack_write: empty stack"))
        return st;
    return guarded([&] { voxdef::write_stack(s->s, dir, arm); });
}

vd_status vd_stack_tile_count(const vd_stack* s, const size_t size[3],
                              const size_t stride[3], size_t* count) {
    if (vd_status st = require(s && size && stride && count,
                               "vd_stack_tile_count: null argument"))
        return st;
    if (vd_status st = require(!s->s.channels.empty(), "vd_stack_tile_count: empty stack"))
        return st;
    return guarded([&] {
        const auto tiles = voxdef::crop_subvolumes(
            s->s, {size[0], size[1], size[2]}, {stride[0], stride[1], stride[2]});
        *count = tiles.size();
    });
}

vd_status vd_stack_write_tiles(const vd_stack* s, const char* dir, const char* arm,
                               const size_t size[3], const size_t stride[3]) {
    if (vd_status st = require(s && dir && arm && size && stride,
                               "vd_stack_write_tiles: null argument"))
        return st;
    if (vd_status st = require(!s->s.channels.empty(), "vd_stack_write_tiles: empty stack"))
        return st;
    return guarded([&] {
        voxdef::write_stack_tiles(s->s, dir, arm, {size[0], size[1], size[2]},
                                  {stride[0], stride[1], stride[2]});
    });
}

/* ---- segmentation metrics ---- */

namespace {

vd_metrics_report to_c_report(const voxdef::MetricsReport& rep) {
    vd_metrics_report out{};
    for (std::size_t i = 0; i < 3 && i < rep.per_class.size(); ++i) {
        const voxdef::ClassMetrics& cm = rep.per_class[i];
        out.classes[i].label = cm.label;
        std::strncpy(out.classes[i].name, cm.name.c_str(), sizeof(out.classes[i].name) - 1);
        out.classes[i].dsc = cm.dsc;
        out.classes[i].hd_defined = cm.hd_mm.has_value();
        out.classes[i].hd_mm = cm.hd_mm.value_or(0.0);
        out.classes[i].avd_defined = cm.avd.has_value();
        out.classes[i].avd = cm.avd.value_or(0.0);
    }
    out.mean_dsc = rep.mean_dsc.value_or(0.0);
    out.mean_hd_defined = rep.mean_hd_mm.has_value();
    out.mean_hd_mm = rep.mean_hd_mm.value_or(0.0);
    out.mean_avd_defined = rep.mean_avd.has_value();
    out.mean_avd = rep.mean_avd.value_or(0.0);
    return out;
}

voxdef::MetricsReport from_c_report(const vd_metrics_report& r) {
    voxdef::MetricsReport rep;
    for (int i = 0; i < 3; ++i) {
        voxdef::ClassMetrics cm;
        cm.label = r.classes[i].label;
        cm.name = r.classes[i].name;
        cm.dsc = r.classes[i].dsc;
        if (r.classes[i].hd_defined) cm.hd_mm = r.classes[i].hd_mm;
        if (r.classes[i].avd_defined) cm.avd = r.classes[i].avd;
        rep.per_class.push_back(std::move(cm));
    }
    rep.mean_dsc = r.mean_dsc;
    if (r.mean_hd_defined) rep.mean_hd_mm = r.mean_hd_mm;
    if (r.mean_avd_defined) rep.mean_avd = r.mean_avd;
    return rep;
}

} // namespace

vd_status vd_evaluate(const vd_labels* pred, const vd_labels* truth,
                      vd_metrics_report* out) {
    if (vd_status s = require(pred && truth && out, "vd_evaluate: null argument")) return s;
    return guarded([&] { *out = to_c_report(voxdef::evaluate(pred->l, truth->l)); });
}

vd_status vd_report_write_csv(const vd_metrics_report* r, const char* path) {
    if (vd_status s = require(r && path, "vd_report_write_csv: null argument")) return s;
    return guarded([&] { voxdef::write_report_csv(from_c_report(*r), path); });
}

vd_status vd_report_write_json(const vd_metrics_report* r, const char* path) {
    if (vd_status s = require(r && path, "vd_report_write_json: null argument")) return s;
    return guarded([&] { voxdef::write_report_json(from_c_report(*r), path); });
}

/* ---- recovery ---- */

void vd_recover_params_init(vd_recover_params* p) {
    p->smooth_weight = 1e-3;
    p->max_iters = 2000;
    p->step_size = 0.1;
    p->tol = 1e-8;
}

vd_status vd_synthesize_t0(int ndim, const size_t* dims, double amplitude, uint32_t seed,
                           vd_map** out) {
    if (vd_status s = require(dims && out, "vd_synthesize_t0: null argument")) return s;
    return guarded([&] {
        std::vector<double> spacing(std::size_t(ndim), 1.0);
        voxdef::LatticeGeometry g(ndim, dims, spacing.data());
        *out = new vd_map{voxdef::synthesize_t0(g, amplitude, seed)};
    });
}

vd_status vd_recover(const vd_field* target_jd, const vd_stack* target_curl,
                     const vd_recover_params* p, vd_recovery** out) {
    if (vd_status s = require(target_jd && target_curl && p && out,
                              "vd_recover: null argument"))
        return s;
    return guarded([&] {
        voxdef::RecoveryProblem prob;
        prob.target_jd = target_jd->f;
        const std::size_t nch = target_curl->s.channel_count();
        if (nch == 1) {
            prob.target_curl = target_curl->s.channels[0];
        } else if (nch == 3) {
            voxdef::VectorField cv(target_curl->s.geometry());
            for (int a = 0; a < 3; ++a)
                cv.component(a) = target_curl->s.channels[std::size_t(a)].values();
            prob.target_curl = std::move(cv);
        } else {
            throw voxdef::ParamError("vd_recover: target curl must have 1 or 3 channels");
        }
        prob.smooth_weight = p->smooth_weight;
        prob.max_iters = p->max_iters;
        prob.step_size = p->step_size;
        prob.tol = p->tol;

        auto rec = new vd_recovery;
        rec->r = voxdef::recover(prob);
        rec->map_view.m = rec->r.map;
        *out = rec;
    });
}

void vd_recovery_free(vd_recovery* r) {
    delete r;
}

const vd_map* vd_recovery_map(const vd_recovery* r) {
    return &r->map_view;
}

int vd_recovery_converged(const vd_recovery* r) {
    return r->r.converged ? 1 : 0;
}

size_t vd_recovery_iteration_count(const vd_recovery* r) {
    return r->r.loss_history.size();
}

void vd_recovery_history(const vd_recovery* r, const double** loss,
                         const double** grad_norm) {
    if (loss) *loss = r->r.loss_history.data();
    if (grad_norm) *grad_norm = r->r.grad_norm_history.data();
}

size_t vd_recovery_warning_count(const vd_recovery* r) {
    return r->r.warnings.size();
}

const char* vd_recovery_warning(const vd_recovery* r, size_t i) {
    return i < r->r.warnings.size() ? r->r.warnings[i].c_str() : nullptr;
}

/* ---- built-in synthetic data ---- */

vd_status vd_phantom(int ndim, const size_t* dims, vd_field** out) {
    if (vd_status s = require(dims && out, "vd_phantom: null argument")) return s;
    return guarded([&] {
        if (ndim == 2)
            *out = new vd_field{voxdef::brain_phantom_2d(dims[0], dims[1])};
        else if (ndim == 3)
            *out = new vd_field{voxdef::brain_phantom_3d(dims[0], dims[1], dims[2])};
        else
            throw voxdef::ParamError("vd_phantom: ndim must be 2 or 3");
    });
}

vd_status vd_phantom_labels(const size_t dims[3], vd_labels** out) {
    if (vd_status s = require(dims && out, "vd_phantom_labels: null argument")) return s;
    return guarded([&] {
        *out = new vd_labels{voxdef::phantom_labels_3d(dims[0], dims[1], dims[2])};
    });
}
