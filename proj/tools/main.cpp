// voxdef command-line tool: preprocessing, JD/CV feature extraction, channel
// stacking, segmentation scoring and the grid-recovery demo, all through the
// libvoxdef C API.

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "voxdef/voxdef.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void die(const std::string& msg) {
    std::cerr << "voxdef: " << msg << "\n";
    std::exit(1);
}

void check(vd_status s, const std::string& context) {
    if (s != VD_OK) die(context + ": " + vd_last_error());
}

struct FieldPtr {
    vd_field* p = nullptr;
    ~FieldPtr() { vd_field_free(p); }
};
struct LabelsPtr {
    vd_labels* p = nullptr;
    ~LabelsPtr() { vd_labels_free(p); }
};
struct StackPtr {
    vd_stack* p = nullptr;
    ~StackPtr() { vd_stack_free(p); }
};
struct MapPtr {
    vd_map* p = nullptr;
    ~MapPtr() { vd_map_free(p); }
};
struct RecoveryPtr {
    vd_recovery* p = nullptr;
    ~RecoveryPtr() { vd_recovery_free(p); }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) die("cannot write '" + path.string() + "'");
    f << text;
    if (!f) die("failed writing '" + path.string() + "'");
}

// ---- preprocess ----

int cmd_preprocess(const std::vector<std::string>& inputs, const std::string& out_dir,
                   double sigma, int tiles, double clip) {
    fs::create_directories(out_dir);
    json prov;
    prov["command"] = "preprocess";
    prov["config"] = {{"sigma_mm", sigma}, {"clahe_tiles", tiles}, {"clahe_clip", clip}};
    prov["volumes"] = json::array();

    for (const std::string& in : inputs) {
        FieldPtr field;
        check(vd_field_read(in.c_str(), &field.p), "reading '" + in + "'");
        FieldPtr result;
        check(vd_preprocess_chain(field.p, sigma, tiles, clip, &result.p),
              "preprocessing '" + in + "'");

        std::string stem = fs::path(in).filename().string();
        // Strip .nii / .nii.gz
        for (const char* suffix : {".gz", ".nii"})
            if (stem.size() > std::strlen(suffix) &&
                stem.compare(stem.size() - std::strlen(suffix), std::string::npos, suffix) == 0)
                stem.resize(stem.size() - std::strlen(suffix));
        const fs::path out = fs::path(out_dir) / (stem + "_pp.nii");
        check(vd_field_write(result.p, out.string().c_str()), "writing '" + out.string() + "'");
        prov["volumes"].push_back({{"input", in}, {"output", out.string()}});
        std::cout << in << " -> " << out.string() << "\n";
    }
    write_text(fs::path(out_dir) / "provenance.json", prov.dump(2) + "\n");
    return 0;
}

// ---- extract ----

int cmd_extract(const std::string& t1_path, bool demo, std::size_t demo_size,
                const std::string& out_dir, const vd_extract_params& params) {
    fs::create_directories(out_dir);

    FieldPtr t1;
    if (demo) {
        const std::size_t dims[2] = {demo_size, demo_size};
        check(vd_phantom(2, dims, &t1.p), "building phantom");
        check(vd_field_write(t1.p, (fs::path(out_dir) / "phantom.nii").string().c_str()),
              "writing phantom");
    } else {
        check(vd_field_read(t1_path.c_str(), &t1.p), "reading '" + t1_path + "'");
    }

    StackPtr features;
    MapPtr grid;
    check(vd_extract_features_grid(t1.p, &params, &features.p, &grid.p),
          "extracting features");

    const fs::path dir(out_dir);
    check(vd_map_write_grid_text(grid.p, (dir / "grid.txt").string().c_str()),
          "writing grid.txt");
    for (std::size_t i = 0; i < vd_stack_channel_count(features.p); ++i) {
        std::string name = vd_stack_channel_name(features.p, i);
        for (char& c : name) c = char(std::tolower(static_cast<unsigned char>(c)));
        const fs::path out = dir / (name + ".nii");
        check(vd_field_write(vd_stack_channel(features.p, i), out.string().c_str()),
              "writing '" + out.string() + "'");
        std::cout << "wrote " << out.string() << "\n";
    }
    std::cout << "wrote " << (dir / "grid.txt").string() << "\n";
    return 0;
}

// ---- stack ----

struct ArmSpec {
    bool t1ir, flair, jd, cv;
};

ArmSpec arm_spec(const std::string& arm) {
    if (arm == "single") return {false, false, false, false};
    if (arm == "single+jd") return {false, false, true, false};
    if (arm == "single+cv") return {false, false, false, true};
    if (arm == "single+jdcv") return {false, false, true, true};
    if (arm == "three") return {true, true, false, false};
    if (arm == "three+jd") return {true, true, true, false};
    if (arm == "three+cv") return {true, true, false, true};
    if (arm == "three+jdcv") return {true, true, true, true};
    die("unknown arm '" + arm + "' (single, three, single+jd, single+cv, single+jdcv, "
        "three+jd, three+cv, three+jdcv)");
}

int cmd_stack(const std::string& arm, const std::string& t1, const std::string& t1ir,
              const std::string& flair, const std::string& jd, const std::string& cv,
              const std::string& out_dir, bool tiles, std::size_t tile_size,
              std::size_t tile_stride) {
    const ArmSpec spec = arm_spec(arm);
    std::vector<std::pair<std::string, std::string>> channels; // name, path
    channels.emplace_back("T1", t1);
    if (spec.t1ir) channels.emplace_back("T1-IR", t1ir);
    if (spec.flair) channels.emplace_back("FLAIR", flair);
    if (spec.jd) channels.emplace_back("JD", jd);
    if (spec.cv) channels.emplace_back("CV", cv);
    for (const auto& [name, path] : channels)
        if (path.empty()) die("arm '" + arm + "' needs a path for channel " + name);

    StackPtr stack;
    check(vd_stack_new(&stack.p), "stack");
    std::vector<FieldPtr> fields(channels.size());
    for (std::size_t i = 0; i < channels.size(); ++i) {
        check(vd_field_read(channels[i].second.c_str(), &fields[i].p),
              "reading '" + channels[i].second + "'");
        check(vd_stack_add(stack.p, channels[i].first.c_str(), fields[i].p),
              "adding channel " + channels[i].first);
    }

    check(vd_stack_write(stack.p, out_dir.c_str(), arm.c_str()), "writing stack");
    std::cout << "wrote " << channels.size() << "-channel stack to " << out_dir << "\n";

    if (tiles) {
        const std::size_t size[3] = {tile_size, tile_size, tile_size};
        const std::size_t stride[3] = {tile_stride, tile_stride, tile_stride};
        std::size_t count = 0;
        check(vd_stack_tile_count(stack.p, size, stride, &count), "tiling");
        check(vd_stack_write_tiles(stack.p, out_dir.c_str(), arm.c_str(), size, stride),
              "writing tiles");
        std::cout << "wrote " << count << " tiles (size " << tile_size << ", stride "
                  << tile_stride << ")\n";
    }
    return 0;
}

// ---- eval ----

int cmd_eval(const std::string& pred, const std::string& truth, const std::string& out_dir) {
    LabelsPtr p, t;
    check(vd_labels_read(pred.c_str(), &p.p), "reading '" + pred + "'");
    check(vd_labels_read(truth.c_str(), &t.p), "reading '" + truth + "'");

    vd_metrics_report rep;
    check(vd_evaluate(p.p, t.p, &rep), "evaluating");

    fs::create_directories(out_dir);
    check(vd_report_write_csv(&rep, (fs::path(out_dir) / "report.csv").string().c_str()),
          "writing report.csv");
    check(vd_report_write_json(&rep, (fs::path(out_dir) / "report.json").string().c_str()),
          "writing report.json");

    auto cell = [](double v, int defined) {
        char buf[32];
        if (!defined) return std::string("undefined");
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        return std::string(buf);
    };
    std::printf("%-6s %10s %10s %10s\n", "class", "dsc", "hd_mm", "avd");
    for (const vd_class_metrics& c : rep.classes)
        std::printf("%-6s %10.4f %10s %10s\n", c.name, c.dsc,
                    cell(c.hd_mm, c.hd_defined).c_str(), cell(c.avd, c.avd_defined).c_str());
    std::printf("%-6s %10.4f %10s %10s\n", "mean", rep.mean_dsc,
                cell(rep.mean_hd_mm, rep.mean_hd_defined).c_str(),
                cell(rep.mean_avd, rep.mean_avd_defined).c_str());
    return 0;
}

// ---- recover ----

int cmd_recover(std::size_t size, double amplitude, unsigned seed, double lambda,
                int iters, double step, double tol, const std::string& out_dir) {
    fs::create_directories(out_dir);

    MapPtr t0;
    const std::size_t dims[2] = {size, size};
    check(vd_synthesize_t0(2, dims, amplitude, seed, &t0.p), "synthesizing T0");

    FieldPtr jd;
    check(vd_map_jacobian(t0.p, &jd.p), "jacobian of T0");
    StackPtr curl;
    check(vd_map_displacement_curl(t0.p, &curl.p), "curl of T0");

    vd_recover_params params;
    vd_recover_params_init(&params);
    params.smooth_weight = lambda;
    params.max_iters = iters;
    params.step_size = step;
    params.tol = tol;

    RecoveryPtr rec;
    check(vd_recover(jd.p, curl.p, &params, &rec.p), "recovering");
    for (std::size_t i = 0; i < vd_recovery_warning_count(rec.p); ++i)
        std::cerr << "warning: " << vd_recovery_warning(rec.p, i) << "\n";

    double mean_err = 0.0, max_err = 0.0;
    check(vd_map_compare(vd_recovery_map(rec.p), t0.p, &mean_err, &max_err), "comparing");

    const std::size_t n = vd_recovery_iteration_count(rec.p);
    const double *loss = nullptr, *gnorm = nullptr;
    vd_recovery_history(rec.p, &loss, &gnorm);
    {
        std::string csv = "iter,loss,grad_norm\n";
        char line[96];
        for (std::size_t i = 0; i < n; ++i) {
            std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", i, loss[i], gnorm[i]);
            csv += line;
        }
        write_text(fs::path(out_dir) / "loss.csv", csv);
    }
    check(vd_map_write_grid_text(vd_recovery_map(rec.p),
                                 (fs::path(out_dir) / "recovered_grid.txt").string().c_str()),
          "writing recovered grid");
    check(vd_map_write_grid_text(t0.p, (fs::path(out_dir) / "t0_grid.txt").string().c_str()),
          "writing t0 grid");

    std::printf("converged: %s after %zu evaluations\n",
                vd_recovery_converged(rec.p) ? "yes" : "no", n);
    std::printf("final loss: %.6g\n", loss[n - 1]);
    std::printf("node error vs T0: mean %.6f cells, max %.6f cells\n", mean_err, max_err);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"voxdef: deformation-based JD/CV features, MRI preprocessing and "
                 "segmentation scoring"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(vd_version()));

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "Gaussian-subtract, z-score and CLAHE");
    std::vector<std::string> pre_in;
    std::string pre_out = "preprocessed";
    double sigma = 2.0, clip = 0.01;
    int tiles = 8;
    pre->add_option("--in", pre_in, "input volumes")->required()->expected(-1);
    pre->add_option("--out", pre_out, "output directory");
    pre->add_option("--sigma", sigma, "Gaussian sigma in mm");
    pre->add_option("--clahe-tiles", tiles, "CLAHE tiles per in-plane axis");
    pre->add_option("--clahe-clip", clip, "CLAHE relative clip limit in (0,1]");

    // extract
    auto* ext = app.add_subcommand("extract", "JD/CV feature images and grid export");
    std::string ext_t1, ext_out = "features";
    bool ext_demo = false, ext_cv_components = false;
    std::size_t demo_size = 65;
    vd_extract_params params;
    vd_extract_params_init(&params);
    std::string integrator = "rk4";
    ext->add_option("--t1", ext_t1, "T1 volume to derive features from");
    ext->add_flag("--demo", ext_demo, "use the built-in synthetic phantom");
    ext->add_option("--demo-size", demo_size, "phantom grid size");
    ext->add_option("--out", ext_out, "output directory");
    ext->add_option("--alpha", params.alpha, "brightness weight");
    ext->add_option("--beta", params.beta, "gradient weight");
    ext->add_option("--floor", params.floor_, "monitor floor in (0,1]");
    ext->add_option("--steps", params.time_steps, "flow time steps");
    ext->add_option("--integrator", integrator, "euler or rk4")
        ->check(CLI::IsMember({"euler", "rk4"}));
    ext->add_flag("--cv-components", ext_cv_components,
                  "emit CVx/CVy/CVz instead of the curl magnitude (3-D)");

    // stack
    auto* stk = app.add_subcommand("stack", "assemble a multi-channel input stack");
    std::string arm = "single", s_t1, s_t1ir, s_flair, s_jd, s_cv, stk_out = "stack";
    bool do_tiles = false;
    std::size_t tile_size = 80, tile_stride = 80;
    stk->add_option("--arm", arm, "experiment arm")->required();
    stk->add_option("--t1", s_t1, "T1 volume")->required();
    stk->add_option("--t1ir", s_t1ir, "T1-IR volume");
    stk->add_option("--flair", s_flair, "T2-FLAIR volume");
    stk->add_option("--jd", s_jd, "JD feature volume");
    stk->add_option("--cv", s_cv, "CV feature volume");
    stk->add_option("--out", stk_out, "output directory");
    stk->add_flag("--tiles", do_tiles, "also write overlap tiles");
    stk->add_option("--tile-size", tile_size, "tile edge length");
    stk->add_option("--tile-stride", tile_stride, "tile stride");

    // eval
    auto* ev = app.add_subcommand("eval", "score a predicted segmentation");
    std::string pred, truth, ev_out = "eval";
    ev->add_option("--pred", pred, "predicted label volume")->required();
    ev->add_option("--truth", truth, "ground-truth label volume")->required();
    ev->add_option("--out", ev_out, "output directory");

    // recover
    auto* rc = app.add_subcommand("recover", "reconstruct a synthetic map from JD + curl");
    std::size_t rc_size = 65;
    double amplitude = 0.05, lambda = 1e-3, step = 0.1, tol = 1e-8;
    unsigned seed = 7;
    int iters = 2000;
    std::string rc_out = "recovery";
    rc->add_option("--size", rc_size, "grid size per axis");
    rc->add_option("--amplitude", amplitude, "T0 displacement as a fraction of the domain");
    rc->add_option("--seed", seed, "T0 synthesis seed");
    rc->add_option("--lambda", lambda, "smoothness weight");
    rc->add_option("--iters", iters, "iteration cap");
    rc->add_option("--step", step, "initial gradient step");
    rc->add_option("--tol", tol, "relative loss-decrease stop");
    rc->add_option("--out", rc_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (pre->parsed()) return cmd_preprocess(pre_in, pre_out, sigma, tiles, clip);
    if (ext->parsed()) {
        if (!ext_demo && ext_t1.empty()) die("extract needs --t1 <path> or --demo");
        params.use_rk4 = (integrator == "rk4") ? 1 : 0;
        params.cv_components = ext_cv_components ? 1 : 0;
        return cmd_extract(ext_t1, ext_demo, demo_size, ext_out, params);
    }
    if (stk->parsed())
        return cmd_stack(arm, s_t1, s_t1ir, s_flair, s_jd, s_cv, stk_out, do_tiles,
                         tile_size, tile_stride);
    if (ev->parsed()) return cmd_eval(pred, truth, ev_out);
    if (rc->parsed())
        return cmd_recover(rc_size, amplitude, seed, lambda, iters, step, tol, rc_out);
    return 1;
}
