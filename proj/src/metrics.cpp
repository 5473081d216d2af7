#include "voxdef/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "voxdef/errors.hpp"

namespace voxdef {

double dsc(const LabelVolume& pred, const LabelVolume& truth, int label) {
    require_same_geometry(pred.geometry(), truth.geometry(), "dsc");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool in_p = pred.labels()[i] == label;
        const bool in_t = truth.labels()[i] == label;
        tp += in_p && in_t;
        fp += in_p && !in_t;
        fn += !in_p && in_t;
    }
    if (tp + fp + fn == 0) return 1.0; // both empty
    return 2.0 * double(tp) / double(2 * tp + fp + fn);
}

namespace {

std::vector<std::uint8_t> class_mask(const LabelVolume& v, int label) {
    std::vector<std::uint8_t> m(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) m[i] = v.labels()[i] == label;
    return m;
}

// Boundary voxels of a region: set voxels with some 8/26-neighbor outside
// the region (voxels beyond the volume count as outside).
std::vector<std::uint8_t> boundary_of(const LatticeGeometry& g,
                                      const std::vector<std::uint8_t>& mask) {
    std::vector<std::uint8_t> b(mask.size(), 0);
    const std::ptrdiff_t nx = std::ptrdiff_t(g.dim(0));
    const std::ptrdiff_t ny = std::ptrdiff_t(g.dim(1));
    const std::ptrdiff_t nz = (g.ndim() == 3) ? std::ptrdiff_t(g.dim(2)) : 1;
    const std::ptrdiff_t dz_lo = (g.ndim() == 3) ? -1 : 0;
    const std::ptrdiff_t dz_hi = (g.ndim() == 3) ? 1 : 0;
    for (std::ptrdiff_t z = 0; z < nz; ++z) {
        for (std::ptrdiff_t y = 0; y < ny; ++y) {
            for (std::ptrdiff_t x = 0; x < nx; ++x) {
                const std::size_t idx = std::size_t(x + nx * (y + ny * z));
                if (!mask[idx]) continue;
                bool interior = true;
                for (std::ptrdiff_t dz = dz_lo; dz <= dz_hi && interior; ++dz)
                    for (std::ptrdiff_t dy = -1; dy <= 1 && interior; ++dy)
                        for (std::ptrdiff_t dx = -1; dx <= 1 && interior; ++dx) {
                            const std::ptrdiff_t xx = x + dx, yy = y + dy, zz = z + dz;
                            if (xx < 0 || yy < 0 || zz < 0 || xx >= nx || yy >= ny ||
                                zz >= nz) {
                                interior = false;
                            } else if (!mask[std::size_t(xx + nx * (yy + ny * zz))]) {
                                interior = false;
                            }
                        }
                b[idx] = !interior;
            }
        }
    }
    return b;
}

constexpr double kInf = 1e30;

// 1-D squared-distance transform over parabolas at abscissa i*spacing
// (Felzenszwalb & Huttenlocher), exact for squared Euclidean distances.
void dt1d(std::vector<double>& f, double spacing, std::vector<double>& d,
          std::vector<int>& v, std::vector<double>& z) {
    const int n = int(f.size());
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    auto x = [spacing](int i) { return double(i) * spacing; };
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            const int p = v[k];
            s = ((f[q] + x(q) * x(q)) - (f[p] + x(p) * x(p))) / (2.0 * (x(q) - x(p)));
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < x(q)) ++k;
        const double dx = x(q) - x(v[k]);
        d[q] = dx * dx + f[v[k]];
    }
}

// Squared EDT of the whole grid to the nearest set voxel, in mm^2.
std::vector<double> squared_edt(const LatticeGeometry& g,
                                const std::vector<std::uint8_t>& set) {
    std::vector<double> dist(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) dist[i] = set[i] ? 0.0 : kInf;

    std::size_t dims[3] = {1, 1, 1};
    for (int a = 0; a < g.ndim(); ++a) dims[a] = g.dim(a);
    const std::size_t stride[3] = {1, dims[0], dims[0] * dims[1]};

    std::size_t nmax = std::max({dims[0], dims[1], dims[2]});
    std::vector<double> f(nmax), d(nmax), z(nmax + 1);
    std::vector<int> v(nmax);

    for (int a = 0; a < g.ndim(); ++a) {
        const std::size_t n = dims[a], s = stride[a];
        f.resize(n);
        d.resize(n);
        for (std::size_t k = 0; k < dims[2]; ++k) {
            for (std::size_t j = 0; j < dims[1]; ++j) {
                for (std::size_t i = 0; i < dims[0]; ++i) {
                    const std::size_t c[3] = {i, j, k};
                    if (c[a] != 0) continue;
                    const std::size_t base = i + dims[0] * (j + dims[1] * k);
                    for (std::size_t m = 0; m < n; ++m) f[m] = dist[base + m * s];
                    dt1d(f, g.spacing(a), d, v, z);
                    for (std::size_t m = 0; m < n; ++m) dist[base + m * s] = d[m];
                }
            }
        }
    }
    return dist;
}

double directed_max(const std::vector<std::uint8_t>& from,
                    const std::vector<double>& sq_edt_to) {
    double worst = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i)
        if (from[i]) worst = std::max(worst, sq_edt_to[i]);
    return std::sqrt(worst);
}

} // namespace

double hausdorff(const LabelVolume& pred, const LabelVolume& truth, int label,
                 bool full_regions) {
    require_same_geometry(pred.geometry(), truth.geometry(), "hausdorff");
    const LatticeGeometry& g = pred.geometry();

    std::vector<std::uint8_t> a = class_mask(pred, label);
    std::vector<std::uint8_t> b = class_mask(truth, label);
    const bool a_empty = std::find(a.begin(), a.end(), 1) == a.end();
    const bool b_empty = std::find(b.begin(), b.end(), 1) == b.end();
    if (a_empty || b_empty)
        throw UndefinedMetricError("hausdorff: class " + std::to_string(label) +
                                   " is empty in " +
                                   (a_empty ? std::string("prediction") : std::string("truth")));
    if (!full_regions) {
        a = boundary_of(g, a);
        b = boundary_of(g, b);
    }
    const std::vector<double> da = squared_edt(g, a);
    const std::vector<double> db = squared_edt(g, b);
    return std::max(directed_max(a, db), directed_max(b, da));
}

double avd(const LabelVolume& pred, const LabelVolume& truth, int label) {
    require_same_geometry(pred.geometry(), truth.geometry(), "avd");
    std::size_t np = 0, nt = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        np += pred.labels()[i] == label;
        nt += truth.labels()[i] == label;
    }
    if (nt == 0)
        throw UndefinedMetricError("avd: class " + std::to_string(label) +
                                   " is empty in truth");
    const double vox = pred.geometry().cell_volume();
    return std::abs(double(nt) * vox - double(np) * vox) / (double(nt) * vox);
}

MetricsReport evaluate(const LabelVolume& pred, const LabelVolume& truth) {
    require_same_geometry(pred.geometry(), truth.geometry(), "evaluate");
    static const char* names[3] = {"CSF", "GM", "WM"};

    MetricsReport rep;
    for (int label = 1; label <= 3; ++label) {
        ClassMetrics cm;
        cm.label = label;
        cm.name = names[label - 1];
        cm.dsc = dsc(pred, truth, label);
        try {
            cm.hd_mm = hausdorff(pred, truth, label);
        } catch (const UndefinedMetricError&) {
        }
        try {
            cm.avd = avd(pred, truth, label);
        } catch (const UndefinedMetricError&) {
        }
        rep.per_class.push_back(std::move(cm));
    }

    double dsum = 0.0, hsum = 0.0, asum = 0.0;
    bool hall = true, aall = true;
    for (const ClassMetrics& cm : rep.per_class) {
        dsum += cm.dsc;
        if (cm.hd_mm)
            hsum += *cm.hd_mm;
        else
            hall = false;
        if (cm.avd)
            asum += *cm.avd;
        else
            aall = false;
    }
    rep.mean_dsc = dsum / 3.0;
    if (hall) rep.mean_hd_mm = hsum / 3.0;
    if (aall) rep.mean_avd = asum / 3.0;
    return rep;
}

namespace {
std::string cell(const std::optional<double>& v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", *v);
    return buf;
}
} // namespace

void write_report_csv(const MetricsReport& rep, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << "class,dsc,hd_mm,avd\n";
    for (const ClassMetrics& cm : rep.per_class)
        f << cm.name << "," << cell(cm.dsc) << "," << cell(cm.hd_mm) << ","
          << cell(cm.avd) << "\n";
    f << "mean," << cell(rep.mean_dsc) << "," << cell(rep.mean_hd_mm) << ","
      << cell(rep.mean_avd) << "\n";
    if (!f) throw IoError("failed writing '" + path + "'");
}

void write_report_json(const MetricsReport& rep, const std::string& path) {
    nlohmann::json j;
    j["classes"] = nlohmann::json::array();
    for (const ClassMetrics& cm : rep.per_class) {
        nlohmann::json c;
        c["label"] = cm.label;
        c["name"] = cm.name;
        c["dsc"] = cm.dsc;
        c["hd_mm"] = cm.hd_mm ? nlohmann::json(*cm.hd_mm) : nlohmann::json(nullptr);
        c["avd"] = cm.avd ? nlohmann::json(*cm.avd) : nlohmann::json(nullptr);
        j["classes"].push_back(std::move(c));
    }
    j["mean"]["dsc"] = rep.mean_dsc ? nlohmann::json(*rep.mean_dsc) : nlohmann::json(nullptr);
    j["mean"]["hd_mm"] =
        rep.mean_hd_mm ? nlohmann::json(*rep.mean_hd_mm) : nlohmann::json(nullptr);
    j["mean"]["avd"] = rep.mean_avd ? nlohmann::json(*rep.mean_avd) : nlohmann::json(nullptr);

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << j.dump(2) << "\n";
    if (!f) throw IoError("failed writing '" + path + "'");
}

} // namespace voxdef
