#pragma once

#include <optional>
#include <string>
#include <vector>

#include "voxdef/field.hpp"

namespace voxdef {

// Dice similarity coefficient 2TP/(2TP+FP+FN) for one class. Two empty sets
// compare as 1 by convention.
double dsc(const LabelVolume& pred, const LabelVolume& truth, int label);

// Hausdorff distance in mm between the two class regions, exact (computed
// with a Euclidean distance transform, not sampled). Point sets default to
// the boundary voxels of each region (a voxel is interior when all of its
// 8/26 neighbors share the class); full_regions switches to every class
// voxel. Throws UndefinedMetricError when either set is empty.
double hausdorff(const LabelVolume& pred, const LabelVolume& truth, int label,
                 bool full_regions = false);

// |vol(truth) - vol(pred)| / vol(truth) for one class. Throws
// UndefinedMetricError when the truth class is empty.
double avd(const LabelVolume& pred, const LabelVolume& truth, int label);

struct ClassMetrics {
    int label = 0;
    std::string name;
    double dsc = 0.0;
    std::optional<double> hd_mm; // empty when undefined for this class
    std::optional<double> avd;
};

// Columns mirror the usual reporting layout: Dice / HD / AVD per tissue
// class plus their mean over CSF, GM and WM (background excluded). A mean
// is present only when the metric is defined for all three classes.
struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    std::optional<double> mean_dsc;
    std::optional<double> mean_hd_mm;
    std::optional<double> mean_avd;
};

// DSC/HD/AVD for classes 1..3; an undefined metric for one class is
// reported in-band and does not abort the others.
MetricsReport evaluate(const LabelVolume& pred, const LabelVolume& truth);

void write_report_csv(const MetricsReport& report, const std::string& path);
void write_report_json(const MetricsReport& report, const std::string& path);

} // namespace voxdef
