#pragma once

#include <map>
#include <vector>

#include "sparsereg/types.hpp"

namespace sparsereg {

struct SummaryStats {
    double mean = 0.0;
    double sd = 0.0;      // sample standard deviation
    double median = 0.0;
    double mad = 0.0;     // median absolute deviation
};

SummaryStats summarize(std::vector<double> values);

struct LabelSupport {
    std::int64_t voxels_a = 0;
    std::int64_t voxels_b = 0;
};

struct DiceReport {
    std::map<std::int32_t, double> per_label;
    std::map<std::int32_t, LabelSupport> support;
    std::vector<std::int32_t> undefined_labels;  // both supports empty; excluded from aggregates
    SummaryStats stats;                           // across the defined labels
};

// Dice overlap per label; when `restrict_to` is given, only voxels on its
// acquired slices are counted.
DiceReport dice(const LabelMap& a, const LabelMap& b, const std::vector<std::int32_t>& labels,
                const SliceAcquisitionPattern* restrict_to = nullptr);

// Recovers a slice pattern from a continuous mask: slices whose mean weight
// reaches the threshold count as acquired.
SliceAcquisitionPattern pattern_from_mask(const ConfidenceMask& mask, Axis axis,
                                          double threshold = 0.5);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    bool zero_variance = false;  // nonzero mean with zero variance; p forced to 0
};

// One-sample two-sided t-test on per-subject differences.
TTestResult paired_t_test(const std::vector<double>& diffs);

struct ImprovementReport {
    std::vector<double> fraction;   // (a-b)/(dice_max-b); meaningful where !excluded
    std::vector<bool> excluded;     // subjects with b >= dice_max
};

ImprovementReport improvement_fraction(const std::vector<double>& scores_a,
                                       const std::vector<double>& scores_b, double dice_max);

namespace detail {
// Regularized incomplete beta function via Lentz continued fraction.
double incomplete_beta(double a, double b, double x);
double student_t_two_sided_p(double t, double dof);
}  // namespace detail

}  // namespace sparsereg
