#include "sparsereg/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sparsereg {

SummaryStats summarize(std::vector<double> values) {
    SummaryStats s;
    const std::size_t n = values.size();
    if (n == 0) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(n - 1));
    }
    auto median_of = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        const std::size_t m = v.size() / 2;
        return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    };
    s.median = median_of(values);
    for (double& v : values) v = std::fabs(v - s.median);
    s.mad = median_of(values);
    return s;
}

DiceReport dice(const LabelMap& a, const LabelMap& b, const std::vector<std::int32_t>& labels,
                const SliceAcquisitionPattern* restrict_to) {
    require_same_dims(a.size, b.size, "dice");
    require(!labels.empty(), "dice: label list is empty");
    if (restrict_to) restrict_to->validate(a.size.along(restrict_to->axis), "dice");

    std::map<std::int32_t, std::array<std::int64_t, 3>> counts;  // |A|, |B|, |A and B|
    for (std::int32_t l : labels) counts[l] = {0, 0, 0};

    const GridSize s = a.size;
    std::int64_t i = 0;
    for (int z = 0; z < s.z; ++z) {
        for (int y = 0; y < s.y; ++y) {
            for (int x = 0; x < s.x; ++x, ++i) {
                if (restrict_to) {
                    const int slice = restrict_to->axis == Axis::x
                                          ? x
                                          : (restrict_to->axis == Axis::y ? y : z);
                    if (!restrict_to->contains(slice)) continue;
                }
                const std::int32_t la = a.labels[i];
                const std::int32_t lb = b.labels[i];
                if (auto it = counts.find(la); it != counts.end()) {
                    ++it->second[0];
                    if (la == lb) ++it->second[2];
                }
                if (auto it = counts.find(lb); it != counts.end()) ++it->second[1];
            }
        }
    }

    DiceReport report;
    std::vector<double> defined;
    for (std::int32_t l : labels) {
        const auto& c = counts[l];
        report.support[l] = LabelSupport{c[0], c[1]};
        if (c[0] + c[1] == 0) {
            report.undefined_labels.push_back(l);
            continue;
        }
        const double d = 2.0 * static_cast<double>(c[2]) / static_cast<double>(c[0] + c[1]);
        report.per_label[l] = d;
        defined.push_back(d);
    }
    report.stats = summarize(std::move(defined));
    return report;
}

SliceAcquisitionPattern pattern_from_mask(const ConfidenceMask& mask, Axis axis,
                                          double threshold) {
    const GridSize s = mask.size;
    const int dim = s.along(axis);
    SliceAcquisitionPattern pattern;
    pattern.axis = axis;
    const std::int64_t per_slice = s.voxel_count() / dim;
    std::vector<double> slice_sum(static_cast<std::size_t>(dim), 0.0);
    std::int64_t i = 0;
    for (int z = 0; z < s.z; ++z) {
        for (int y = 0; y < s.y; ++y) {
            for (int x = 0; x < s.x; ++x, ++i) {
                const int coord = axis == Axis::x ? x : (axis == Axis::y ? y : z);
                slice_sum[static_cast<std::size_t>(coord)] += mask.weights[i];
            }
        }
    }
    for (int slice = 0; slice < dim; ++slice) {
        if (slice_sum[static_cast<std::size_t>(slice)] / static_cast<double>(per_slice) >=
            threshold) {
            pattern.indices.push_back(slice);
        }
    }
    require(!pattern.indices.empty(), "pattern_from_mask: no slice reaches the threshold");
    return pattern;
}

namespace detail {

namespace {

double beta_cf(double a, double b, double x) {
    // Lentz's method for the continued fraction of the incomplete beta.
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
    const double x = dof / (dof + t * t);
    return incomplete_beta(dof / 2.0, 0.5, x);
}

}  // namespace detail

TTestResult paired_t_test(const std::vector<double>& diffs) {
    const std::size_t n = diffs.size();
    require(n >= 2, "paired_t_test: need at least 2 differences");
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double d : diffs) ss += (d - mean) * (d - mean);
    const double var = ss / static_cast<double>(n - 1);

    TTestResult result;
    if (var == 0.0) {
        if (mean == 0.0) {
            result.t = 0.0;
            result.p = 1.0;
        } else {
            result.t = mean > 0 ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
            result.p = 0.0;
            result.zero_variance = true;
        }
        return result;
    }
    result.t = mean / std::sqrt(var / static_cast<double>(n));
    result.p = detail::student_t_two_sided_p(result.t, static_cast<double>(n - 1));
    return result;
}

ImprovementReport improvement_fraction(const std::vector<double>& scores_a,
                                       const std::vector<double>& scores_b, double dice_max) {
    require(scores_a.size() == scores_b.size(), "improvement_fraction: size mismatch");
    ImprovementReport report;
    report.fraction.resize(scores_a.size(), 0.0);
    report.excluded.resize(scores_a.size(), false);
    for (std::size_t i = 0; i < scores_a.size(); ++i) {
        if (scores_b[i] >= dice_max) {
            report.excluded[i] = true;
            continue;
        }
        report.fraction[i] = (scores_a[i] - scores_b[i]) / (dice_max - scores_b[i]);
    }
    return report;
}

}  // namespace sparsereg
