#pragma once

#include <string>

#include "sparsereg/localstats.hpp"
#include "sparsereg/transform.hpp"
#include "sparsereg/types.hpp"

namespace sparsereg {

enum class Similarity { mse, smse, lcc, slcc };

Similarity similarity_from_name(const std::string& name);
const char* similarity_name(Similarity s);

// paper_sum reports correlation losses and smoothness as raw sums over voxels;
// voxel_mean divides both by the voxel count so the terms are per-voxel
// quantities and step sizes transfer across volume sizes. MSE/SMSE are
// per-voxel means by definition and unaffected.
enum class Normalization { paper_sum, voxel_mean };

struct LossConfig {
    Similarity similarity = Similarity::slcc;
    double lambda = 1.5;
    WindowSpec window{15};
    double eps = 1e-5;
    Normalization normalization = Normalization::voxel_mean;

    void validate() const {
        require(lambda >= 0.0, "LossConfig: lambda must be >= 0");
        require(eps > 0.0, "LossConfig: eps must be > 0");
        window.validate();
    }
};

struct LossReport {
    double total = 0.0;
    double similarity_term = 0.0;
    double smoothness_term = 0.0;  // already normalized; total = sim + lambda * this
    double observed_voxel_weight = 0.0;
};

// Similarity terms. Correlation values are returned as similarities (higher =
// better match); total_loss negates them so every configuration minimizes.
double mse(const Volume& fixed, const Volume& warped);
double smse(const Volume& fixed, const ConfidenceMask& combined_mask, const Volume& warped);
double lcc(const Volume& fixed, const Volume& warped, WindowSpec win, double eps = 1e-5,
           Normalization norm = Normalization::paper_sum);
double slcc(const Volume& fixed, const ConfidenceMask& combined_mask, const Volume& warped,
            WindowSpec win, double eps = 1e-5, Normalization norm = Normalization::paper_sum);

// Sum of squared forward differences of the displacement components; terms
// across the far boundary are omitted.
double smoothness(const DisplacementField& field);

// Composite objective for a pre-warped image.
LossReport total_loss(const Volume& fixed, const ConfidenceMask& combined_mask,
                      const Volume& warped, const DisplacementField& field,
                      const LossConfig& cfg);

// Same objective, warping `moving` internally in full double precision. This
// is the path the optimizer and the finite-difference checks evaluate; the
// combined mask is held fixed.
LossReport total_loss_from_moving(const Volume& fixed, const ConfidenceMask& combined_mask,
                                  const Volume& moving, const DisplacementField& field,
                                  const LossConfig& cfg);

// Analytic gradient of total_loss_from_moving w.r.t. every displacement
// component.
DisplacementField total_loss_grad(const Volume& fixed, const ConfidenceMask& combined_mask,
                                  const Volume& moving, const DisplacementField& field,
                                  const LossConfig& cfg);

namespace detail {

// Reusable buffers for the windowed-statistics pipeline.
struct LossWorkspace {
    std::vector<double> fixed_d, warped_d, weight_d;
    std::vector<double> buf_a, buf_b, buf_c, scratch;
    std::vector<double> sum_w, sum_f, sum_m, sum_ff, sum_mm, sum_fm;
    std::vector<double> grad_sim, gx, gy, gz;
};

// Raw (paper-sum) local correlation over truncated windows. `weight` may be
// null for the unweighted variant; means then divide by the in-bounds window
// count. When grad_warped is non-null, writes d(raw value)/d(warped voxel).
double local_correlation(const double* fixed, const double* warped, const double* weight,
                         GridSize size, int n, double eps, double* grad_warped,
                         LossWorkspace& ws);

// Gradient of the raw smoothness sum, accumulated scaled by `scale`.
void smoothness_grad_accum(const DisplacementField& field, double scale, std::vector<double>& gx,
                           std::vector<double>& gy, std::vector<double>& gz);

// Full evaluation with optional gradient, sharing one workspace. Returns the
// report; when grad is non-null it receives d(total)/du.
LossReport evaluate(const Volume& fixed, const ConfidenceMask& combined_mask,
                    const Volume& moving, const DisplacementField& field, const LossConfig& cfg,
                    DisplacementField* grad, LossWorkspace& ws);

}  // namespace detail

}  // namespace sparsereg
