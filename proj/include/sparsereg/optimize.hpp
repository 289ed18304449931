#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sparsereg/losses.hpp"
#include "sparsereg/types.hpp"

namespace sparsereg {

struct AdamParams {
    double step_size = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 5e-5;
};

struct AdamState {
    std::vector<double> m1, m2;

    explicit AdamState(std::size_t n = 0) : m1(n, 0.0), m2(n, 0.0) {}
};

// One bias-corrected update; t counts from 1.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, int t,
               const AdamParams& cfg);

struct RegistrationConfig {
    LossConfig loss;
    int levels = 3;
    // Iteration budget in processing order (coarsest first); the last entry
    // repeats for deeper configs.
    std::vector<int> iterations = {200, 100};
    AdamParams adam;  // step_size 5e-4, epsilon 5e-5
    std::uint64_t seed = 0;  // reserved for stochastic tie-breaking; unused by default
    double convergence_tol = 1e-6;
    int convergence_window = 10;

    void validate() const;
    int iterations_for(int processing_position) const;
};

struct LevelStats {
    int level = 0;  // 0 = finest
    int iterations_run = 0;
    double seconds = 0.0;
};

struct RegistrationResult {
    DisplacementField field;
    std::vector<LossReport> loss_trace;
    std::vector<int> trace_level;  // level of each trace entry
    std::vector<LevelStats> levels;
};

// Minimizes the composite objective over a dense displacement field with a
// multi-resolution pyramid and Adam. The moving mask is warped by the current
// field each iteration and combined with the fixed mask; the combined mask is
// treated as constant in the gradient.
RegistrationResult register_pair(const Volume& fixed, const ConfidenceMask& fixed_mask,
                                 const Volume& moving, const ConfidenceMask& moving_mask,
                                 const RegistrationConfig& cfg);

// The engine's objective at a given field (identical arithmetic to the values
// recorded in the loss trace).
LossReport evaluate_objective(const Volume& fixed, const ConfidenceMask& fixed_mask,
                              const Volume& moving, const ConfidenceMask& moving_mask,
                              const DisplacementField& field, const LossConfig& cfg);

// 2x2x2 block downsampling. Volumes average with mask weighting (plain mean
// where the block weight is zero); masks average plainly, staying continuous.
Volume pyramid_downsample_volume(const Volume& vol, const ConfidenceMask& mask);
ConfidenceMask pyramid_downsample_mask(const ConfidenceMask& mask);

// Trilinear field upsampling between pyramid levels; displacement values
// scale by 2.
DisplacementField pyramid_upsample_field(const DisplacementField& coarse, GridSize fine_dims);

}  // namespace sparsereg
