#pragma once

#include <array>

#include "sparsereg/rng.hpp"
#include "sparsereg/types.hpp"

namespace sparsereg {

struct SimulationConfig {
    double max_rotation_deg = 3.0;
    double max_translation = 2.0;   // voxels
    double max_log_scale = 0.02;
    int keep_every = 7;
    Axis axis = Axis::z;
    std::array<double, 3> blur_shift = {0.5, 0.0, 0.0};  // voxels
    double blur_weight = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        require(keep_every >= 1, "SimulationConfig: keep_every must be >= 1");
        require(blur_weight >= 0.0 && blur_weight <= 1.0,
                "SimulationConfig: blur_weight must lie in [0,1]");
    }
};

// Row-major 3x4 voxel-coordinate affine: out = linear * p + translation.
struct AffineMatrix {
    std::array<std::array<double, 4>, 3> m = {{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}}};

    std::array<double, 3> apply(const std::array<double, 3>& p) const;
    AffineMatrix inverse() const;
    static AffineMatrix identity() { return {}; }
};

// Resamples with A as the forward map on voxel coordinates:
// out(p) = in(A^-1 p). Intensities trilinear with boundary clamp; labels
// nearest-neighbour with background fill.
Volume resample_affine(const Volume& vol, const AffineMatrix& forward);
LabelMap resample_affine_labels(const LabelMap& labels, const AffineMatrix& forward);

struct AffineSimResult {
    Volume volume;
    LabelMap labels;
    AffineMatrix transform;
};

// Small random rotation/translation/scale about the volume centre, mimicking
// head-positioning variance.
AffineSimResult apply_random_affine(const Volume& vol, const LabelMap& labels,
                                    const SimulationConfig& cfg, Rng& rng);

struct SubsampleResult {
    Volume volume;
    SliceAcquisitionPattern pattern;
};

// Keeps slices at indices 0, k, 2k, ... along the axis.
SubsampleResult subsample_slices(const Volume& vol, int keep_every, Axis axis);

// Mixes the volume with a sub-voxel shifted copy of itself in the frequency
// domain: out = IFFT((1-w) F + w F phase_ramp(shift)). Circular boundary.
Volume motion_blur(const Volume& vol, const std::array<double, 3>& shift_voxels, double weight);

struct Phantom {
    Volume volume;
    LabelMap labels;
};

// Smooth synthetic head-like volume: low-frequency background plus labelled
// ellipsoidal structures of distinct sizes, with mild noise texture.
// edge_width controls how soft the structure boundaries are, as a fraction of
// the ellipsoid radius.
Phantom make_phantom(GridSize dims, Rng& rng, double noise_sigma = 0.015,
                     double edge_width = 0.15);

// Smooth random field from a low-frequency cosine mixture, scaled so that the
// largest displacement component equals max_magnitude. max_frequency is in
// cycles across the volume; higher values bend the field over shorter
// distances while staying smooth.
DisplacementField make_ground_truth_deformation(GridSize dims, double max_magnitude, Rng& rng,
                                                double max_frequency = 1.5);

}  // namespace sparsereg
