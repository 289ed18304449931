#pragma once

#include <vector>

#include "sparsereg/types.hpp"

namespace sparsereg {

// Trilinear warp of the moving image: output(p) = moving sampled at p + u(p).
// Coordinates outside the moving domain clamp to the boundary. The output
// grid is the field grid.
Volume warp_trilinear(const Volume& moving, const DisplacementField& field);

// Trilinear warp of confidence weights with zero outside the domain (no
// confidence beyond the scan); output clamped into [0,1].
ConfidenceMask warp_mask(const ConfidenceMask& mask, const DisplacementField& field);

// Nearest-neighbour warp of a label map; out-of-domain samples become
// background (label 0).
LabelMap warp_labels(const LabelMap& labels, const DisplacementField& field);

// Back-propagates a per-voxel gradient w.r.t. the warped image to a gradient
// w.r.t. the displacement components, using the analytic derivative of
// trilinear sampling. Along a clamped axis the derivative is zero.
DisplacementField warp_adjoint(const Volume& grad_out, const Volume& moving,
                               const DisplacementField& field);

namespace detail {

// Double-precision warp used by the loss pipeline (no float round-trip).
void warp_trilinear_d(const Volume& moving, const DisplacementField& field,
                      std::vector<double>& out);

void warp_adjoint_d(const std::vector<double>& grad_out, const Volume& moving,
                    const DisplacementField& field, std::vector<double>& gx,
                    std::vector<double>& gy, std::vector<double>& gz);

}  // namespace detail

}  // namespace sparsereg
