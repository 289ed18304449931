#pragma once

#include "sparsereg/types.hpp"

namespace sparsereg {

// Up-samples a sparse volume along the pattern axis to `target_dim` slices by
// linear interpolation between acquired slices. Acquired slices are copied
// bit-exactly; slices outside the acquired range replicate the nearest
// acquired slice.
Volume upsample_slices(const Volume& vol_sparse, const SliceAcquisitionPattern& pattern,
                       int target_dim);

// Weight 1 on acquired slices, 0 elsewhere.
ConfidenceMask make_acquisition_mask(GridSize dims, const SliceAcquisitionPattern& pattern);

// Element-wise product of two masks.
ConfidenceMask combine_masks(const ConfidenceMask& a, const ConfidenceMask& b);

}  // namespace sparsereg
