#include "sparsereg/resample.hpp"

#include <algorithm>

namespace sparsereg {

namespace {

// Iteration helpers treating the pattern axis as the "slice" axis. A slice
// holds all voxels with a fixed coordinate on that axis.
struct SliceView {
    Axis axis;
    GridSize size;

    std::int64_t slice_voxels() const {
        switch (axis) {
            case Axis::x: return static_cast<std::int64_t>(size.y) * size.z;
            case Axis::y: return static_cast<std::int64_t>(size.x) * size.z;
            default: return static_cast<std::int64_t>(size.x) * size.y;
        }
    }

    // Linear index of the k-th in-slice voxel for the given slice position.
    std::int64_t index(int slice, std::int64_t k) const {
        const std::int64_t nx = size.x, ny = size.y;
        switch (axis) {
            case Axis::x: {
                const std::int64_t y = k % ny, z = k / ny;
                return (z * ny + y) * nx + slice;
            }
            case Axis::y: {
                const std::int64_t x = k % nx, z = k / nx;
                return (z * ny + slice) * nx + x;
            }
            default: {
                return static_cast<std::int64_t>(slice) * nx * ny + k;
            }
        }
    }
};

GridSize with_axis_dim(GridSize s, Axis a, int dim) {
    switch (a) {
        case Axis::x: s.x = dim; break;
        case Axis::y: s.y = dim; break;
        default: s.z = dim; break;
    }
    return s;
}

}  // namespace

Volume upsample_slices(const Volume& vol_sparse, const SliceAcquisitionPattern& pattern,
                       int target_dim) {
    const int sparse_dim = vol_sparse.size.along(pattern.axis);
    require(static_cast<int>(pattern.indices.size()) == sparse_dim,
            "upsample_slices: pattern has " + std::to_string(pattern.indices.size()) +
                " indices but the volume has " + std::to_string(sparse_dim) +
                " slices along axis " + axis_name(pattern.axis));
    pattern.validate(target_dim, "upsample_slices");
    require(target_dim >= pattern.indices.back() + 1,
            "upsample_slices: target_dim smaller than the last acquired index + 1");

    const GridSize out_size = with_axis_dim(vol_sparse.size, pattern.axis, target_dim);
    Volume out(out_size, 0.0f, vol_sparse.spacing);

    const SliceView src{pattern.axis, vol_sparse.size};
    const SliceView dst{pattern.axis, out_size};
    const std::int64_t per_slice = dst.slice_voxels();
    const auto& idx = pattern.indices;

    for (int slice = 0; slice < target_dim; ++slice) {
        // Bracketing acquired indices; clamp outside the acquired range.
        const auto hi_it = std::lower_bound(idx.begin(), idx.end(), slice);
        if (hi_it != idx.end() && *hi_it == slice) {
            const int pos = static_cast<int>(hi_it - idx.begin());
            for (std::int64_t k = 0; k < per_slice; ++k) {
                out.data[dst.index(slice, k)] = vol_sparse.data[src.index(pos, k)];
            }
            continue;
        }
        if (hi_it == idx.begin() || hi_it == idx.end()) {
            const int pos = (hi_it == idx.begin()) ? 0 : static_cast<int>(idx.size()) - 1;
            for (std::int64_t k = 0; k < per_slice; ++k) {
                out.data[dst.index(slice, k)] = vol_sparse.data[src.index(pos, k)];
            }
            continue;
        }
        const int hi_pos = static_cast<int>(hi_it - idx.begin());
        const int lo_pos = hi_pos - 1;
        const double t =
            static_cast<double>(slice - idx[lo_pos]) / (idx[hi_pos] - idx[lo_pos]);
        for (std::int64_t k = 0; k < per_slice; ++k) {
            const double lo = vol_sparse.data[src.index(lo_pos, k)];
            const double hi = vol_sparse.data[src.index(hi_pos, k)];
            out.data[dst.index(slice, k)] = static_cast<float>((1.0 - t) * lo + t * hi);
        }
    }
    return out;
}

ConfidenceMask make_acquisition_mask(GridSize dims, const SliceAcquisitionPattern& pattern) {
    pattern.validate(dims.along(pattern.axis), "make_acquisition_mask");
    ConfidenceMask mask(dims, 0.0f);
    const SliceView view{pattern.axis, dims};
    const std::int64_t per_slice = view.slice_voxels();
    for (int slice : pattern.indices) {
        for (std::int64_t k = 0; k < per_slice; ++k) {
            mask.weights[view.index(slice, k)] = 1.0f;
        }
    }
    return mask;
}

ConfidenceMask combine_masks(const ConfidenceMask& a, const ConfidenceMask& b) {
    require_same_dims(a.size, b.size, "combine_masks");
    ConfidenceMask out(a.size);
    for (std::size_t i = 0; i < out.weights.size(); ++i) {
        out.weights[i] = a.weights[i] * b.weights[i];
    }
    return out;
}

}  // namespace sparsereg
