#pragma once

#include <vector>

#include "sparsereg/types.hpp"

namespace sparsereg {

// Uniform cubic window of odd edge length n, centered on each voxel.
// Voxels outside the domain contribute zero weight and zero value.
struct WindowSpec {
    int n = 15;

    explicit WindowSpec(int n_ = 15) : n(n_) {}
    int radius() const { return (n - 1) / 2; }
    void validate() const {
        require(n >= 1 && (n % 2) == 1, "WindowSpec: n must be odd and >= 1");
    }
};

// Sum of vol over the n^3 window at each voxel, truncated at the domain
// boundary. Separable moving sums; O(N) independent of n.
Volume box_sum(const Volume& vol, WindowSpec win);

// Mask-weighted local mean: box_sum(w*vol) / (box_sum(w) + eps). Windows with
// zero total weight yield ~0 through the eps stabiliser.
Volume weighted_local_mean(const Volume& vol, const ConfidenceMask& w, WindowSpec win,
                           double eps = 1e-5);

namespace detail {

// Double-precision kernel used by the loss pipeline. `out` may not alias `in`;
// `scratch` is resized as needed and reusable across calls.
void box_sum_d(const std::vector<double>& in, GridSize size, int n, std::vector<double>& out,
               std::vector<double>& scratch);

// Number of in-window in-bounds voxels at each position along one axis.
inline int axis_window_count(int i, int dim, int radius) {
    const int lo = i - radius < 0 ? 0 : i - radius;
    const int hi = i + radius >= dim ? dim - 1 : i + radius;
    return hi - lo + 1;
}

}  // namespace detail

}  // namespace sparsereg
