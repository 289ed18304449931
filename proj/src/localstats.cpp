#include "sparsereg/localstats.hpp"

#include <algorithm>
#include <cstring>

#include "sparsereg/parallel.hpp"

namespace sparsereg {

namespace detail {

namespace {

// Rolling sum along x, one scan line at a time.
void pass_x(const double* in, double* out, GridSize s, int r) {
    const std::int64_t nx = s.x;
    const std::int64_t n_lines = static_cast<std::int64_t>(s.y) * s.z;
    parallel_chunks(n_lines, 256, [&](std::int64_t l0, std::int64_t l1) {
        for (std::int64_t line = l0; line < l1; ++line) {
            const double* src = in + line * nx;
            double* dst = out + line * nx;
            double acc = 0.0;
            const std::int64_t head = std::min<std::int64_t>(r, nx - 1);
            for (std::int64_t i = 0; i <= head; ++i) acc += src[i];
            for (std::int64_t i = 0; i < nx; ++i) {
                dst[i] = acc;
                const std::int64_t enter = i + r + 1;
                if (enter < nx) acc += src[enter];
                const std::int64_t leave = i - r;
                if (leave >= 0) acc -= src[leave];
            }
        }
    });
}

// Rolling sum along y with a row accumulator, one z slab at a time.
void pass_y(const double* in, double* out, GridSize s, int r) {
    const std::int64_t nx = s.x, ny = s.y;
    const std::int64_t plane = nx * ny;
    parallel_chunks(s.z, 1, [&](std::int64_t z0, std::int64_t z1) {
        std::vector<double> acc(static_cast<std::size_t>(nx));
        for (std::int64_t z = z0; z < z1; ++z) {
            const double* slab = in + z * plane;
            double* dst = out + z * plane;
            std::fill(acc.begin(), acc.end(), 0.0);
            const std::int64_t head = std::min<std::int64_t>(r, ny - 1);
            for (std::int64_t y = 0; y <= head; ++y) {
                const double* row = slab + y * nx;
                for (std::int64_t x = 0; x < nx; ++x) acc[x] += row[x];
            }
            for (std::int64_t y = 0; y < ny; ++y) {
                std::memcpy(dst + y * nx, acc.data(), sizeof(double) * nx);
                const std::int64_t enter = y + r + 1;
                if (enter < ny) {
                    const double* row = slab + enter * nx;
                    for (std::int64_t x = 0; x < nx; ++x) acc[x] += row[x];
                }
                const std::int64_t leave = y - r;
                if (leave >= 0) {
                    const double* row = slab + leave * nx;
                    for (std::int64_t x = 0; x < nx; ++x) acc[x] -= row[x];
                }
            }
        }
    });
}

// Rolling sum along z with a plane accumulator, split over plane positions.
void pass_z(const double* in, double* out, GridSize s, int r) {
    const std::int64_t plane = static_cast<std::int64_t>(s.x) * s.y;
    const std::int64_t nz = s.z;
    std::vector<double> acc(static_cast<std::size_t>(plane));
    parallel_chunks(plane, 8192, [&](std::int64_t i0, std::int64_t i1) {
        for (std::int64_t i = i0; i < i1; ++i) acc[i] = 0.0;
        const std::int64_t head = std::min<std::int64_t>(r, nz - 1);
        for (std::int64_t z = 0; z <= head; ++z) {
            const double* p = in + z * plane;
            for (std::int64_t i = i0; i < i1; ++i) acc[i] += p[i];
        }
        for (std::int64_t z = 0; z < nz; ++z) {
            double* dst = out + z * plane;
            for (std::int64_t i = i0; i < i1; ++i) dst[i] = acc[i];
            const std::int64_t enter = z + r + 1;
            if (enter < nz) {
                const double* p = in + enter * plane;
                for (std::int64_t i = i0; i < i1; ++i) acc[i] += p[i];
            }
            const std::int64_t leave = z - r;
            if (leave >= 0) {
                const double* p = in + leave * plane;
                for (std::int64_t i = i0; i < i1; ++i) acc[i] -= p[i];
            }
        }
    });
}

}  // namespace

void box_sum_d(const std::vector<double>& in, GridSize size, int n, std::vector<double>& out,
               std::vector<double>& scratch) {
    const auto count = static_cast<std::size_t>(size.voxel_count());
    out.resize(count);
    if (n == 1) {
        std::copy(in.begin(), in.end(), out.begin());
        return;
    }
    scratch.resize(count);
    const int r = (n - 1) / 2;
    pass_x(in.data(), out.data(), size, r);
    pass_y(out.data(), scratch.data(), size, r);
    pass_z(scratch.data(), out.data(), size, r);
}

}  // namespace detail

namespace {

std::vector<double> to_double(const std::vector<float>& v) {
    return std::vector<double>(v.begin(), v.end());
}

}  // namespace

Volume box_sum(const Volume& vol, WindowSpec win) {
    win.validate();
    std::vector<double> in = to_double(vol.data), out, scratch;
    detail::box_sum_d(in, vol.size, win.n, out, scratch);
    Volume result(vol.size, 0.0f, vol.spacing);
    for (std::size_t i = 0; i < out.size(); ++i) result.data[i] = static_cast<float>(out[i]);
    return result;
}

Volume weighted_local_mean(const Volume& vol, const ConfidenceMask& w, WindowSpec win,
                           double eps) {
    win.validate();
    require_same_dims(vol.size, w.size, "weighted_local_mean");
    require(eps > 0.0, "weighted_local_mean: eps must be positive");

    const auto count = static_cast<std::size_t>(vol.size.voxel_count());
    std::vector<double> weighted(count), wsum, vsum, scratch;
    for (std::size_t i = 0; i < count; ++i) {
        weighted[i] = static_cast<double>(w.weights[i]) * vol.data[i];
    }
    detail::box_sum_d(weighted, vol.size, win.n, vsum, scratch);
    std::vector<double> wd = to_double(w.weights);
    detail::box_sum_d(wd, vol.size, win.n, wsum, scratch);

    Volume result(vol.size, 0.0f, vol.spacing);
    for (std::size_t i = 0; i < count; ++i) {
        result.data[i] = static_cast<float>(vsum[i] / (wsum[i] + eps));
    }
    return result;
}

}  // namespace sparsereg
