#include "sparsereg/transform.hpp"

#include <algorithm>
#include <cmath>

#include "sparsereg/parallel.hpp"

namespace sparsereg {

namespace {

// Per-axis sampling state for clamped trilinear interpolation. The derivative
// indicator is 1 only where the sample actually varies with the coordinate,
// i.e. for x in [0, dim-1); this matches the right-continuous branch at
// lattice points and a zero derivative along clamped axes.
struct AxisSample {
    int i0 = 0;
    int i1 = 0;
    double t = 0.0;
    double ddx = 0.0;
};

inline AxisSample prepare_axis(double x, int dim) {
    AxisSample s;
    if (dim == 1) return s;
    double xc = x < 0.0 ? 0.0 : (x > dim - 1 ? static_cast<double>(dim - 1) : x);
    int i0 = static_cast<int>(std::floor(xc));
    if (i0 > dim - 2) i0 = dim - 2;
    s.i0 = i0;
    s.i1 = i0 + 1;
    s.t = xc - i0;
    s.ddx = (x >= 0.0 && x < dim - 1) ? 1.0 : 0.0;
    return s;
}

}  // namespace

namespace detail {

void warp_trilinear_d(const Volume& moving, const DisplacementField& field,
                      std::vector<double>& out) {
    const GridSize fs = field.size;
    const GridSize ms = moving.size;
    out.resize(static_cast<std::size_t>(fs.voxel_count()));
    const float* mv = moving.data.data();
    const std::int64_t mx = ms.x, mxy = static_cast<std::int64_t>(ms.x) * ms.y;

    const std::int64_t n_lines = static_cast<std::int64_t>(fs.y) * fs.z;
    parallel_chunks(n_lines, 64, [&](std::int64_t l0, std::int64_t l1) {
        for (std::int64_t line = l0; line < l1; ++line) {
            const int y = static_cast<int>(line % fs.y);
            const int z = static_cast<int>(line / fs.y);
            const std::int64_t base = line * fs.x;
            for (int x = 0; x < fs.x; ++x) {
                const std::int64_t i = base + x;
                const AxisSample ax = prepare_axis(x + field.ux[i], ms.x);
                const AxisSample ay = prepare_axis(y + field.uy[i], ms.y);
                const AxisSample az = prepare_axis(z + field.uz[i], ms.z);
                const std::int64_t o00 = az.i0 * mxy + ay.i0 * mx;
                const std::int64_t o01 = az.i0 * mxy + ay.i1 * mx;
                const std::int64_t o10 = az.i1 * mxy + ay.i0 * mx;
                const std::int64_t o11 = az.i1 * mxy + ay.i1 * mx;
                const double v000 = mv[o00 + ax.i0], v100 = mv[o00 + ax.i1];
                const double v010 = mv[o01 + ax.i0], v110 = mv[o01 + ax.i1];
                const double v001 = mv[o10 + ax.i0], v101 = mv[o10 + ax.i1];
                const double v011 = mv[o11 + ax.i0], v111 = mv[o11 + ax.i1];
                const double c00 = v000 + ax.t * (v100 - v000);
                const double c10 = v010 + ax.t * (v110 - v010);
                const double c01 = v001 + ax.t * (v101 - v001);
                const double c11 = v011 + ax.t * (v111 - v011);
                const double c0 = c00 + ay.t * (c10 - c00);
                const double c1 = c01 + ay.t * (c11 - c01);
                out[i] = c0 + az.t * (c1 - c0);
            }
        }
    });
}

void warp_adjoint_d(const std::vector<double>& grad_out, const Volume& moving,
                    const DisplacementField& field, std::vector<double>& gx,
                    std::vector<double>& gy, std::vector<double>& gz) {
    const GridSize fs = field.size;
    const GridSize ms = moving.size;
    const auto count = static_cast<std::size_t>(fs.voxel_count());
    gx.assign(count, 0.0);
    gy.assign(count, 0.0);
    gz.assign(count, 0.0);
    const float* mv = moving.data.data();
    const std::int64_t mx = ms.x, mxy = static_cast<std::int64_t>(ms.x) * ms.y;

    const std::int64_t n_lines = static_cast<std::int64_t>(fs.y) * fs.z;
    parallel_chunks(n_lines, 64, [&](std::int64_t l0, std::int64_t l1) {
        for (std::int64_t line = l0; line < l1; ++line) {
            const int y = static_cast<int>(line % fs.y);
            const int z = static_cast<int>(line / fs.y);
            const std::int64_t base = line * fs.x;
            for (int x = 0; x < fs.x; ++x) {
                const std::int64_t i = base + x;
                const double go = grad_out[i];
                if (go == 0.0) continue;
                const AxisSample ax = prepare_axis(x + field.ux[i], ms.x);
                const AxisSample ay = prepare_axis(y + field.uy[i], ms.y);
                const AxisSample az = prepare_axis(z + field.uz[i], ms.z);
                const std::int64_t o00 = az.i0 * mxy + ay.i0 * mx;
                const std::int64_t o01 = az.i0 * mxy + ay.i1 * mx;
                const std::int64_t o10 = az.i1 * mxy + ay.i0 * mx;
                const std::int64_t o11 = az.i1 * mxy + ay.i1 * mx;
                const double v000 = mv[o00 + ax.i0], v100 = mv[o00 + ax.i1];
                const double v010 = mv[o01 + ax.i0], v110 = mv[o01 + ax.i1];
                const double v001 = mv[o10 + ax.i0], v101 = mv[o10 + ax.i1];
                const double v011 = mv[o11 + ax.i0], v111 = mv[o11 + ax.i1];
                const double wx0 = 1.0 - ax.t, wx1 = ax.t;
                const double wy0 = 1.0 - ay.t, wy1 = ay.t;
                const double wz0 = 1.0 - az.t, wz1 = az.t;
                // d(sample)/dx: difference along x, weighted by the y/z weights.
                const double dx = (v100 - v000) * wy0 * wz0 + (v110 - v010) * wy1 * wz0 +
                                  (v101 - v001) * wy0 * wz1 + (v111 - v011) * wy1 * wz1;
                const double dy = (v010 - v000) * wx0 * wz0 + (v110 - v100) * wx1 * wz0 +
                                  (v011 - v001) * wx0 * wz1 + (v111 - v101) * wx1 * wz1;
                const double dz = (v001 - v000) * wx0 * wy0 + (v101 - v100) * wx1 * wy0 +
                                  (v011 - v010) * wx0 * wy1 + (v111 - v110) * wx1 * wy1;
                gx[i] = go * dx * ax.ddx;
                gy[i] = go * dy * ay.ddx;
                gz[i] = go * dz * az.ddx;
            }
        }
    });
}

}  // namespace detail

Volume warp_trilinear(const Volume& moving, const DisplacementField& field) {
    std::vector<double> out;
    detail::warp_trilinear_d(moving, field, out);
    Volume result(field.size, 0.0f, moving.spacing);
    for (std::size_t i = 0; i < out.size(); ++i) result.data[i] = static_cast<float>(out[i]);
    return result;
}

ConfidenceMask warp_mask(const ConfidenceMask& mask, const DisplacementField& field) {
    const GridSize fs = field.size;
    const GridSize ms = mask.size;
    ConfidenceMask out(fs);
    const float* mv = mask.weights.data();
    const std::int64_t mx = ms.x, mxy = static_cast<std::int64_t>(ms.x) * ms.y;

    // Zero-padded sampling: corners outside the mask domain contribute 0.
    auto value_at = [&](int xi, int yi, int zi) -> double {
        if (xi < 0 || yi < 0 || zi < 0 || xi >= ms.x || yi >= ms.y || zi >= ms.z) return 0.0;
        return mv[zi * mxy + yi * mx + xi];
    };

    const std::int64_t n_lines = static_cast<std::int64_t>(fs.y) * fs.z;
    parallel_chunks(n_lines, 64, [&](std::int64_t l0, std::int64_t l1) {
        for (std::int64_t line = l0; line < l1; ++line) {
            const int y = static_cast<int>(line % fs.y);
            const int z = static_cast<int>(line / fs.y);
            const std::int64_t base = line * fs.x;
            for (int x = 0; x < fs.x; ++x) {
                const std::int64_t i = base + x;
                const double cx = x + field.ux[i];
                const double cy = y + field.uy[i];
                const double cz = z + field.uz[i];
                const int x0 = static_cast<int>(std::floor(cx));
                const int y0 = static_cast<int>(std::floor(cy));
                const int z0 = static_cast<int>(std::floor(cz));
                const double tx = cx - x0, ty = cy - y0, tz = cz - z0;
                double v = 0.0;
                for (int dz = 0; dz <= 1; ++dz) {
                    const double wz = dz ? tz : 1.0 - tz;
                    if (wz == 0.0) continue;
                    for (int dy = 0; dy <= 1; ++dy) {
                        const double wy = dy ? ty : 1.0 - ty;
                        if (wy == 0.0) continue;
                        for (int dx = 0; dx <= 1; ++dx) {
                            const double wx = dx ? tx : 1.0 - tx;
                            if (wx == 0.0) continue;
                            v += wx * wy * wz * value_at(x0 + dx, y0 + dy, z0 + dz);
                        }
                    }
                }
                out.weights[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    });
    return out;
}

LabelMap warp_labels(const LabelMap& labels, const DisplacementField& field) {
    const GridSize fs = field.size;
    const GridSize ms = labels.size;
    LabelMap out(fs, 0);
    const std::int64_t mx = ms.x, mxy = static_cast<std::int64_t>(ms.x) * ms.y;

    const std::int64_t n_lines = static_cast<std::int64_t>(fs.y) * fs.z;
    parallel_chunks(n_lines, 64, [&](std::int64_t l0, std::int64_t l1) {
        for (std::int64_t line = l0; line < l1; ++line) {
            const int y = static_cast<int>(line % fs.y);
            const int z = static_cast<int>(line / fs.y);
            const std::int64_t base = line * fs.x;
            for (int x = 0; x < fs.x; ++x) {
                const std::int64_t i = base + x;
                const long xi = std::lround(x + field.ux[i]);
                const long yi = std::lround(y + field.uy[i]);
                const long zi = std::lround(z + field.uz[i]);
                if (xi < 0 || yi < 0 || zi < 0 || xi >= ms.x || yi >= ms.y || zi >= ms.z) {
                    continue;
                }
                out.labels[i] = labels.labels[zi * mxy + yi * mx + xi];
            }
        }
    });
    return out;
}

DisplacementField warp_adjoint(const Volume& grad_out, const Volume& moving,
                               const DisplacementField& field) {
    require_same_dims(grad_out.size, field.size, "warp_adjoint");
    std::vector<double> go(grad_out.data.begin(), grad_out.data.end());
    DisplacementField grad(field.size);
    detail::warp_adjoint_d(go, moving, field, grad.ux, grad.uy, grad.uz);
    return grad;
}

}  // namespace sparsereg
