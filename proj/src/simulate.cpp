#include "sparsereg/simulate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

#include "sparsereg/resample.hpp"

namespace sparsereg {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::array<double, 3> AffineMatrix::apply(const std::array<double, 3>& p) const {
    std::array<double, 3> out;
    for (int r = 0; r < 3; ++r) {
        out[r] = m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2] + m[r][3];
    }
    return out;
}

AffineMatrix AffineMatrix::inverse() const {
    const auto& a = m;
    const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                       a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                       a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    require(std::fabs(det) > 1e-12, "AffineMatrix: singular linear part");
    const double inv_det = 1.0 / det;
    AffineMatrix out;
    out.m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) * inv_det;
    out.m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv_det;
    out.m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv_det;
    out.m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) * inv_det;
    out.m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv_det;
    out.m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv_det;
    out.m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) * inv_det;
    out.m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv_det;
    out.m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv_det;
    for (int r = 0; r < 3; ++r) {
        out.m[r][3] = -(out.m[r][0] * a[0][3] + out.m[r][1] * a[1][3] + out.m[r][2] * a[2][3]);
    }
    return out;
}

Volume resample_affine(const Volume& vol, const AffineMatrix& forward) {
    const AffineMatrix inv = forward.inverse();
    Volume out(vol.size, 0.0f, vol.spacing);
    const GridSize s = vol.size;
    auto clampd = [](double v, double hi) { return v < 0.0 ? 0.0 : (v > hi ? hi : v); };
    std::int64_t i = 0;
    for (int z = 0; z < s.z; ++z) {
        for (int y = 0; y < s.y; ++y) {
            for (int x = 0; x < s.x; ++x, ++i) {
                const auto src = inv.apply({static_cast<double>(x), static_cast<double>(y),
                                            static_cast<double>(z)});
                const double cx = clampd(src[0], s.x - 1);
                const double cy = clampd(src[1], s.y - 1);
                const double cz = clampd(src[2], s.z - 1);
                int x0 = std::min(static_cast<int>(cx), std::max(s.x - 2, 0));
                int y0 = std::min(static_cast<int>(cy), std::max(s.y - 2, 0));
                int z0 = std::min(static_cast<int>(cz), std::max(s.z - 2, 0));
                const double tx = cx - x0, ty = cy - y0, tz = cz - z0;
                const int x1 = std::min(x0 + 1, s.x - 1);
                const int y1 = std::min(y0 + 1, s.y - 1);
                const int z1 = std::min(z0 + 1, s.z - 1);
                const double c00 = vol.at(x0, y0, z0) + tx * (vol.at(x1, y0, z0) - vol.at(x0, y0, z0));
                const double c10 = vol.at(x0, y1, z0) + tx * (vol.at(x1, y1, z0) - vol.at(x0, y1, z0));
                const double c01 = vol.at(x0, y0, z1) + tx * (vol.at(x1, y0, z1) - vol.at(x0, y0, z1));
                const double c11 = vol.at(x0, y1, z1) + tx * (vol.at(x1, y1, z1) - vol.at(x0, y1, z1));
                const double c0 = c00 + ty * (c10 - c00);
                const double c1 = c01 + ty * (c11 - c01);
                out.data[i] = static_cast<float>(c0 + tz * (c1 - c0));
            }
        }
    }
    return out;
}

LabelMap resample_affine_labels(const LabelMap& labels, const AffineMatrix& forward) {
    const AffineMatrix inv = forward.inverse();
    LabelMap out(labels.size, 0);
    const GridSize s = labels.size;
    std::int64_t i = 0;
    for (int z = 0; z < s.z; ++z) {
        for (int y = 0; y < s.y; ++y) {
            for (int x = 0; x < s.x; ++x, ++i) {
                const auto src = inv.apply({static_cast<double>(x), static_cast<double>(y),
                                            static_cast<double>(z)});
                const long xi = std::lround(src[0]);
                const long yi = std::lround(src[1]);
                const long zi = std::lround(src[2]);
                if (xi < 0 || yi < 0 || zi < 0 || xi >= s.x || yi >= s.y || zi >= s.z) continue;
                out.labels[i] = labels.at(static_cast<int>(xi), static_cast<int>(yi),
                                          static_cast<int>(zi));
            }
        }
    }
    return out;
}

AffineSimResult apply_random_affine(const Volume& vol, const LabelMap& labels,
                                    const SimulationConfig& cfg, Rng& rng) {
    cfg.validate();
    require_same_dims(vol.size, labels.size, "apply_random_affine");

    const double deg = kPi / 180.0;
    const double ax = uniform(rng, -cfg.max_rotation_deg, cfg.max_rotation_deg) * deg;
    const double ay = uniform(rng, -cfg.max_rotation_deg, cfg.max_rotation_deg) * deg;
    const double az = uniform(rng, -cfg.max_rotation_deg, cfg.max_rotation_deg) * deg;
    const double tx = uniform(rng, -cfg.max_translation, cfg.max_translation);
    const double ty = uniform(rng, -cfg.max_translation, cfg.max_translation);
    const double tz = uniform(rng, -cfg.max_translation, cfg.max_translation);
    const double sx = std::exp(uniform(rng, -cfg.max_log_scale, cfg.max_log_scale));
    const double sy = std::exp(uniform(rng, -cfg.max_log_scale, cfg.max_log_scale));
    const double sz = std::exp(uniform(rng, -cfg.max_log_scale, cfg.max_log_scale));

    const double cx = std::cos(ax), sxr = std::sin(ax);
    const double cy = std::cos(ay), syr = std::sin(ay);
    const double cz = std::cos(az), szr = std::sin(az);
    // R = Rz * Ry * Rx, then per-axis scale.
    double rot[3][3] = {
        {cz * cy, cz * syr * sxr - szr * cx, cz * syr * cx + szr * sxr},
        {szr * cy, szr * syr * sxr + cz * cx, szr * syr * cx - cz * sxr},
        {-syr, cy * sxr, cy * cx},
    };
    const double scale[3] = {sx, sy, sz};
    const std::array<double, 3> centre = {(vol.size.x - 1) / 2.0, (vol.size.y - 1) / 2.0,
                                          (vol.size.z - 1) / 2.0};
    const double trans[3] = {tx, ty, tz};

    AffineMatrix a;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) a.m[r][c] = rot[r][c] * scale[c];
        a.m[r][3] = centre[r] + trans[r] -
                    (a.m[r][0] * centre[0] + a.m[r][1] * centre[1] + a.m[r][2] * centre[2]);
    }

    AffineSimResult result;
    result.volume = resample_affine(vol, a);
    result.labels = resample_affine_labels(labels, a);
    result.transform = a;
    return result;
}

SubsampleResult subsample_slices(const Volume& vol, int keep_every, Axis axis) {
    require(keep_every >= 1, "subsample_slices: keep_every must be >= 1");
    const int dim = vol.size.along(axis);
    require(dim >= 1, "subsample_slices: empty axis");

    SliceAcquisitionPattern pattern;
    pattern.axis = axis;
    for (int i = 0; i < dim; i += keep_every) pattern.indices.push_back(i);

    GridSize out_size = vol.size;
    const int kept = static_cast<int>(pattern.indices.size());
    (axis == Axis::x ? out_size.x : axis == Axis::y ? out_size.y : out_size.z) = kept;

    Volume out(out_size, 0.0f, vol.spacing);
    for (int k = 0; k < kept; ++k) {
        const int slice = pattern.indices[static_cast<std::size_t>(k)];
        switch (axis) {
            case Axis::x:
                for (int z = 0; z < vol.size.z; ++z)
                    for (int y = 0; y < vol.size.y; ++y) out.at(k, y, z) = vol.at(slice, y, z);
                break;
            case Axis::y:
                for (int z = 0; z < vol.size.z; ++z)
                    for (int x = 0; x < vol.size.x; ++x) out.at(x, k, z) = vol.at(x, slice, z);
                break;
            default:
                for (int y = 0; y < vol.size.y; ++y)
                    for (int x = 0; x < vol.size.x; ++x) out.at(x, y, k) = vol.at(x, y, slice);
                break;
        }
    }
    return {std::move(out), std::move(pattern)};
}

namespace {
// FFTW planning is not thread-safe.
std::mutex g_fftw_mutex;
}  // namespace

Volume motion_blur(const Volume& vol, const std::array<double, 3>& shift_voxels, double weight) {
    require(weight >= 0.0 && weight <= 1.0, "motion_blur: weight must lie in [0,1]");
    const GridSize s = vol.size;
    const std::int64_t count = s.voxel_count();
    const std::int64_t nxh = s.x / 2 + 1;  // r2c stores the non-negative x frequencies
    const std::int64_t spec_count = static_cast<std::int64_t>(s.z) * s.y * nxh;

    std::vector<double> real(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) real[static_cast<std::size_t>(i)] = vol.data[i];
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(spec_count));

    fftw_plan fwd, bwd;
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        fwd = fftw_plan_dft_r2c_3d(s.z, s.y, s.x, real.data(),
                                   reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_3d(s.z, s.y, s.x,
                                   reinterpret_cast<fftw_complex*>(spec.data()), real.data(),
                                   FFTW_ESTIMATE);
    }
    fftw_execute(fwd);

    // (1-w) + w * exp(-2*pi*i * k . shift / dims), applied per frequency bin.
    std::int64_t i = 0;
    for (int kz = 0; kz < s.z; ++kz) {
        const double fz = (kz <= s.z / 2 ? kz : kz - s.z) * shift_voxels[2] / s.z;
        for (int ky = 0; ky < s.y; ++ky) {
            const double fy = (ky <= s.y / 2 ? ky : ky - s.y) * shift_voxels[1] / s.y;
            for (int kx = 0; kx < nxh; ++kx, ++i) {
                const double fx = kx * shift_voxels[0] / s.x;
                const double phase = -2.0 * kPi * (fx + fy + fz);
                const std::complex<double> ramp(std::cos(phase), std::sin(phase));
                spec[static_cast<std::size_t>(i)] *=
                    (1.0 - weight) + weight * ramp;
            }
        }
    }

    fftw_execute(bwd);
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }

    Volume out(s, 0.0f, vol.spacing);
    const double norm = 1.0 / static_cast<double>(count);
    for (std::int64_t j = 0; j < count; ++j) {
        out.data[j] = static_cast<float>(real[static_cast<std::size_t>(j)] * norm);
    }
    return out;
}

Phantom make_phantom(GridSize dims, Rng& rng, double noise_sigma, double edge_width) {
    require(dims.x >= 8 && dims.y >= 8 && dims.z >= 8, "make_phantom: dims must be >= 8");
    Phantom out;
    out.volume = Volume(dims, 0.0f);
    out.labels = LabelMap(dims, 0);

    // Low-frequency cosine background in roughly [0.25, 0.75].
    struct Mode {
        double amp, fx, fy, fz, phase;
    };
    std::vector<Mode> modes;
    for (int k = 0; k < 6; ++k) {
        modes.push_back({uniform(rng, 0.04, 0.12), uniform(rng, 0.5, 2.5),
                         uniform(rng, 0.5, 2.5), uniform(rng, 0.5, 2.5),
                         uniform(rng, 0.0, 2.0 * kPi)});
    }

    // Labelled ellipsoids: a large central structure, a medium lateral one and
    // a small deep one, each jittered per seed. Sizes are fractions of dims so
    // every structure stays above 1% of the volume.
    struct Ellipsoid {
        std::array<double, 3> centre_frac, radius_frac;
        double intensity;
        std::int32_t label;
    };
    std::vector<Ellipsoid> shapes = {
        {{0.5 + uniform(rng, -0.04, 0.04), 0.5 + uniform(rng, -0.04, 0.04),
          0.5 + uniform(rng, -0.04, 0.04)},
         {0.22 * uniform(rng, 0.88, 1.12), 0.14 * uniform(rng, 0.88, 1.12),
          0.17 * uniform(rng, 0.88, 1.12)},
         0.12,
         1},
        {{0.30 + uniform(rng, -0.03, 0.03), 0.62 + uniform(rng, -0.03, 0.03),
          0.40 + uniform(rng, -0.03, 0.03)},
         {0.16 * uniform(rng, 0.9, 1.1), 0.15 * uniform(rng, 0.9, 1.1),
          0.16 * uniform(rng, 0.9, 1.1)},
         0.95,
         2},
        {{0.68 + uniform(rng, -0.03, 0.03), 0.35 + uniform(rng, -0.03, 0.03),
          0.62 + uniform(rng, -0.03, 0.03)},
         {0.15 * uniform(rng, 0.9, 1.1), 0.16 * uniform(rng, 0.9, 1.1),
          0.14 * uniform(rng, 0.9, 1.1)},
         0.80,
         3},
    };

    std::int64_t i = 0;
    for (int z = 0; z < dims.z; ++z) {
        for (int y = 0; y < dims.y; ++y) {
            for (int x = 0; x < dims.x; ++x, ++i) {
                const double px = (x + 0.5) / dims.x;
                const double py = (y + 0.5) / dims.y;
                const double pz = (z + 0.5) / dims.z;
                double v = 0.5;
                for (const Mode& m : modes) {
                    v += m.amp * std::cos(2.0 * kPi * (m.fx * px + m.fy * py + m.fz * pz) +
                                          m.phase);
                }
                for (const Ellipsoid& e : shapes) {
                    const double dx = (px - e.centre_frac[0]) / e.radius_frac[0];
                    const double dy = (py - e.centre_frac[1]) / e.radius_frac[1];
                    const double dz = (pz - e.centre_frac[2]) / e.radius_frac[2];
                    const double rr = dx * dx + dy * dy + dz * dz;
                    if (rr < 1.0) {
                        const double edge = std::min(1.0, (1.0 - rr) / edge_width);
                        v = v * (1.0 - edge) + e.intensity * edge;
                        if (out.labels.labels[i] == 0) out.labels.labels[i] = e.label;
                    }
                }
                if (noise_sigma > 0.0) v += gaussian(rng, 0.0, noise_sigma);
                out.volume.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

DisplacementField make_ground_truth_deformation(GridSize dims, double max_magnitude, Rng& rng,
                                                double max_frequency) {
    DisplacementField field(dims);
    if (max_magnitude == 0.0) return field;

    struct Mode {
        double amp, fx, fy, fz, phase;
    };
    std::array<std::vector<Mode>, 3> comp_modes;
    for (auto& modes : comp_modes) {
        for (int k = 0; k < 4; ++k) {
            modes.push_back({gaussian(rng), uniform(rng, 0.4, max_frequency),
                             uniform(rng, 0.4, max_frequency), uniform(rng, 0.4, max_frequency),
                             uniform(rng, 0.0, 2.0 * kPi)});
        }
    }

    double max_abs = 0.0;
    for (int comp = 0; comp < 3; ++comp) {
        std::vector<double>& u = field.component(comp);
        std::int64_t i = 0;
        for (int z = 0; z < dims.z; ++z) {
            for (int y = 0; y < dims.y; ++y) {
                for (int x = 0; x < dims.x; ++x, ++i) {
                    const double px = (x + 0.5) / dims.x;
                    const double py = (y + 0.5) / dims.y;
                    const double pz = (z + 0.5) / dims.z;
                    double v = 0.0;
                    for (const Mode& m : comp_modes[static_cast<std::size_t>(comp)]) {
                        v += m.amp * std::cos(2.0 * kPi * (m.fx * px + m.fy * py + m.fz * pz) +
                                              m.phase);
                    }
                    u[static_cast<std::size_t>(i)] = v;
                    max_abs = std::max(max_abs, std::fabs(v));
                }
            }
        }
    }
    if (max_abs > 0.0) {
        const double scale = max_magnitude / max_abs;
        for (int comp = 0; comp < 3; ++comp) {
            for (double& v : field.component(comp)) v *= scale;
        }
    }
    return field;
}

}  // namespace sparsereg
