#include "sparsereg/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sparsereg/parallel.hpp"
#include "sparsereg/resample.hpp"

namespace sparsereg {

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, int t,
               const AdamParams& cfg) {
    require(params.size() == grad.size() && params.size() == state.m1.size() &&
                params.size() == state.m2.size(),
            "adam_step: size mismatch");
    require(t >= 1, "adam_step: t counts from 1");
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    const std::int64_t n = static_cast<std::int64_t>(params.size());
    parallel_chunks(n, 1 << 14, [&](std::int64_t i0, std::int64_t i1) {
        for (std::int64_t i = i0; i < i1; ++i) {
            const double g = grad[i];
            const double m1 = state.m1[i] = cfg.beta1 * state.m1[i] + (1.0 - cfg.beta1) * g;
            const double m2 = state.m2[i] = cfg.beta2 * state.m2[i] + (1.0 - cfg.beta2) * g * g;
            params[i] -= cfg.step_size * (m1 / c1) / (std::sqrt(m2 / c2) + cfg.eps);
        }
    });
}

void RegistrationConfig::validate() const {
    loss.validate();
    require(levels >= 1, "RegistrationConfig: levels must be >= 1");
    require(!iterations.empty(), "RegistrationConfig: iteration list is empty");
    for (int it : iterations) require(it >= 1, "RegistrationConfig: iterations must be >= 1");
    require(adam.step_size > 0.0, "RegistrationConfig: step_size must be > 0");
    require(convergence_window >= 1, "RegistrationConfig: convergence window must be >= 1");
}

int RegistrationConfig::iterations_for(int processing_position) const {
    const auto idx = std::min<std::size_t>(processing_position, iterations.size() - 1);
    return iterations[idx];
}

namespace {

GridSize half_size(GridSize s) {
    return GridSize{(s.x + 1) / 2, (s.y + 1) / 2, (s.z + 1) / 2};
}

template <typename BlockFn>
void for_each_block(GridSize fine, BlockFn&& fn) {
    const GridSize coarse = half_size(fine);
    for (int cz = 0; cz < coarse.z; ++cz) {
        for (int cy = 0; cy < coarse.y; ++cy) {
            for (int cx = 0; cx < coarse.x; ++cx) {
                fn(cx, cy, cz, 2 * cx, std::min(2 * cx + 1, fine.x - 1), 2 * cy,
                   std::min(2 * cy + 1, fine.y - 1), 2 * cz, std::min(2 * cz + 1, fine.z - 1));
            }
        }
    }
}

}  // namespace

Volume pyramid_downsample_volume(const Volume& vol, const ConfidenceMask& mask) {
    require_same_dims(vol.size, mask.size, "pyramid_downsample_volume");
    const GridSize coarse = half_size(vol.size);
    Volume out(coarse, 0.0f,
               Spacing{vol.spacing.x * 2, vol.spacing.y * 2, vol.spacing.z * 2});
    for_each_block(vol.size, [&](int cx, int cy, int cz, int x0, int x1, int y0, int y1, int z0,
                                 int z1) {
        double wsum = 0.0, wvsum = 0.0, vsum = 0.0;
        int n = 0;
        for (int z = z0; z <= z1; ++z) {
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double w = mask.at(x, y, z);
                    const double v = vol.at(x, y, z);
                    wsum += w;
                    wvsum += w * v;
                    vsum += v;
                    ++n;
                }
            }
        }
        out.at(cx, cy, cz) =
            static_cast<float>(wsum > 0.0 ? wvsum / wsum : vsum / static_cast<double>(n));
    });
    return out;
}

ConfidenceMask pyramid_downsample_mask(const ConfidenceMask& mask) {
    const GridSize coarse = half_size(mask.size);
    ConfidenceMask out(coarse);
    for_each_block(mask.size, [&](int cx, int cy, int cz, int x0, int x1, int y0, int y1, int z0,
                                  int z1) {
        double sum = 0.0;
        int n = 0;
        for (int z = z0; z <= z1; ++z) {
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    sum += mask.at(x, y, z);
                    ++n;
                }
            }
        }
        out.at(cx, cy, cz) = static_cast<float>(sum / n);
    });
    return out;
}

DisplacementField pyramid_upsample_field(const DisplacementField& coarse, GridSize fine_dims) {
    DisplacementField fine(fine_dims);
    const GridSize cs = coarse.size;
    auto sample = [&](const std::vector<double>& u, double x, double y, double z) {
        auto prep = [](double v, int dim, int& i0, double& t) {
            double c = v < 0.0 ? 0.0 : (v > dim - 1 ? dim - 1 : v);
            i0 = static_cast<int>(std::floor(c));
            if (i0 > dim - 2) i0 = std::max(0, dim - 2);
            t = dim == 1 ? 0.0 : c - i0;
        };
        int x0, y0, z0;
        double tx, ty, tz;
        prep(x, cs.x, x0, tx);
        prep(y, cs.y, y0, ty);
        prep(z, cs.z, z0, tz);
        const int x1 = std::min(x0 + 1, cs.x - 1);
        const int y1 = std::min(y0 + 1, cs.y - 1);
        const int z1 = std::min(z0 + 1, cs.z - 1);
        auto at = [&](int xi, int yi, int zi) {
            return u[(static_cast<std::int64_t>(zi) * cs.y + yi) * cs.x + xi];
        };
        const double c00 = at(x0, y0, z0) + tx * (at(x1, y0, z0) - at(x0, y0, z0));
        const double c10 = at(x0, y1, z0) + tx * (at(x1, y1, z0) - at(x0, y1, z0));
        const double c01 = at(x0, y0, z1) + tx * (at(x1, y0, z1) - at(x0, y0, z1));
        const double c11 = at(x0, y1, z1) + tx * (at(x1, y1, z1) - at(x0, y1, z1));
        const double c0 = c00 + ty * (c10 - c00);
        const double c1 = c01 + ty * (c11 - c01);
        return c0 + tz * (c1 - c0);
    };

    std::int64_t i = 0;
    for (int z = 0; z < fine_dims.z; ++z) {
        const double cz = (z - 0.5) / 2.0;
        for (int y = 0; y < fine_dims.y; ++y) {
            const double cy = (y - 0.5) / 2.0;
            for (int x = 0; x < fine_dims.x; ++x, ++i) {
                const double cx = (x - 0.5) / 2.0;
                fine.ux[i] = 2.0 * sample(coarse.ux, cx, cy, cz);
                fine.uy[i] = 2.0 * sample(coarse.uy, cx, cy, cz);
                fine.uz[i] = 2.0 * sample(coarse.uz, cx, cy, cz);
            }
        }
    }
    return fine;
}

namespace {

struct PyramidLevel {
    Volume fixed;
    ConfidenceMask fixed_mask;
    Volume moving;
    ConfidenceMask moving_mask;
};

std::vector<PyramidLevel> build_pyramid(const Volume& fixed, const ConfidenceMask& fixed_mask,
                                        const Volume& moving, const ConfidenceMask& moving_mask,
                                        int levels) {
    std::vector<PyramidLevel> pyr;
    pyr.push_back({fixed, fixed_mask, moving, moving_mask});
    for (int l = 1; l < levels; ++l) {
        const PyramidLevel& prev = pyr.back();
        if (prev.fixed.size.min_dim() < 2) {
            throw InvalidInputError("register: pyramid level " + std::to_string(l) +
                                    " would shrink a dimension below 2 (volume " +
                                    prev.fixed.size.to_string() + ")");
        }
        PyramidLevel next;
        next.fixed = pyramid_downsample_volume(prev.fixed, prev.fixed_mask);
        next.fixed_mask = pyramid_downsample_mask(prev.fixed_mask);
        next.moving = pyramid_downsample_volume(prev.moving, prev.moving_mask);
        next.moving_mask = pyramid_downsample_mask(prev.moving_mask);
        pyr.push_back(std::move(next));
    }
    return pyr;
}

ConfidenceMask combined_mask_at(const ConfidenceMask& fixed_mask,
                                const ConfidenceMask& moving_mask,
                                const DisplacementField& field) {
    return combine_masks(fixed_mask, warp_mask(moving_mask, field));
}

}  // namespace

LossReport evaluate_objective(const Volume& fixed, const ConfidenceMask& fixed_mask,
                              const Volume& moving, const ConfidenceMask& moving_mask,
                              const DisplacementField& field, const LossConfig& cfg) {
    const ConfidenceMask combined = combined_mask_at(fixed_mask, moving_mask, field);
    return total_loss_from_moving(fixed, combined, moving, field, cfg);
}

RegistrationResult register_pair(const Volume& fixed, const ConfidenceMask& fixed_mask,
                                 const Volume& moving, const ConfidenceMask& moving_mask,
                                 const RegistrationConfig& cfg) {
    cfg.validate();
    require_same_dims(fixed.size, fixed_mask.size, "register");
    require_same_dims(moving.size, moving_mask.size, "register");
    require_same_dims(fixed.size, moving.size, "register");

    const auto pyramid =
        build_pyramid(fixed, fixed_mask, moving, moving_mask, cfg.levels);

    RegistrationResult result;
    DisplacementField field(pyramid.back().fixed.size);
    detail::LossWorkspace ws;

    for (int level = cfg.levels - 1; level >= 0; --level) {
        const auto t_start = std::chrono::steady_clock::now();
        const PyramidLevel& lvl = pyramid[static_cast<std::size_t>(level)];
        if (!(field.size == lvl.fixed.size)) {
            field = pyramid_upsample_field(field, lvl.fixed.size);
        }

        const int max_iters = cfg.iterations_for(cfg.levels - 1 - level);
        const auto n_params = static_cast<std::size_t>(field.size.voxel_count());
        AdamState state_x(n_params), state_y(n_params), state_z(n_params);
        DisplacementField grad(field.size);
        std::vector<double> level_losses;
        int iters_run = 0;

        for (int iter = 0; iter < max_iters; ++iter) {
            const ConfidenceMask combined =
                combined_mask_at(lvl.fixed_mask, lvl.moving_mask, field);
            if (combined.total_weight() <= 0.0) {
                throw DegenerateMaskError("register: combined mask has zero weight at level " +
                                          std::to_string(level));
            }
            const LossReport report =
                detail::evaluate(lvl.fixed, combined, lvl.moving, field, cfg.loss, &grad, ws);
            if (!std::isfinite(report.total)) {
                throw DivergenceError("register: non-finite loss at iteration " +
                                          std::to_string(result.loss_trace.size()),
                                      static_cast<int>(result.loss_trace.size()));
            }
            result.loss_trace.push_back(report);
            result.trace_level.push_back(level);
            level_losses.push_back(report.total);
            iters_run = iter + 1;

            const int w = cfg.convergence_window;
            if (iter >= w) {
                const double then = level_losses[static_cast<std::size_t>(iter - w)];
                const double scale = std::max(std::fabs(then), 1e-12);
                if (std::fabs(then - report.total) <= cfg.convergence_tol * scale) break;
            }

            const int t = iter + 1;
            adam_step(field.ux, grad.ux, state_x, t, cfg.adam);
            adam_step(field.uy, grad.uy, state_y, t, cfg.adam);
            adam_step(field.uz, grad.uz, state_z, t, cfg.adam);
        }

        const auto t_end = std::chrono::steady_clock::now();
        result.levels.push_back(
            {level, iters_run, std::chrono::duration<double>(t_end - t_start).count()});
    }

    // Final objective at the returned field, so the trace ends at the result.
    {
        const PyramidLevel& finest = pyramid.front();
        const ConfidenceMask combined =
            combined_mask_at(finest.fixed_mask, finest.moving_mask, field);
        result.loss_trace.push_back(
            total_loss_from_moving(finest.fixed, combined, finest.moving, field, cfg.loss));
        result.trace_level.push_back(0);
    }

    result.field = std::move(field);
    return result;
}

}  // namespace sparsereg
