#include "sparsereg/losses.hpp"

#include <algorithm>
#include <cmath>

#include "sparsereg/parallel.hpp"

namespace sparsereg {

Similarity similarity_from_name(const std::string& name) {
    if (name == "mse") return Similarity::mse;
    if (name == "smse") return Similarity::smse;
    if (name == "lcc") return Similarity::lcc;
    if (name == "slcc") return Similarity::slcc;
    throw InvalidInputError("unknown similarity '" + name + "' (expected mse|smse|lcc|slcc)");
}

const char* similarity_name(Similarity s) {
    switch (s) {
        case Similarity::mse: return "mse";
        case Similarity::smse: return "smse";
        case Similarity::lcc: return "lcc";
        default: return "slcc";
    }
}

namespace detail {

namespace {

constexpr std::int64_t kGrain = 8192;

double chunk_reduce(std::int64_t count, const std::function<double(std::int64_t, std::int64_t)>& f) {
    const std::int64_t n_chunks = (count + kGrain - 1) / kGrain;
    std::vector<double> partials(static_cast<std::size_t>(std::max<std::int64_t>(n_chunks, 1)), 0.0);
    parallel_chunks(count, kGrain, [&](std::int64_t b, std::int64_t e) {
        partials[static_cast<std::size_t>(b / kGrain)] = f(b, e);
    });
    double total = 0.0;
    for (double p : partials) total += p;
    return total;
}

}  // namespace

double local_correlation(const double* fixed, const double* warped, const double* weight,
                         GridSize size, int n, double eps, double* grad_warped,
                         LossWorkspace& ws) {
    const std::int64_t count = size.voxel_count();
    const auto ucount = static_cast<std::size_t>(count);
    const int r = (n - 1) / 2;

    auto boxed_product = [&](const double* a, const double* b, std::vector<double>& out) {
        ws.buf_a.resize(ucount);
        parallel_chunks(count, kGrain, [&](std::int64_t i0, std::int64_t i1) {
            if (a && b) {
                for (std::int64_t i = i0; i < i1; ++i) ws.buf_a[i] = a[i] * b[i];
            } else {
                const double* src = a ? a : b;
                for (std::int64_t i = i0; i < i1; ++i) ws.buf_a[i] = src[i];
            }
        });
        box_sum_d(ws.buf_a, size, n, out, ws.scratch);
    };
    auto boxed_triple = [&](const double* a, const double* b, const double* c,
                            std::vector<double>& out) {
        ws.buf_a.resize(ucount);
        parallel_chunks(count, kGrain, [&](std::int64_t i0, std::int64_t i1) {
            if (a) {
                for (std::int64_t i = i0; i < i1; ++i) ws.buf_a[i] = a[i] * b[i] * c[i];
            } else {
                for (std::int64_t i = i0; i < i1; ++i) ws.buf_a[i] = b[i] * c[i];
            }
        });
        box_sum_d(ws.buf_a, size, n, out, ws.scratch);
    };

    if (weight) {
        boxed_product(weight, nullptr, ws.sum_w);
    } else {
        // Unweighted windows: the weight sum is the in-bounds voxel count.
        ws.sum_w.resize(ucount);
        parallel_chunks(count, kGrain, [&](std::int64_t i0, std::int64_t i1) {
            for (std::int64_t i = i0; i < i1; ++i) {
                const int x = static_cast<int>(i % size.x);
                const int y = static_cast<int>((i / size.x) % size.y);
                const int z = static_cast<int>(i / (static_cast<std::int64_t>(size.x) * size.y));
                ws.sum_w[i] = static_cast<double>(axis_window_count(x, size.x, r)) *
                              axis_window_count(y, size.y, r) * axis_window_count(z, size.z, r);
            }
        });
    }
    boxed_product(weight, fixed, ws.sum_f);
    boxed_product(weight, warped, ws.sum_m);
    boxed_triple(weight, fixed, fixed, ws.sum_ff);
    boxed_triple(weight, warped, warped, ws.sum_mm);
    boxed_triple(weight, fixed, warped, ws.sum_fm);

    // Per-voxel window statistics. With S_* the windowed sums of
    // (w, wf, wm, wf^2, wm^2, wfm) and mu the eps-stabilised weighted means:
    //   cross = S_fm - mu_m S_f - mu_f S_m + mu_f mu_m S_w
    //   var_f = S_ff - 2 mu_f S_f + mu_f^2 S_w     (>= 0 up to rounding)
    //   cc    = cross^2 / (var_f var_m + eps)
    // The gradient coefficients are the exact partials of cc w.r.t. the three
    // warped-image sums, including the eps-mean residual terms.
    const bool want_grad = grad_warped != nullptr;
    const double value = chunk_reduce(count, [&](std::int64_t i0, std::int64_t i1) {
        double partial = 0.0;
        for (std::int64_t i = i0; i < i1; ++i) {
            const double sw = ws.sum_w[i];
            const double sf = ws.sum_f[i], sm = ws.sum_m[i];
            const double sff = ws.sum_ff[i], smm = ws.sum_mm[i], sfm = ws.sum_fm[i];
            const double d = sw + eps;
            const double mu_f = sf / d, mu_m = sm / d;
            const double cross = sfm - mu_m * sf - mu_f * sm + mu_f * mu_m * sw;
            const double var_f = sff - 2.0 * mu_f * sf + mu_f * mu_f * sw;
            const double var_m = smm - 2.0 * mu_m * sm + mu_m * mu_m * sw;
            const double denom = var_f * var_m + eps;
            partial += cross * cross / denom;
            if (want_grad) {
                const double dcc_dcross = 2.0 * cross / denom;
                const double dcc_dvarm = -cross * cross * var_f / (denom * denom);
                const double rf = sf - mu_f * sw;
                const double rm = sm - mu_m * sw;
                const double coef_fm = dcc_dcross;
                const double coef_mm = dcc_dvarm;
                const double coef_m = dcc_dcross * (-mu_f - rf / d) +
                                      dcc_dvarm * (-2.0 * mu_m - 2.0 * rm / d);
                ws.sum_ff[i] = coef_fm;  // sums are consumed; reuse their storage
                ws.sum_mm[i] = coef_mm;
                ws.sum_fm[i] = coef_m;
            }
        }
        return partial;
    });

    if (want_grad) {
        box_sum_d(ws.sum_ff, size, n, ws.buf_a, ws.scratch);
        box_sum_d(ws.sum_mm, size, n, ws.buf_b, ws.scratch);
        box_sum_d(ws.sum_fm, size, n, ws.buf_c, ws.scratch);
        parallel_chunks(count, kGrain, [&](std::int64_t i0, std::int64_t i1) {
            for (std::int64_t i = i0; i < i1; ++i) {
                const double g = fixed[i] * ws.buf_a[i] + 2.0 * warped[i] * ws.buf_b[i] +
                                 ws.buf_c[i];
                grad_warped[i] = weight ? weight[i] * g : g;
            }
        });
    }
    return value;
}

void smoothness_grad_accum(const DisplacementField& field, double scale, std::vector<double>& gx,
                           std::vector<double>& gy, std::vector<double>& gz) {
    const GridSize s = field.size;
    const std::int64_t nx = s.x, ny = s.y, nz = s.z;
    const std::int64_t sx = 1, sy = nx, sz = nx * ny;
    std::vector<double>* grads[3] = {&gx, &gy, &gz};
    for (int comp = 0; comp < 3; ++comp) {
        const std::vector<double>& u = field.component(comp);
        std::vector<double>& g = *grads[comp];
        parallel_chunks(nz, 1, [&](std::int64_t z0, std::int64_t z1) {
            for (std::int64_t z = z0; z < z1; ++z) {
                for (std::int64_t y = 0; y < ny; ++y) {
                    const std::int64_t base = z * sz + y * sy;
                    for (std::int64_t x = 0; x < nx; ++x) {
                        const std::int64_t i = base + x;
                        double acc = 0.0;
                        if (x + 1 < nx) acc -= 2.0 * (u[i + sx] - u[i]);
                        if (x > 0) acc += 2.0 * (u[i] - u[i - sx]);
                        if (y + 1 < ny) acc -= 2.0 * (u[i + sy] - u[i]);
                        if (y > 0) acc += 2.0 * (u[i] - u[i - sy]);
                        if (z + 1 < nz) acc -= 2.0 * (u[i + sz] - u[i]);
                        if (z > 0) acc += 2.0 * (u[i] - u[i - sz]);
                        g[i] += scale * acc;
                    }
                }
            }
        });
    }
}

namespace {

double mse_core(const double* fixed, const double* warped, std::int64_t count,
                const double* weight, double weight_sum, double* grad) {
    // weight == nullptr: plain MSE over all voxels.
    const double denom = weight ? weight_sum : static_cast<double>(count);
    const double value = chunk_reduce(count, [&](std::int64_t i0, std::int64_t i1) {
        double partial = 0.0;
        for (std::int64_t i = i0; i < i1; ++i) {
            const double diff = fixed[i] - warped[i];
            partial += weight ? weight[i] * diff * diff : diff * diff;
        }
        return partial;
    });
    if (grad) {
        parallel_chunks(count, kGrain, [&](std::int64_t i0, std::int64_t i1) {
            for (std::int64_t i = i0; i < i1; ++i) {
                const double scale = weight ? weight[i] : 1.0;
                grad[i] = 2.0 * scale * (warped[i] - fixed[i]) / denom;
            }
        });
    }
    return value / denom;
}

double smoothness_core(const DisplacementField& field) {
    const GridSize s = field.size;
    const std::int64_t nx = s.x, ny = s.y;
    const std::int64_t sy = nx, sz = nx * ny;
    const std::int64_t count = s.voxel_count();
    return chunk_reduce(count, [&](std::int64_t i0, std::int64_t i1) {
        double partial = 0.0;
        for (std::int64_t i = i0; i < i1; ++i) {
            const std::int64_t x = i % nx;
            const std::int64_t y = (i / nx) % ny;
            const std::int64_t z = i / sz;
            for (int comp = 0; comp < 3; ++comp) {
                const std::vector<double>& u = field.component(comp);
                if (x + 1 < nx) {
                    const double d = u[i + 1] - u[i];
                    partial += d * d;
                }
                if (y + 1 < ny) {
                    const double d = u[i + sy] - u[i];
                    partial += d * d;
                }
                if (z + 1 < s.z) {
                    const double d = u[i + sz] - u[i];
                    partial += d * d;
                }
            }
        }
        return partial;
    });
}

std::vector<double>& to_double_buf(const std::vector<float>& src, std::vector<double>& dst) {
    dst.resize(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
    return dst;
}

}  // namespace

LossReport evaluate(const Volume& fixed, const ConfidenceMask& combined_mask,
                    const Volume& moving, const DisplacementField& field, const LossConfig& cfg,
                    DisplacementField* grad, LossWorkspace& ws) {
    cfg.validate();
    require_same_dims(fixed.size, field.size, "total_loss");
    require_same_dims(fixed.size, combined_mask.size, "total_loss");

    const std::int64_t count = fixed.size.voxel_count();
    to_double_buf(fixed.data, ws.fixed_d);
    to_double_buf(combined_mask.weights, ws.weight_d);
    warp_trilinear_d(moving, field, ws.warped_d);

    const double weight_sum = chunked_sum(ws.weight_d.data(), count);
    const bool want_grad = grad != nullptr;
    if (want_grad) ws.grad_sim.assign(static_cast<std::size_t>(count), 0.0);
    double* gsim = want_grad ? ws.grad_sim.data() : nullptr;

    const double inv_count = 1.0 / static_cast<double>(count);
    double sim_term = 0.0;
    double grad_scale = 1.0;  // multiplies d(raw)/d(warped) to give d(sim_term)/d(warped)
    switch (cfg.similarity) {
        case Similarity::mse:
            sim_term = mse_core(ws.fixed_d.data(), ws.warped_d.data(), count, nullptr, 0.0, gsim);
            break;
        case Similarity::smse:
            if (weight_sum <= 0.0) {
                throw DegenerateMaskError("smse: combined mask has zero total weight");
            }
            sim_term = mse_core(ws.fixed_d.data(), ws.warped_d.data(), count, ws.weight_d.data(),
                                weight_sum, gsim);
            break;
        case Similarity::lcc:
        case Similarity::slcc: {
            const double* w =
                cfg.similarity == Similarity::slcc ? ws.weight_d.data() : nullptr;
            const double raw = local_correlation(ws.fixed_d.data(), ws.warped_d.data(), w,
                                                 fixed.size, cfg.window.n, cfg.eps, gsim, ws);
            const double norm = cfg.normalization == Normalization::voxel_mean ? inv_count : 1.0;
            sim_term = -raw * norm;
            grad_scale = -norm;
            break;
        }
    }

    const double smooth_norm =
        cfg.normalization == Normalization::voxel_mean ? inv_count : 1.0;
    const double smooth_term = smoothness_core(field) * smooth_norm;

    LossReport report;
    report.similarity_term = sim_term;
    report.smoothness_term = smooth_term;
    report.total = sim_term + cfg.lambda * smooth_term;
    report.observed_voxel_weight = weight_sum;

    if (want_grad) {
        if (grad_scale != 1.0) {
            parallel_chunks(count, kGrain, [&](std::int64_t i0, std::int64_t i1) {
                for (std::int64_t i = i0; i < i1; ++i) ws.grad_sim[i] *= grad_scale;
            });
        }
        grad->size = field.size;
        warp_adjoint_d(ws.grad_sim, moving, field, grad->ux, grad->uy, grad->uz);
        if (cfg.lambda > 0.0) {
            smoothness_grad_accum(field, cfg.lambda * smooth_norm, grad->ux, grad->uy, grad->uz);
        }
    }
    return report;
}

}  // namespace detail

double mse(const Volume& fixed, const Volume& warped) {
    require_same_dims(fixed.size, warped.size, "mse");
    std::vector<double> f(fixed.data.begin(), fixed.data.end());
    std::vector<double> m(warped.data.begin(), warped.data.end());
    return detail::mse_core(f.data(), m.data(), fixed.size.voxel_count(), nullptr, 0.0, nullptr);
}

double smse(const Volume& fixed, const ConfidenceMask& combined_mask, const Volume& warped) {
    require_same_dims(fixed.size, warped.size, "smse");
    require_same_dims(fixed.size, combined_mask.size, "smse");
    std::vector<double> f(fixed.data.begin(), fixed.data.end());
    std::vector<double> m(warped.data.begin(), warped.data.end());
    std::vector<double> w(combined_mask.weights.begin(), combined_mask.weights.end());
    const double wsum = chunked_sum(w.data(), fixed.size.voxel_count());
    if (wsum <= 0.0) throw DegenerateMaskError("smse: combined mask has zero total weight");
    return detail::mse_core(f.data(), m.data(), fixed.size.voxel_count(), w.data(), wsum,
                            nullptr);
}

double lcc(const Volume& fixed, const Volume& warped, WindowSpec win, double eps,
           Normalization norm) {
    win.validate();
    require_same_dims(fixed.size, warped.size, "lcc");
    detail::LossWorkspace ws;
    std::vector<double> f(fixed.data.begin(), fixed.data.end());
    std::vector<double> m(warped.data.begin(), warped.data.end());
    const double raw =
        detail::local_correlation(f.data(), m.data(), nullptr, fixed.size, win.n, eps, nullptr, ws);
    return norm == Normalization::voxel_mean ? raw / static_cast<double>(fixed.size.voxel_count())
                                             : raw;
}

double slcc(const Volume& fixed, const ConfidenceMask& combined_mask, const Volume& warped,
            WindowSpec win, double eps, Normalization norm) {
    win.validate();
    require_same_dims(fixed.size, warped.size, "slcc");
    require_same_dims(fixed.size, combined_mask.size, "slcc");
    detail::LossWorkspace ws;
    std::vector<double> f(fixed.data.begin(), fixed.data.end());
    std::vector<double> m(warped.data.begin(), warped.data.end());
    std::vector<double> w(combined_mask.weights.begin(), combined_mask.weights.end());
    const double raw = detail::local_correlation(f.data(), m.data(), w.data(), fixed.size, win.n,
                                                 eps, nullptr, ws);
    return norm == Normalization::voxel_mean ? raw / static_cast<double>(fixed.size.voxel_count())
                                             : raw;
}

double smoothness(const DisplacementField& field) { return detail::smoothness_core(field); }

LossReport total_loss(const Volume& fixed, const ConfidenceMask& combined_mask,
                      const Volume& warped, const DisplacementField& field,
                      const LossConfig& cfg) {
    // Evaluate with a zero field against the pre-warped image so the warp is a
    // bit-exact identity, then attach the smoothness of the actual field.
    cfg.validate();
    require_same_dims(fixed.size, warped.size, "total_loss");
    require_same_dims(fixed.size, combined_mask.size, "total_loss");
    require_same_dims(fixed.size, field.size, "total_loss");
    detail::LossWorkspace ws;
    DisplacementField identity(fixed.size);
    LossReport report = detail::evaluate(fixed, combined_mask, warped, identity, cfg, nullptr, ws);
    const double smooth_norm = cfg.normalization == Normalization::voxel_mean
                                   ? 1.0 / static_cast<double>(fixed.size.voxel_count())
                                   : 1.0;
    report.smoothness_term = detail::smoothness_core(field) * smooth_norm;
    report.total = report.similarity_term + cfg.lambda * report.smoothness_term;
    return report;
}

LossReport total_loss_from_moving(const Volume& fixed, const ConfidenceMask& combined_mask,
                                  const Volume& moving, const DisplacementField& field,
                                  const LossConfig& cfg) {
    detail::LossWorkspace ws;
    return detail::evaluate(fixed, combined_mask, moving, field, cfg, nullptr, ws);
}

DisplacementField total_loss_grad(const Volume& fixed, const ConfidenceMask& combined_mask,
                                  const Volume& moving, const DisplacementField& field,
                                  const LossConfig& cfg) {
    detail::LossWorkspace ws;
    DisplacementField grad(field.size);
    detail::evaluate(fixed, combined_mask, moving, field, cfg, &grad, ws);
    return grad;
}

}  // namespace sparsereg
