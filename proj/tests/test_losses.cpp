#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sparsereg/losses.hpp"

using namespace sparsereg;

namespace {

DisplacementField safe_random_field(GridSize dims, Rng& rng) {
    // Fractional displacements well inside one cell, so finite differences
    // never cross a trilinear breakpoint.
    return oracles::random_smooth_field(dims, rng, 0.1, 0.35);
}

}  // namespace

TEST_SUITE_BEGIN("losses");

TEST_CASE("mse: zero on identical volumes, direct value on a 2-voxel example") {
    Rng rng(3);
    const Volume vol = oracles::random_volume(GridSize{4, 4, 4}, rng);
    CHECK(mse(vol, vol) == 0.0);

    Volume f(GridSize{2, 1, 1}), m(GridSize{2, 1, 1});
    f.data = {1.0f, 2.0f};
    m.data = {3.0f, 2.0f};
    CHECK(mse(f, m) == doctest::Approx(2.0));
    CHECK_THROWS_AS(mse(f, Volume(GridSize{3, 1, 1})), InvalidInputError);
}

TEST_CASE("mse matches the naive loop") {
    Rng rng(7);
    const GridSize dims{8, 8, 8};
    const Volume f = oracles::random_volume(dims, rng);
    const Volume m = oracles::random_volume(dims, rng);
    CHECK(mse(f, m) == doctest::Approx(oracles::naive_mse(f, m)).epsilon(1e-10));
}

TEST_CASE("smse: direct example, degenerate mask, naive loop") {
    Volume f(GridSize{2, 1, 1}), m(GridSize{2, 1, 1});
    f.data = {1.0f, 2.0f};
    m.data = {3.0f, 2.0f};
    ConfidenceMask w(GridSize{2, 1, 1});
    w.weights = {1.0f, 0.0f};
    CHECK(smse(f, w, m) == doctest::Approx(4.0));

    ConfidenceMask zeros(GridSize{2, 1, 1}, 0.0f);
    CHECK_THROWS_AS(smse(f, zeros, m), DegenerateMaskError);

    Rng rng(11);
    const GridSize dims{8, 8, 8};
    const Volume rf = oracles::random_volume(dims, rng);
    const Volume rm = oracles::random_volume(dims, rng);
    const ConfidenceMask rw = oracles::random_binary_mask(dims, rng, 0.5);
    CHECK(smse(rf, rw, rm) ==
          doctest::Approx(oracles::naive_smse(rf, rw, rm)).epsilon(1e-10));
}

TEST_CASE("smse with an all-ones mask reduces exactly to mse") {
    Rng rng(13);
    const GridSize dims{8, 8, 8};
    for (int trial = 0; trial < 20; ++trial) {
        const Volume f = oracles::random_volume(dims, rng);
        const Volume m = oracles::random_volume(dims, rng);
        ConfidenceMask ones(dims, 1.0f);
        CHECK(smse(f, ones, m) == doctest::Approx(mse(f, m)).epsilon(1e-12));
    }
}

TEST_CASE("lcc of a volume with itself is ~1 per voxel under paper-sum") {
    Rng rng(17);
    const GridSize dims{9, 9, 9};
    const Volume f = oracles::random_volume(dims, rng, 0.0, 1.0);
    const double total = lcc(f, f, WindowSpec(3), 1e-5, Normalization::paper_sum);
    CHECK(total == doctest::Approx(static_cast<double>(dims.voxel_count())).epsilon(1e-3));
}

TEST_CASE("lcc is invariant to affine intensity rescaling") {
    Rng rng(19);
    const GridSize dims{9, 9, 9};
    const Volume f = oracles::random_volume(dims, rng);
    Volume scaled(dims);
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        scaled.data[i] = 2.5f * f.data[i] + 0.75f;
    }
    const double self = lcc(f, f, WindowSpec(3), 1e-5);
    const double affine = lcc(f, scaled, WindowSpec(3), 1e-5);
    CHECK(affine == doctest::Approx(self).epsilon(1e-4));
}

TEST_CASE("lcc matches the naive per-window oracle") {
    Rng rng(23);
    const GridSize dims{9, 9, 9};
    const Volume f = oracles::random_volume(dims, rng);
    const Volume m = oracles::random_volume(dims, rng);
    const double fast = lcc(f, m, WindowSpec(3), 1e-5);
    const double slow = oracles::naive_local_correlation(f, m, nullptr, 3, 1e-5);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-4));
}

TEST_CASE("slcc reduces to lcc for an all-ones mask") {
    Rng rng(29);
    const GridSize dims{8, 8, 8};
    for (int trial = 0; trial < 10; ++trial) {
        const Volume f = oracles::random_volume(dims, rng);
        const Volume m = oracles::random_volume(dims, rng);
        ConfidenceMask ones(dims, 1.0f);
        const double with_mask = slcc(f, ones, m, WindowSpec(5), 1e-5);
        const double without = lcc(f, m, WindowSpec(5), 1e-5);
        CHECK(with_mask == doctest::Approx(without).epsilon(1e-5));
    }
}

TEST_CASE("slcc of an all-zero mask is zero") {
    Rng rng(31);
    const GridSize dims{7, 7, 7};
    const Volume f = oracles::random_volume(dims, rng);
    const Volume m = oracles::random_volume(dims, rng);
    ConfidenceMask zeros(dims, 0.0f);
    CHECK(slcc(f, zeros, m, WindowSpec(3), 1e-5) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("slcc matches the naive masked oracle with 1-in-3 slice masks") {
    Rng rng(37);
    const GridSize dims{9, 9, 9};
    const Volume f = oracles::random_volume(dims, rng);
    const Volume m = oracles::random_volume(dims, rng);
    const ConfidenceMask w = oracles::slab_mask(dims, 3);
    const double fast = slcc(f, w, m, WindowSpec(5), 1e-5);
    const double slow = oracles::naive_local_correlation(f, m, &w, 5, 1e-5);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-4));
}

TEST_CASE("slcc under voxel-mean normalization stays within [0, 1]") {
    Rng rng(41);
    const GridSize dims{7, 7, 7};
    for (int trial = 0; trial < 10; ++trial) {
        const Volume f = oracles::random_volume(dims, rng);
        const Volume m = oracles::random_volume(dims, rng);
        const ConfidenceMask w = oracles::random_binary_mask(dims, rng, 0.5);
        const double v = slcc(f, w, m, WindowSpec(3), 1e-5, Normalization::voxel_mean);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-9);
    }
}

TEST_CASE("slcc intensity invariance holds on observed voxels") {
    Rng rng(43);
    const GridSize dims{9, 9, 9};
    const Volume f = oracles::random_volume(dims, rng);
    const Volume m = oracles::random_volume(dims, rng);
    const ConfidenceMask w = oracles::slab_mask(dims, 3);
    Volume f2(dims);
    for (std::size_t i = 0; i < f.data.size(); ++i) f2.data[i] = 3.0f * f.data[i] + 1.0f;
    const double base = slcc(f, w, m, WindowSpec(5), 1e-5);
    const double scaled = slcc(f2, w, m, WindowSpec(5), 1e-5);
    CHECK(scaled == doctest::Approx(base).epsilon(1e-3));
}

TEST_CASE("slcc ignores intensities at zero-weight voxels bit-exactly") {
    Rng rng(47);
    const GridSize dims{9, 9, 9};
    Volume f = oracles::random_volume(dims, rng);
    const Volume m = oracles::random_volume(dims, rng);
    const ConfidenceMask w = oracles::slab_mask(dims, 3);
    const double before = slcc(f, w, m, WindowSpec(5), 1e-5);
    // Scramble f on every interpolated (zero-weight) slice.
    for (int z = 0; z < dims.z; ++z) {
        if (z % 3 == 0) continue;
        for (int y = 0; y < dims.y; ++y) {
            for (int x = 0; x < dims.x; ++x) {
                f.at(x, y, z) = static_cast<float>(uniform(rng, -10.0, 10.0));
            }
        }
    }
    const double after = slcc(f, w, m, WindowSpec(5), 1e-5);
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("smoothness: constant fields cost zero, single step costs 1") {
    DisplacementField constant(GridSize{4, 4, 4});
    for (double& v : constant.ux) v = 3.7;
    for (double& v : constant.uy) v = -1.2;
    CHECK(smoothness(constant) == 0.0);

    DisplacementField step(GridSize{2, 1, 1});
    step.ux = {0.0, 1.0};
    CHECK(smoothness(step) == 1.0);
}

TEST_CASE("smoothness matches the naive loop and ignores global offsets") {
    Rng rng(53);
    const GridSize dims{6, 6, 6};
    DisplacementField field = oracles::random_smooth_field(dims, rng, -2.0, 2.0);
    CHECK(smoothness(field) == doctest::Approx(oracles::naive_smoothness(field)).epsilon(1e-10));

    DisplacementField shifted = field;
    for (double& v : shifted.ux) v += 100.0;
    for (double& v : shifted.uy) v -= 42.0;
    for (double& v : shifted.uz) v += 7.5;
    CHECK(smoothness(shifted) == doctest::Approx(smoothness(field)).epsilon(1e-9));
}

TEST_CASE("total_loss: lambda 0 reduces to the similarity term") {
    Rng rng(59);
    const GridSize dims{6, 6, 6};
    const Volume f = oracles::random_volume(dims, rng);
    const Volume m = oracles::random_volume(dims, rng);
    ConfidenceMask ones(dims, 1.0f);
    DisplacementField field = safe_random_field(dims, rng);
    LossConfig cfg;
    cfg.similarity = Similarity::smse;
    cfg.lambda = 0.0;
    const LossReport r = total_loss(f, ones, m, field, cfg);
    CHECK(r.total == r.similarity_term);
    CHECK(r.observed_voxel_weight == doctest::Approx(dims.voxel_count()));
}

TEST_CASE("total_loss: identical images at zero field give slcc total ~ -1") {
    Rng rng(61);
    const GridSize dims{8, 8, 8};
    const Volume f = oracles::random_volume(dims, rng);
    ConfidenceMask ones(dims, 1.0f);
    DisplacementField zero(dims);
    LossConfig cfg;
    cfg.similarity = Similarity::slcc;
    cfg.window = WindowSpec(5);
    cfg.normalization = Normalization::voxel_mean;
    const LossReport r = total_loss(f, ones, f, zero, cfg);
    CHECK(r.total == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK(r.smoothness_term == 0.0);
}

TEST_CASE("total_loss recomposes from independently computed components") {
    Rng rng(67);
    const GridSize dims{7, 7, 7};
    const Volume f = oracles::random_volume(dims, rng);
    const Volume m = oracles::random_volume(dims, rng);
    const ConfidenceMask w = oracles::random_binary_mask(dims, rng, 0.6);
    DisplacementField field = safe_random_field(dims, rng);

    LossConfig cfg;
    cfg.similarity = Similarity::slcc;
    cfg.window = WindowSpec(3);
    cfg.lambda = 1.5;
    cfg.normalization = Normalization::voxel_mean;

    const LossReport r = total_loss(f, w, m, field, cfg);
    const double n = static_cast<double>(dims.voxel_count());
    const double sim = -slcc(f, w, m, cfg.window, cfg.eps, Normalization::voxel_mean);
    const double smooth = smoothness(field) / n;
    CHECK(r.similarity_term == doctest::Approx(sim).epsilon(1e-9));
    CHECK(r.smoothness_term == doctest::Approx(smooth).epsilon(1e-12));
    CHECK(r.total ==
          doctest::Approx(r.similarity_term + cfg.lambda * r.smoothness_term).epsilon(1e-12));
}

TEST_CASE("total_loss_grad: identical images, zero field, lambda 0, MSE -> zero") {
    Rng rng(71);
    const GridSize dims{6, 6, 6};
    const Volume f = oracles::random_volume(dims, rng);
    ConfidenceMask ones(dims, 1.0f);
    DisplacementField zero(dims);
    LossConfig cfg;
    cfg.similarity = Similarity::mse;
    cfg.lambda = 0.0;
    const DisplacementField grad = total_loss_grad(f, ones, f, zero, cfg);
    CHECK(grad.max_abs() == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("smoothness-only gradient matches the naive adjoint") {
    Rng rng(73);
    const GridSize dims{5, 5, 5};
    const Volume f = oracles::random_volume(dims, rng);
    ConfidenceMask ones(dims, 1.0f);
    DisplacementField field = oracles::random_smooth_field(dims, rng, -1.0, 1.0);

    LossConfig cfg;
    cfg.similarity = Similarity::mse;
    cfg.lambda = 2.0;
    cfg.normalization = Normalization::paper_sum;

    // With fixed == moving == constant the similarity gradient vanishes and
    // only the smoothness adjoint remains.
    Volume constant(dims, 1.0f);
    const DisplacementField grad = total_loss_grad(constant, ones, constant, field, cfg);

    // Naive adjoint: differentiate the forward-difference sum directly.
    const double h = 1e-5;
    DisplacementField probe = field;
    for (int comp = 0; comp < 3; ++comp) {
        auto& u = probe.component(comp);
        const auto& g = grad.component(comp);
        for (std::size_t i = 0; i < u.size(); i += 11) {
            const double orig = u[i];
            u[i] = orig + h;
            const double up = oracles::naive_smoothness(probe);
            u[i] = orig - h;
            const double down = oracles::naive_smoothness(probe);
            u[i] = orig;
            const double fd = cfg.lambda * (up - down) / (2.0 * h);
            CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
    }
}

TEST_CASE("total_loss_grad matches central finite differences for all similarities") {
    Rng rng(79);
    const GridSize dims{6, 6, 6};
    const Volume f = oracles::random_volume(dims, rng);
    const Volume m = oracles::random_volume(dims, rng);
    ConfidenceMask w = oracles::slab_mask(dims, 3);

    for (Similarity sim :
         {Similarity::mse, Similarity::smse, Similarity::lcc, Similarity::slcc}) {
        CAPTURE(similarity_name(sim));
        LossConfig cfg;
        cfg.similarity = sim;
        cfg.lambda = 1.5;
        cfg.window = WindowSpec(5);
        cfg.normalization = Normalization::voxel_mean;
        const ConfidenceMask& mask = (sim == Similarity::mse || sim == Similarity::lcc)
                                         ? ConfidenceMask(dims, 1.0f)
                                         : w;
        DisplacementField field = safe_random_field(dims, rng);
        const DisplacementField analytic = total_loss_grad(f, mask, m, field, cfg);
        const DisplacementField fd = oracles::fd_total_loss_grad(f, mask, m, field, cfg, 1e-3);
        CHECK(oracles::rel_error_inf(analytic, fd) < 1e-3);
    }
}

TEST_CASE("mse gradcheck is tight away from breakpoints") {
    Rng rng(83);
    const GridSize dims{6, 6, 6};
    const Volume f = oracles::random_volume(dims, rng);
    const Volume m = oracles::random_volume(dims, rng);
    ConfidenceMask ones(dims, 1.0f);
    LossConfig cfg;
    cfg.similarity = Similarity::mse;
    cfg.lambda = 0.0;
    DisplacementField field = safe_random_field(dims, rng);
    const DisplacementField analytic = total_loss_grad(f, ones, m, field, cfg);
    const DisplacementField fd = oracles::fd_total_loss_grad(f, ones, m, field, cfg, 1e-3);
    CHECK(oracles::rel_error_inf(analytic, fd) < 1e-6);
}

TEST_SUITE_END();
