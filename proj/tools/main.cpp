// sparsereg command-line tool: simulation, registration, evaluation and the
// verification/performance harnesses, tied together through the native .svr
// container.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sparsereg/evaluate.hpp"
#include "sparsereg/io.hpp"
#include "sparsereg/losses.hpp"
#include "sparsereg/optimize.hpp"
#include "sparsereg/parallel.hpp"
#include "sparsereg/resample.hpp"
#include "sparsereg/simulate.hpp"
#include "sparsereg/transform.hpp"

using namespace sparsereg;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    require(!out.empty(), "empty integer list '" + csv + "'");
    return out;
}

std::array<double, 3> parse_vec3(const std::string& csv) {
    std::stringstream ss(csv);
    std::string item;
    std::array<double, 3> out = {0, 0, 0};
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(ss, item, ',')) {
            throw InvalidInputError("expected three comma-separated values, got '" + csv + "'");
        }
        out[static_cast<std::size_t>(i)] = std::stod(item);
    }
    return out;
}

struct LossFlags {
    std::string loss = "slcc";
    double lambda = 1.5;
    int window_n = 15;
    double eps = 1e-5;
    std::string normalization = "voxel-mean";

    void attach(CLI::App* cmd) {
        cmd->add_option("--loss", loss, "similarity: mse|smse|lcc|slcc")
            ->check(CLI::IsMember({"mse", "smse", "lcc", "slcc"}))
            ->capture_default_str();
        cmd->add_option("--lambda", lambda, "smoothness weight")->capture_default_str();
        cmd->add_option("--window-n", window_n, "correlation window edge (odd)")
            ->capture_default_str();
        cmd->add_option("--eps", eps, "denominator stabilizer")->capture_default_str();
        cmd->add_option("--normalization", normalization, "voxel-mean|paper-sum")
            ->check(CLI::IsMember({"voxel-mean", "paper-sum"}))
            ->capture_default_str();
    }

    LossConfig to_config() const {
        LossConfig cfg;
        cfg.similarity = similarity_from_name(loss);
        cfg.lambda = lambda;
        cfg.window = WindowSpec(window_n);
        cfg.eps = eps;
        cfg.normalization = normalization == "paper-sum" ? Normalization::paper_sum
                                                         : Normalization::voxel_mean;
        cfg.validate();
        return cfg;
    }

    json echo() const {
        return json{{"loss", loss},
                    {"lambda", lambda},
                    {"window_n", window_n},
                    {"eps", eps},
                    {"normalization", normalization}};
    }
};

struct OptimizerFlags {
    int levels = 3;
    std::string iters = "200,100";
    double step = 5e-4;
    double adam_eps = 5e-5;
    double tol = 1e-6;

    void attach(CLI::App* cmd) {
        cmd->add_option("--levels", levels, "pyramid depth")->capture_default_str();
        cmd->add_option("--iters", iters, "iterations per level, coarse first")
            ->capture_default_str();
        cmd->add_option("--step", step, "Adam step size (voxels)")->capture_default_str();
        cmd->add_option("--adam-eps", adam_eps, "Adam epsilon")->capture_default_str();
        cmd->add_option("--tol", tol, "relative convergence tolerance")->capture_default_str();
    }

    RegistrationConfig to_config(const LossFlags& loss) const {
        RegistrationConfig cfg;
        cfg.loss = loss.to_config();
        cfg.levels = levels;
        cfg.iterations = parse_int_list(iters);
        cfg.adam.step_size = step;
        cfg.adam.eps = adam_eps;
        cfg.convergence_tol = tol;
        cfg.validate();
        return cfg;
    }

    json echo() const {
        return json{{"levels", levels},
                    {"iters", iters},
                    {"step", step},
                    {"adam_eps", adam_eps},
                    {"tol", tol}};
    }
};

ConfidenceMask load_mask_or_ones(const std::string& path, GridSize dims,
                                 const std::string& what) {
    if (path.empty()) return ConfidenceMask(dims, 1.0f);
    ConfidenceMask mask = read_svr_mask(path);
    require_same_dims(mask.size, dims, what);
    return mask;
}

Volume load_volume_any(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".nii") {
        return read_nifti1(path);
    }
    return read_svr_volume(path);
}

LabelMap load_labels_any(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".nii") {
        return read_nifti1_labels(path);
    }
    return read_svr_labels(path);
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("report: cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

json trace_to_json(const RegistrationResult& result) {
    json trace = json::array();
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
        const LossReport& r = result.loss_trace[i];
        trace.push_back(json{{"level", result.trace_level[i]},
                             {"total", r.total},
                             {"similarity", r.similarity_term},
                             {"smoothness", r.smoothness_term},
                             {"observed_weight", r.observed_voxel_weight}});
    }
    return trace;
}

// ---------------------------------------------------------------------------

int cmd_register(const std::string& fixed_path, const std::string& fixed_mask_path,
                 const std::string& moving_path, const std::string& moving_mask_path,
                 const LossFlags& loss_flags, const OptimizerFlags& opt_flags,
                 const std::string& out_field, const std::string& out_warped,
                 const std::string& report_path) {
    const Volume fixed = load_volume_any(fixed_path);
    const Volume moving = load_volume_any(moving_path);
    const ConfidenceMask fixed_mask =
        load_mask_or_ones(fixed_mask_path, fixed.size, "--fixed-mask");
    const ConfidenceMask moving_mask =
        load_mask_or_ones(moving_mask_path, moving.size, "--moving-mask");

    const RegistrationConfig cfg = opt_flags.to_config(loss_flags);
    const RegistrationResult result =
        register_pair(fixed, fixed_mask, moving, moving_mask, cfg);

    if (!out_field.empty()) write_svr(out_field, result.field);
    if (!out_warped.empty()) write_svr(out_warped, warp_trilinear(moving, result.field));

    const double max_u = result.field.max_abs();
    json report;
    report["command"] = "register";
    report["config"] = json{{"fixed", fixed_path},
                            {"fixed_mask", fixed_mask_path},
                            {"moving", moving_path},
                            {"moving_mask", moving_mask_path},
                            {"threads", max_threads()}};
    report["config"].update(loss_flags.echo());
    report["config"].update(opt_flags.echo());
    report["final_total"] = result.loss_trace.back().total;
    report["final_similarity"] = result.loss_trace.back().similarity_term;
    report["final_smoothness"] = result.loss_trace.back().smoothness_term;
    report["max_displacement"] = max_u;
    report["iterations"] = json::array();
    json timings = json::array();
    for (const LevelStats& l : result.levels) {
        report["iterations"].push_back(
            json{{"level", l.level}, {"iterations", l.iterations_run}});
        timings.push_back(json{{"level", l.level}, {"seconds", l.seconds}});
    }
    report["timing"] = timings;
    report["loss_trace"] = trace_to_json(result);

    if (!report_path.empty()) write_json(report_path, report);
    std::cout << "final total " << result.loss_trace.back().total << ", max |u| " << max_u
              << "\n";
    return 0;
}

int cmd_simulate(const std::string& in_path, const std::string& labels_path, int keep_every,
                 const std::string& axis_name_str, double jitter_rot, double jitter_trans,
                 double jitter_scale, bool skip_affine, const std::string& blur_shift_csv,
                 double blur_weight, bool skip_blur, std::uint64_t seed,
                 const std::string& out_prefix) {
    SimulationConfig cfg;
    cfg.keep_every = keep_every;
    cfg.axis = axis_from_name(axis_name_str);
    cfg.max_rotation_deg = jitter_rot;
    cfg.max_translation = jitter_trans;
    cfg.max_log_scale = jitter_scale;
    cfg.blur_shift = parse_vec3(blur_shift_csv);
    cfg.blur_weight = blur_weight;
    cfg.seed = seed;
    cfg.validate();

    Volume vol = load_volume_any(in_path);
    LabelMap labels = labels_path.empty() ? LabelMap(vol.size, 0) : load_labels_any(labels_path);
    require_same_dims(vol.size, labels.size, "simulate: --labels");

    Rng rng(seed);
    AffineMatrix used = AffineMatrix::identity();
    if (!skip_affine) {
        auto moved = apply_random_affine(vol, labels, cfg, rng);
        used = moved.transform;
        vol = std::move(moved.volume);
        labels = std::move(moved.labels);
    }

    const int full_dim = vol.size.along(cfg.axis);
    auto sub = subsample_slices(vol, cfg.keep_every, cfg.axis);
    if (!skip_blur && cfg.blur_weight > 0.0) {
        sub.volume = motion_blur(sub.volume, cfg.blur_shift, cfg.blur_weight);
    }
    const Volume dense = upsample_slices(sub.volume, sub.pattern, full_dim);
    const ConfidenceMask mask = make_acquisition_mask(dense.size, sub.pattern);

    write_svr(out_prefix + "_sparse.svr", sub.volume);
    write_svr(out_prefix + "_dense.svr", dense);
    write_svr(out_prefix + "_mask.svr", mask);
    write_pattern(out_prefix + "_pattern.txt", sub.pattern);
    if (!labels_path.empty()) write_svr(out_prefix + "_labels.svr", labels);

    json report;
    report["command"] = "simulate";
    report["config"] = json{{"in", in_path},
                            {"labels", labels_path},
                            {"keep_every", keep_every},
                            {"axis", axis_name_str},
                            {"jitter_rot_deg", jitter_rot},
                            {"jitter_trans_voxels", jitter_trans},
                            {"jitter_log_scale", jitter_scale},
                            {"skip_affine", skip_affine},
                            {"blur_shift", blur_shift_csv},
                            {"blur_weight", blur_weight},
                            {"skip_blur", skip_blur},
                            {"seed", seed}};
    report["acquired_slices"] = sub.pattern.indices;
    json affine = json::array();
    for (int r = 0; r < 3; ++r) {
        affine.push_back(std::vector<double>(used.m[r].begin(), used.m[r].end()));
    }
    report["affine"] = affine;
    write_json(out_prefix + "_report.json", report);

    std::cout << "kept " << sub.pattern.indices.size() << " of " << full_dim << " slices along "
              << axis_name_str << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& true_path,
             const std::string& pattern_path, const std::string& labels_csv,
             const std::string& out_csv) {
    const LabelMap pred = load_labels_any(pred_path);
    const LabelMap truth = load_labels_any(true_path);
    std::vector<std::int32_t> labels;
    for (int l : parse_int_list(labels_csv)) labels.push_back(l);

    SliceAcquisitionPattern pattern;
    const bool restricted = !pattern_path.empty();
    if (restricted) pattern = read_pattern(pattern_path);

    const DiceReport report = dice(pred, truth, labels, restricted ? &pattern : nullptr);

    std::ostringstream csv;
    csv << "label,dice,n_voxels_a,n_voxels_b\n";
    for (std::int32_t l : labels) {
        const auto& sup = report.support.at(l);
        csv << l << ",";
        if (report.per_label.count(l)) {
            csv << report.per_label.at(l);
        } else {
            csv << "undefined";
        }
        csv << "," << sup.voxels_a << "," << sup.voxels_b << "\n";
    }
    csv << "mean," << report.stats.mean << ",,\n";
    csv << "sd," << report.stats.sd << ",,\n";
    csv << "median," << report.stats.median << ",,\n";
    csv << "mad," << report.stats.mad << ",,\n";

    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw IoError("eval: cannot open " + out_csv + " for writing");
        out << csv.str();
    }
    std::cout << csv.str();
    return 0;
}

struct SweepCase {
    int n = 0;
    std::vector<double> dice_scores;
    double seconds = 0.0;
};

int cmd_sweep_window(int size, int seeds, const std::string& n_list_csv, int keep_every,
                     double deform_max, const LossFlags& loss_flags,
                     const OptimizerFlags& opt_flags, const std::string& out_csv) {
    require(size >= 16, "sweep-window: --size must be >= 16");
    const std::vector<int> n_list = parse_int_list(n_list_csv);
    const GridSize dims{size, size, size};

    std::vector<SweepCase> cases;
    for (int n : n_list) cases.push_back(SweepCase{n, {}, 0.0});

    for (int seed = 0; seed < seeds; ++seed) {
        // One simulated subject per seed, shared across every window size.
        Rng rng(static_cast<std::uint64_t>(seed) * 7919 + 17);
        const Phantom atlas = make_phantom(dims, rng, 0.02);
        const DisplacementField truth_field =
            make_ground_truth_deformation(dims, deform_max, rng);
        const Volume subject = warp_trilinear(atlas.volume, truth_field);
        const LabelMap subject_labels = warp_labels(atlas.labels, truth_field);

        auto sub = subsample_slices(subject, keep_every, Axis::z);
        const Volume dense = upsample_slices(sub.volume, sub.pattern, size);
        const ConfidenceMask mask = make_acquisition_mask(dims, sub.pattern);
        ConfidenceMask ones(dims, 1.0f);

        for (SweepCase& c : cases) {
            LossFlags flags = loss_flags;
            flags.window_n = c.n;
            RegistrationConfig cfg = opt_flags.to_config(flags);
            const auto t0 = std::chrono::steady_clock::now();
            const RegistrationResult result =
                register_pair(dense, mask, atlas.volume, ones, cfg);
            c.seconds +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const LabelMap warped = warp_labels(atlas.labels, result.field);
            const DiceReport d = dice(warped, subject_labels, {1, 2, 3}, &sub.pattern);
            c.dice_scores.push_back(d.stats.mean);
        }
    }

    std::ostringstream csv;
    csv << "n,mean_dice,sd,median,mad,seconds\n";
    for (const SweepCase& c : cases) {
        const SummaryStats s = summarize(c.dice_scores);
        csv << c.n << "," << s.mean << "," << s.sd << "," << s.median << "," << s.mad << ","
            << c.seconds << "\n";
    }
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw IoError("sweep-window: cannot open " + out_csv + " for writing");
        out << csv.str();
    }
    std::cout << csv.str();
    return 0;
}

int cmd_gradcheck(int size, const LossFlags& loss_flags, double fd_step, std::uint64_t seed,
                  double threshold) {
    require(size >= 2, "gradcheck: --size must be >= 2");
    const GridSize dims{size, size, size};
    Rng rng(seed);
    Volume fixed(dims), moving(dims);
    for (float& v : fixed.data) v = static_cast<float>(uniform(rng));
    for (float& v : moving.data) v = static_cast<float>(uniform(rng));

    const LossConfig cfg = loss_flags.to_config();
    ConfidenceMask mask(dims, 1.0f);
    if (cfg.similarity == Similarity::smse || cfg.similarity == Similarity::slcc) {
        mask = ConfidenceMask(dims, 0.0f);
        for (int z = 0; z < dims.z; z += 3) {
            for (int y = 0; y < dims.y; ++y) {
                for (int x = 0; x < dims.x; ++x) mask.at(x, y, z) = 1.0f;
            }
        }
    }

    DisplacementField field(dims);
    for (int c = 0; c < 3; ++c) {
        for (double& v : field.component(c)) v = uniform(rng, 0.1, 0.35);
    }

    const DisplacementField analytic = total_loss_grad(fixed, mask, moving, field, cfg);

    DisplacementField probe = field;
    double max_diff = 0.0, max_mag = 1e-12;
    for (int c = 0; c < 3; ++c) {
        auto& u = probe.component(c);
        const auto& ga = analytic.component(c);
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double orig = u[i];
            u[i] = orig + fd_step;
            const double up = total_loss_from_moving(fixed, mask, moving, probe, cfg).total;
            u[i] = orig - fd_step;
            const double down = total_loss_from_moving(fixed, mask, moving, probe, cfg).total;
            u[i] = orig;
            const double fd = (up - down) / (2.0 * fd_step);
            max_diff = std::max(max_diff, std::fabs(ga[i] - fd));
            max_mag = std::max({max_mag, std::fabs(ga[i]), std::fabs(fd)});
        }
    }
    const double rel = max_diff / max_mag;
    const bool pass = rel < threshold;
    std::cout << "gradcheck loss=" << loss_flags.loss << " size=" << size
              << " fd_step=" << fd_step << " max_rel_error=" << rel << " threshold=" << threshold
              << " " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int cmd_bench(int size, int window_n, int reps) {
    require(size >= 8, "bench: --size must be >= 8");
    require(reps >= 1, "bench: --reps must be >= 1");
    const GridSize dims{size, size, size};
    Rng rng(1234);
    Volume fixed(dims), moving(dims);
    for (float& v : fixed.data) v = static_cast<float>(uniform(rng));
    for (float& v : moving.data) v = static_cast<float>(uniform(rng));
    ConfidenceMask mask(dims, 0.0f);
    for (int z = 0; z < dims.z; z += 7) {
        for (int y = 0; y < dims.y; ++y) {
            for (int x = 0; x < dims.x; ++x) mask.at(x, y, z) = 1.0f;
        }
    }

    auto time_op = [&](auto&& op) {
        std::vector<double> times;
        for (int r = 0; r < reps; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            op();
            times.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        return summarize(times);
    };

    const WindowSpec win(window_n);
    const auto box_stats = time_op([&] { (void)box_sum(fixed, win); });
    const auto slcc_stats = time_op([&] { (void)slcc(fixed, mask, moving, win, 1e-5); });

    LossConfig cfg;
    cfg.similarity = Similarity::slcc;
    cfg.window = win;
    DisplacementField field(dims);
    const auto grad_stats =
        time_op([&] { (void)total_loss_grad(fixed, mask, moving, field, cfg); });

    std::cout << "op,size,window_n,mean_seconds,sd_seconds,reps\n";
    std::cout << "box_sum," << size << "," << window_n << "," << box_stats.mean << ","
              << box_stats.sd << "," << reps << "\n";
    std::cout << "slcc_value," << size << "," << window_n << "," << slcc_stats.mean << ","
              << slcc_stats.sd << "," << reps << "\n";
    std::cout << "slcc_gradient," << size << "," << window_n << "," << grad_stats.mean << ","
              << grad_stats.sd << "," << reps << "\n";
    return 0;
}

int cmd_warp(const std::string& in_path, const std::string& labels_path,
             const std::string& field_path, const std::string& out_path) {
    require(in_path.empty() != labels_path.empty(),
            "warp: give exactly one of --in (intensity) or --labels");
    const DisplacementField field = read_svr_field(field_path);
    if (!in_path.empty()) {
        write_svr(out_path, warp_trilinear(load_volume_any(in_path), field));
    } else {
        write_svr(out_path, warp_labels(load_labels_any(labels_path), field));
    }
    return 0;
}

int cmd_phantom(int size, std::uint64_t seed, double noise, double deform_max,
                const std::string& out_prefix) {
    require(size >= 8, "phantom: --size must be >= 8");
    const GridSize dims{size, size, size};
    Rng rng(seed);
    const Phantom phantom = make_phantom(dims, rng, noise);
    write_svr(out_prefix + "_vol.svr", phantom.volume);
    write_svr(out_prefix + "_labels.svr", phantom.labels);
    if (deform_max > 0.0) {
        const DisplacementField field = make_ground_truth_deformation(dims, deform_max, rng);
        write_svr(out_prefix + "_subject.svr", warp_trilinear(phantom.volume, field));
        write_svr(out_prefix + "_subject_labels.svr", warp_labels(phantom.labels, field));
        write_svr(out_prefix + "_gt_field.svr", field);
    }
    std::cout << "phantom " << dims.to_string() << " seed " << seed << " -> " << out_prefix
              << "_*.svr\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deformable registration toolkit for sparse (wide slice-gap) volumes"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "max worker threads (0 = all cores)")
        ->envname("SPARSEREG_THREADS")
        ->capture_default_str();

    // register
    auto* reg = app.add_subcommand("register", "pairwise deformable registration");
    std::string fixed_path, fixed_mask_path, moving_path, moving_mask_path;
    std::string out_field, out_warped, report_path;
    LossFlags reg_loss;
    OptimizerFlags reg_opt;
    reg->add_option("--fixed", fixed_path, "fixed volume (.svr or .nii)")->required();
    reg->add_option("--fixed-mask", fixed_mask_path, "fixed confidence mask (.svr)");
    reg->add_option("--moving", moving_path, "moving volume (.svr or .nii)")->required();
    reg->add_option("--moving-mask", moving_mask_path, "moving confidence mask (.svr)");
    reg_loss.attach(reg);
    reg_opt.attach(reg);
    reg->add_option("--out-field", out_field, "output displacement field (.svr)");
    reg->add_option("--out-warped", out_warped, "output warped moving volume (.svr)");
    reg->add_option("--report", report_path, "JSON run report");

    // simulate
    auto* sim = app.add_subcommand("simulate", "sparse clinical acquisition simulator");
    std::string sim_in, sim_labels, sim_axis = "z", sim_blur_shift = "0.5,0,0", sim_prefix;
    int sim_keep = 7;
    double sim_rot = 3.0, sim_trans = 2.0, sim_scale = 0.02, sim_blur_weight = 0.5;
    bool sim_skip_affine = false, sim_skip_blur = false;
    std::uint64_t sim_seed = 0;
    sim->add_option("--in", sim_in, "input volume (.svr or .nii)")->required();
    sim->add_option("--labels", sim_labels, "input label map (.svr or .nii)");
    sim->add_option("--keep-every", sim_keep, "slice period")->capture_default_str();
    sim->add_option("--axis", sim_axis, "slice axis")
        ->check(CLI::IsMember({"x", "y", "z"}))
        ->capture_default_str();
    sim->add_option("--jitter-rot", sim_rot, "max rotation (degrees)")->capture_default_str();
    sim->add_option("--jitter-trans", sim_trans, "max translation (voxels)")
        ->capture_default_str();
    sim->add_option("--jitter-scale", sim_scale, "max log scale")->capture_default_str();
    sim->add_flag("--skip-affine", sim_skip_affine, "skip the random affine step");
    sim->add_option("--blur-shift", sim_blur_shift, "motion blur shift (voxels, x,y,z)")
        ->capture_default_str();
    sim->add_option("--blur-weight", sim_blur_weight, "motion blur mixing weight")
        ->capture_default_str();
    sim->add_flag("--skip-blur", sim_skip_blur, "skip the motion blur step");
    sim->add_option("--seed", sim_seed, "RNG seed")->capture_default_str();
    sim->add_option("--out-prefix", sim_prefix, "output file prefix")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "Dice evaluation of warped labels");
    std::string ev_pred, ev_true, ev_pattern, ev_labels, ev_csv;
    ev->add_option("--pred-labels", ev_pred, "predicted labels (.svr or .nii)")->required();
    ev->add_option("--true-labels", ev_true, "reference labels (.svr or .nii)")->required();
    ev->add_option("--pattern", ev_pattern, "restrict to acquired slices (pattern file)");
    ev->add_option("--labels-list", ev_labels, "comma-separated label ids")->required();
    ev->add_option("--out-csv", ev_csv, "output CSV path");

    // sweep-window
    auto* sweep =
        app.add_subcommand("sweep-window", "Dice vs correlation window size on phantoms");
    int sweep_size = 48, sweep_seeds = 3, sweep_keep = 7;
    double sweep_deform = 3.0;
    std::string sweep_n_list = "9,11,13,15,17", sweep_csv;
    LossFlags sweep_loss;
    OptimizerFlags sweep_opt;
    sweep_opt.iters = "150,100,60";
    sweep_opt.step = 0.25;
    sweep->add_option("--size", sweep_size, "phantom edge length")->capture_default_str();
    sweep->add_option("--seeds", sweep_seeds, "number of simulated subjects")
        ->capture_default_str();
    sweep->add_option("--n-list", sweep_n_list, "window sizes to sweep")->capture_default_str();
    sweep->add_option("--keep-every", sweep_keep, "slice period")->capture_default_str();
    sweep->add_option("--deform-max", sweep_deform, "ground-truth deformation magnitude")
        ->capture_default_str();
    sweep_loss.attach(sweep);
    sweep_opt.attach(sweep);
    sweep->add_option("--out-csv", sweep_csv, "output CSV path");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    int gc_size = 6;
    double gc_step = 1e-3, gc_threshold = 1e-3;
    std::uint64_t gc_seed = 7;
    LossFlags gc_loss;
    gc->add_option("--size", gc_size, "cubic instance edge length")->capture_default_str();
    gc_loss.attach(gc);
    gc->add_option("--fd-step", gc_step, "finite-difference step (voxels)")
        ->capture_default_str();
    gc->add_option("--seed", gc_seed, "RNG seed")->capture_default_str();
    gc->add_option("--threshold", gc_threshold, "max relative error to pass")
        ->capture_default_str();

    // bench
    auto* bench = app.add_subcommand("bench", "kernel timing harness");
    int bench_size = 128, bench_n = 15, bench_reps = 5;
    bench->add_option("--size", bench_size, "cubic volume edge length")->capture_default_str();
    bench->add_option("--window-n", bench_n, "correlation window edge")->capture_default_str();
    bench->add_option("--reps", bench_reps, "repetitions per op")->capture_default_str();

    // warp
    auto* wp = app.add_subcommand("warp", "apply a displacement field to a volume or labels");
    std::string wp_in, wp_labels, wp_field, wp_out;
    wp->add_option("--in", wp_in, "intensity volume to warp (trilinear)");
    wp->add_option("--labels", wp_labels, "label map to warp (nearest-neighbour)");
    wp->add_option("--field", wp_field, "displacement field (.svr)")->required();
    wp->add_option("--out", wp_out, "output path (.svr)")->required();

    // phantom
    auto* ph = app.add_subcommand("phantom", "synthetic labelled phantom generator");
    int ph_size = 64;
    std::uint64_t ph_seed = 0;
    double ph_noise = 0.015, ph_deform = 0.0;
    std::string ph_prefix;
    ph->add_option("--size", ph_size, "cubic edge length")->capture_default_str();
    ph->add_option("--seed", ph_seed, "RNG seed")->capture_default_str();
    ph->add_option("--noise", ph_noise, "intensity noise sigma")->capture_default_str();
    ph->add_option("--deform-max", ph_deform,
                   "also emit a deformed subject with this max displacement")
        ->capture_default_str();
    ph->add_option("--out-prefix", ph_prefix, "output file prefix")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        set_max_threads(threads);
        if (reg->parsed()) {
            return cmd_register(fixed_path, fixed_mask_path, moving_path, moving_mask_path,
                                reg_loss, reg_opt, out_field, out_warped, report_path);
        }
        if (sim->parsed()) {
            return cmd_simulate(sim_in, sim_labels, sim_keep, sim_axis, sim_rot, sim_trans,
                                sim_scale, sim_skip_affine, sim_blur_shift, sim_blur_weight,
                                sim_skip_blur, sim_seed, sim_prefix);
        }
        if (ev->parsed()) {
            return cmd_eval(ev_pred, ev_true, ev_pattern, ev_labels, ev_csv);
        }
        if (sweep->parsed()) {
            return cmd_sweep_window(sweep_size, sweep_seeds, sweep_n_list, sweep_keep,
                                    sweep_deform, sweep_loss, sweep_opt, sweep_csv);
        }
        if (gc->parsed()) {
            return cmd_gradcheck(gc_size, gc_loss, gc_step, gc_seed, gc_threshold);
        }
        if (bench->parsed()) {
            return cmd_bench(bench_size, bench_n, bench_reps);
        }
        if (wp->parsed()) {
            return cmd_warp(wp_in, wp_labels, wp_field, wp_out);
        }
        if (ph->parsed()) {
            return cmd_phantom(ph_size, ph_seed, ph_noise, ph_deform, ph_prefix);
        }
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return 0;
}
