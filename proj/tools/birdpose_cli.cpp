#ifdef BIRDPOSE_CLI11_SINGLE_HEADER
#include "CLI11.hpp"
#else
#include <CLI/CLI.hpp>
#endif

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "birdpose/config.hpp"
#include "birdpose/grid.hpp"
#include "birdpose/io.hpp"
#include "birdpose/render.hpp"

namespace fs = std::filesystem;
using namespace birdpose;

namespace {

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

void print_error(std::string_view kind, const std::string& field, const std::string& message) {
    std::cerr << "error: kind=" << kind << " field=" << one_line(field) << " message=" << one_line(message) << '\n';
}

void warn(const std::string& message) { std::cerr << "warning: " << one_line(message) << '\n'; }

// Options shared by every subcommand.
struct Common {
    std::optional<std::string> config;
    std::optional<std::string> model;

    AppConfig load() const {
        AppConfig c = load_config(config ? std::optional<fs::path>(*config) : std::nullopt);
        if (model) c.model = *model;
        return c;
    }
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("--config", common.config,
                    std::string("JSON config file (default: $") + kConfigEnvVar + ", then ./birdpose.json)");
    cmd->add_option("--model", common.model, "skeleton model JSON (default: config, then the built-in bird)");
}

// Command-line overrides of the fitting configuration.
struct FitFlags {
    std::optional<int> window, median_window, stage1_iters, stage2_iters;
    std::optional<double> lambda_kpt, lambda_msk, lambda_pp, lambda_vel, lambda_acc, beta_g, beta_p, gm_sigma;
    std::optional<double> learning_rate, beta1, beta2, adam_epsilon, sharpness, stage1_lambda_msk;
    bool median = false, common_size = false;
    CLI::Option* median_opt = nullptr;
    CLI::Option* size_opt = nullptr;

    void add(CLI::App* cmd) {
        const char* g = "Fitting";
        cmd->add_option("--window", window, "frames per optimization window")->group(g);
        cmd->add_option("--lambda-kpt", lambda_kpt, "keypoint weight")->group(g);
        cmd->add_option("--lambda-msk", lambda_msk, "silhouette weight")->group(g);
        cmd->add_option("--lambda-pp", lambda_pp, "pose prior weight")->group(g);
        cmd->add_option("--lambda-vel", lambda_vel, "velocity smoothness weight")->group(g);
        cmd->add_option("--lambda-acc", lambda_acc, "acceleration smoothness weight")->group(g);
        cmd->add_option("--beta-g", beta_g, "global-orientation smoothness factor")->group(g);
        cmd->add_option("--beta-p", beta_p, "body-pose smoothness factor")->group(g);
        cmd->add_option("--gm-sigma", gm_sigma, "Geman-McLure scale, pixels")->group(g);
        median_opt = cmd->add_flag("--median,!--no-median", median, "median-filter keypoints before fitting")->group(g);
        cmd->add_option("--median-window", median_window, "median filter length (odd)")->group(g);
        size_opt = cmd->add_flag("--common-size,!--per-frame-size", common_size, "one bone scale per window")
                       ->group(g);
        cmd->add_option("--stage1-iters", stage1_iters, "keypoint-only iterations")->group(g);
        cmd->add_option("--stage2-iters", stage2_iters, "full-objective iterations")->group(g);
        cmd->add_option("--stage1-lambda-msk", stage1_lambda_msk, "silhouette weight during stage 1")->group(g);
        cmd->add_option("--lr", learning_rate, "Adam learning rate")->group(g);
        cmd->add_option("--beta1", beta1, "Adam first-moment decay")->group(g);
        cmd->add_option("--beta2", beta2, "Adam second-moment decay")->group(g);
        cmd->add_option("--adam-epsilon", adam_epsilon, "Adam denominator epsilon")->group(g);
        cmd->add_option("--sharpness", sharpness, "silhouette edge sharpness, 1/pixels")->group(g);
    }

    void apply(FitConfig& f) const {
        auto set = [](const auto& src, auto& dst) {
            if (src) dst = *src;
        };
        set(window, f.window_size);
        set(lambda_kpt, f.weights.lambda_kpt);
        set(lambda_msk, f.weights.lambda_msk);
        set(lambda_pp, f.weights.lambda_pp);
        set(lambda_vel, f.weights.lambda_vel);
        set(lambda_acc, f.weights.lambda_acc);
        set(beta_g, f.weights.beta_g);
        set(beta_p, f.weights.beta_p);
        set(gm_sigma, f.weights.gm_sigma);
        if (median_opt->count()) f.use_median_filter = median;
        set(median_window, f.median_window);
        if (size_opt->count()) f.common_size = common_size;
        set(stage1_iters, f.stage1_iters);
        set(stage2_iters, f.stage2_iters);
        set(stage1_lambda_msk, f.stage1_lambda_msk);
        set(learning_rate, f.adam.learning_rate);
        set(beta1, f.adam.beta1);
        set(beta2, f.adam.beta2);
        set(adam_epsilon, f.adam.epsilon);
        set(sharpness, f.sharpness);
    }
};

std::map<DetectionKey, BinaryMask> read_masks(const fs::path& path) {
    return fs::is_directory(path) ? read_mask_dir(path) : read_masks_csv(path);
}

Dataset dataset_from_files(const fs::path& observations, const fs::path& tracks_csv, int num_keypoints) {
    const auto dets = read_observations_json(observations);
    Dataset d;
    d.tracks = assemble_tracks(read_tracks_csv(tracks_csv), dets, num_keypoints);
    return d;
}

// ---- synth

struct SynthArgs {
    Common common;
    std::string out;
    std::optional<int> frames, birds, width, height;
    std::optional<std::uint64_t> seed;
    std::optional<double> noise, outliers;
    std::string mask_format = "csv";
    bool images = false;
};

void run_synth(const SynthArgs& a) {
    AppConfig cfg = a.common.load();
    SynthConfig& s = cfg.synth;
    if (a.frames) s.frames = *a.frames;
    if (a.birds) s.birds = *a.birds;
    if (a.width) s.width = *a.width;
    if (a.height) s.height = *a.height;
    if (a.seed) s.seed = *a.seed;
    if (a.noise) s.motion.keypoint_noise = *a.noise;
    if (a.outliers) s.motion.outlier_probability = *a.outliers;
    cfg.validate();
    const SkeletonModel model = load_app_model(cfg);

    const auto birds = generate_scene(model, s, s.seed);
    std::map<DetectionKey, KeypointSet> keypoints;
    std::map<DetectionKey, BinaryMask> masks;
    std::map<DetectionKey, TruthRecord> truth;
    int missing = 0;
    for (size_t b = 0; b < birds.size(); ++b) {
        const auto& seq = birds[b];
        for (size_t t = 0; t < seq.poses.size(); ++t) {
            const DetectionKey key{static_cast<int>(t), static_cast<int>(b)};
            const int k = static_cast<int>(seq.truth[t].rows());
            truth[key] = {seq.truth[t], Visibility(k, !seq.missing[t])};
            if (seq.missing[t]) {
                ++missing;
                continue;
            }
            keypoints[key] = seq.keypoints[t];
            masks[key] = seq.masks[t];
        }
    }

    const fs::path out(a.out);
    fs::create_directories(out);
    write_keypoints_csv(out / "keypoints.csv", keypoints);
    write_truth_csv(out / "truth.csv", truth);
    if (a.mask_format == "csv") {
        write_masks_csv(out / "masks.csv", masks);
    } else {
        fs::create_directories(out / "masks");
        for (const auto& [key, m] : masks) {
            write_pgm(out / "masks" / ("mask_" + std::to_string(key.first) + "_" + std::to_string(key.second) + ".pgm"),
                      m);
        }
    }
    if (a.images) {
        fs::create_directories(out / "frames");
        for (int t = 0; t < s.frames; ++t) {
            GrayImage im(s.width, s.height, 40);
            for (int b = 0; b < s.birds; ++b) {
                const auto it = masks.find({t, b});
                if (it == masks.end()) continue;
                for (size_t i = 0; i < im.data.size(); ++i) {
                    if (it->second.data[i]) im.data[i] = 200;
                }
            }
            write_pgm(out / "frames" / (frame_stem(t) + ".pgm"), im);
        }
    }
    std::cout << "synth: " << s.birds << " birds, " << s.frames << " frames, " << keypoints.size()
              << " detections, " << missing << " missing -> " << out.string() << '\n';
}

// ---- preprocess

struct PreprocessArgs {
    Common common;
    std::string keypoints, masks, out;
    std::optional<int> pad, dilation;
};

void run_preprocess(const PreprocessArgs& a) {
    AppConfig cfg = a.common.load();
    if (a.pad) cfg.crop.pad = *a.pad;
    if (a.dilation) cfg.crop.dilation = *a.dilation;
    cfg.validate();
    const SkeletonModel model = load_app_model(cfg);
    const auto kp = read_keypoints_csv(a.keypoints, model.num_keypoints());
    const auto masks = read_masks(a.masks);
    std::vector<DetectionKey> skipped;
    const auto dets = preprocess_detections(kp, masks, cfg.crop, &skipped);
    for (const auto& [frame, id] : skipped) {
        warn("skipped frame " + std::to_string(frame) + " detection " + std::to_string(id) +
             ": needs both keypoints and a non-empty mask");
    }
    write_observations_json(a.out, dets);
    std::cout << "preprocess: " << dets.size() << " detections, " << skipped.size() << " skipped -> " << a.out
              << '\n';
}

// ---- track

struct TrackArgs {
    Common common;
    std::string observations, out;
    std::optional<double> iou_threshold;
    std::optional<int> memory;
};

void run_track(const TrackArgs& a) {
    AppConfig cfg = a.common.load();
    if (a.iou_threshold) cfg.tracker.iou_threshold = *a.iou_threshold;
    if (a.memory) cfg.tracker.memory = *a.memory;
    cfg.validate();
    const auto tracks = track_detections(read_observations_json(a.observations), cfg.tracker);
    write_tracks_csv(a.out, tracks);
    std::cout << "track: " << tracks.size() << " tracks -> " << a.out << '\n';
}

// ---- fit

struct FitArgs {
    Common common;
    FitFlags flags;
    std::string observations, tracks, out;
    std::vector<int> only;
};

void run_fit(const FitArgs& a) {
    AppConfig cfg = a.common.load();
    a.flags.apply(cfg.fit);
    cfg.validate();
    const SkeletonModel model = load_app_model(cfg);
    Dataset data = dataset_from_files(a.observations, a.tracks, model.num_keypoints());
    if (!a.only.empty()) {
        const std::set<int> keep(a.only.begin(), a.only.end());
        for (int id : keep) {
            const bool found = std::any_of(data.tracks.begin(), data.tracks.end(),
                                           [&](const TrackData& t) { return t.track_id == id; });
            if (!found) throw Error(ErrorKind::InvalidArgument, "--track", "no track " + std::to_string(id));
        }
        std::erase_if(data.tracks, [&](const TrackData& t) { return !keep.count(t.track_id); });
    }
    std::vector<FittedTrack> fitted;
    for (const auto& tr : data.tracks) {
        FitResult fit = fit_track(model, cfg.camera, tr.observations, cfg.fit);
        double initial = 0.0, final = 0.0;
        for (const auto& w : fit.windows) {
            initial += w.initial_loss;
            final += w.final_loss;
        }
        std::cout << "fit: track " << tr.track_id << ", " << tr.observations.size() << " frames, "
                  << fit.windows.size() << " windows, loss " << format_double(initial) << " -> "
                  << format_double(final) << '\n';
        fitted.push_back({tr.track_id, tr.observations, std::move(fit)});
    }
    write_fit_json(a.out, fitted);
}

// ---- eval

struct EvalArgs {
    Common common;
    std::string fit, truth;
    std::optional<std::string> out;
};

void run_eval(const EvalArgs& a) {
    AppConfig cfg = a.common.load();
    cfg.validate();
    const SkeletonModel model = load_app_model(cfg);
    const auto tracks = read_fit_json(a.fit, model);
    const auto truth = read_truth_csv(a.truth, model.num_keypoints());
    const auto res = evaluate_tracks(tracks, truth);
    if (res.report.tracks.size() < tracks.size()) {
        warn(std::to_string(tracks.size() - res.report.tracks.size()) + " tracks matched no ground-truth bird");
    }
    const std::string table = metrics_csv(res.report, res.birds, res.frames);
    if (a.out) {
        write_text(*a.out, table);
        std::cout << "eval: me_p " << format_double(res.report.me_p) << ", me_v " << format_double(res.report.me_v)
                  << " -> " << *a.out << '\n';
    } else {
        std::cout << table;
    }
}

// ---- grid

struct GridArgs {
    Common common;
    FitFlags flags;
    std::string spec, out;
    std::optional<int> threads, frames;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> observations, tracks, truth;
};

// Replicate r of a synthetic grid uses seed + kReplicateSeedStride * r, clear of the per-bird seed offsets.
constexpr std::uint64_t kReplicateSeedStride = 1000;

void run_grid_cmd(const GridArgs& a) {
    AppConfig cfg = a.common.load();
    a.flags.apply(cfg.fit);
    if (a.threads) cfg.threads = *a.threads;
    if (a.frames) cfg.synth.frames = *a.frames;
    if (a.seed) cfg.synth.seed = *a.seed;
    cfg.validate();
    const SkeletonModel model = load_app_model(cfg);
    const auto cells = enumerate_grid(grid_from_json(read_text(a.spec)));

    const int given = !!a.observations + !!a.tracks + !!a.truth;
    if (given != 0 && given != 3) {
        throw Error(ErrorKind::InvalidArgument, "--observations", "file data needs --observations, --tracks and --truth");
    }
    GridData data;
    if (given == 3) {
        const Dataset d = dataset_from_files(*a.observations, *a.tracks, model.num_keypoints());
        auto truth = read_truth_csv(*a.truth, model.num_keypoints());
        data = [d, truth](int) { return GridInput{d, truth}; };
    } else {
        data = [&](int r) {
            return GridInput{synthetic_dataset(model, cfg.synth, cfg.synth.seed + kReplicateSeedStride * r, cfg.crop),
                             {}};
        };
    }
    const auto rows = run_grid(cells, model, cfg.camera, cfg.fit, data, cfg.threads);
    write_text(a.out, grid_table(rows));
    const auto failed = std::count_if(rows.begin(), rows.end(), [](const GridRow& r) { return !r.ok; });
    for (const auto& r : rows) {
        if (!r.ok) warn("grid run " + std::to_string(r.cell.index) + " failed: " + r.error);
    }
    std::cout << "grid: " << rows.size() << " runs, " << failed << " failed -> " << a.out << '\n';
}

// ---- render

struct RenderArgs {
    Common common;
    std::string fit, frames, out;
    bool silhouettes = false;
    std::optional<double> sharpness;
};

void run_render(const RenderArgs& a) {
    AppConfig cfg = a.common.load();
    cfg.validate();
    const SkeletonModel model = load_app_model(cfg);
    const auto tracks = read_fit_json(a.fit, model);
    RenderOptions opt;
    opt.sharpness = a.sharpness.value_or(cfg.fit.sharpness);
    opt.silhouettes = a.silhouettes;
    const auto summary = render_overlays(tracks, model, cfg.camera, a.frames, a.out, opt);
    for (int f : summary.missing_images) warn("no image for frame " + std::to_string(f) + "; skipped");
    std::cout << "render: " << summary.written.size() << " overlays, " << summary.silhouettes << " silhouettes -> "
              << a.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bird pose estimation from 2D keypoints and silhouettes"};
    app.name("birdpose");
    app.require_subcommand(1, 1);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "generate a synthetic multi-bird dataset with ground truth");
    add_common(c_synth, synth.common);
    c_synth->add_option("--out", synth.out, "output directory")->required();
    c_synth->add_option("--frames", synth.frames, "frames per bird");
    c_synth->add_option("--birds", synth.birds, "number of birds");
    c_synth->add_option("--width", synth.width, "image width");
    c_synth->add_option("--height", synth.height, "image height");
    c_synth->add_option("--seed", synth.seed, "random seed");
    c_synth->add_option("--noise", synth.noise, "keypoint noise, pixels");
    c_synth->add_option("--outliers", synth.outliers, "keypoint outlier probability");
    c_synth->add_option("--mask-format", synth.mask_format, "csv (masks.csv) or pgm (masks/ directory)")
        ->check(CLI::IsMember({"csv", "pgm"}));
    c_synth->add_flag("--images", synth.images, "also write frames/frame_NNNNN.pgm");

    PreprocessArgs pre;
    auto* c_pre = app.add_subcommand("preprocess", "crop detections into normalized observations");
    add_common(c_pre, pre.common);
    c_pre->add_option("--keypoints", pre.keypoints, "keypoint CSV")->required();
    c_pre->add_option("--masks", pre.masks, "mask CSV or directory of mask PGMs")->required();
    c_pre->add_option("--out", pre.out, "observations JSON")->required();
    c_pre->add_option("--pad", pre.pad, "box padding per side, pixels");
    c_pre->add_option("--dilation", pre.dilation, "mask dilation width, pixels");

    TrackArgs trk;
    auto* c_track = app.add_subcommand("track", "link detections across frames by box overlap");
    add_common(c_track, trk.common);
    c_track->add_option("--observations", trk.observations, "observations JSON")->required();
    c_track->add_option("--out", trk.out, "tracks CSV")->required();
    c_track->add_option("--iou-threshold", trk.iou_threshold, "minimum IoU to continue a track");
    c_track->add_option("--memory", trk.memory, "frames a track survives without a match");

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "fit the skeleton to every track");
    add_common(c_fit, fit.common);
    c_fit->add_option("--observations", fit.observations, "observations JSON")->required();
    c_fit->add_option("--tracks", fit.tracks, "tracks CSV")->required();
    c_fit->add_option("--out", fit.out, "fit JSON")->required();
    c_fit->add_option("--track", fit.only, "fit only these track ids");
    fit.flags.add(c_fit);

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "score fitted tracks against ground truth");
    add_common(c_eval, ev.common);
    c_eval->add_option("--fit", ev.fit, "fit JSON")->required();
    c_eval->add_option("--truth", ev.truth, "truth CSV")->required();
    c_eval->add_option("--out", ev.out, "metrics CSV (default: stdout)");

    GridArgs grid;
    auto* c_grid = app.add_subcommand("grid", "run a hyperparameter grid");
    add_common(c_grid, grid.common);
    c_grid->add_option("--spec", grid.spec, "grid spec JSON")->required();
    c_grid->add_option("--out", grid.out, "results CSV")->required();
    c_grid->add_option("--threads", grid.threads, "worker threads");
    c_grid->add_option("--frames", grid.frames, "synthetic frames per bird");
    c_grid->add_option("--seed", grid.seed, "synthetic base seed");
    c_grid->add_option("--observations", grid.observations, "observations JSON (file data)");
    c_grid->add_option("--tracks", grid.tracks, "tracks CSV (file data)");
    c_grid->add_option("--truth", grid.truth, "truth CSV (file data)");
    grid.flags.add(c_grid);

    RenderArgs rnd;
    auto* c_render = app.add_subcommand("render", "draw fitted birds over the original frames");
    add_common(c_render, rnd.common);
    c_render->add_option("--fit", rnd.fit, "fit JSON")->required();
    c_render->add_option("--frames", rnd.frames, "directory of frame_NNNNN.ppm/.pgm images")->required();
    c_render->add_option("--out", rnd.out, "output directory")->required();
    c_render->add_flag("--silhouettes", rnd.silhouettes, "also write crop-space silhouettes");
    c_render->add_option("--sharpness", rnd.sharpness, "silhouette edge sharpness");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", "", e.what());
        return 2;
    }

    try {
        if (c_synth->parsed()) run_synth(synth);
        else if (c_pre->parsed()) run_preprocess(pre);
        else if (c_track->parsed()) run_track(trk);
        else if (c_fit->parsed()) run_fit(fit);
        else if (c_eval->parsed()) run_eval(ev);
        else if (c_grid->parsed()) run_grid_cmd(grid);
        else if (c_render->parsed()) run_render(rnd);
    } catch (const Error& e) {
        print_error(to_string(e.kind()), e.field(), e.message());
        return 1;
    } catch (const fs::filesystem_error& e) {
        print_error("io", e.path1().string(), e.code().message());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", "", e.what());
        return 1;
    }
    return 0;
}
