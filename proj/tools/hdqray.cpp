// Command-line renderer and analysis harness for the deformable
// distance-field puppet: render, ablate, bench, fit-probe, and the
// hdq probe debug query.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "hdq/harness.hpp"
#include "hdq/probefit.hpp"
#include "hdq/scene_io.hpp"

namespace {

using namespace hdq;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitInternal = 4;

struct CommonArgs {
    std::string scene_path;
    std::string pose_path;
    int pose_frame = 0;
    int samples_per_primitive = 4000;
};

struct LoadedScene {
    PuppetScene scene;
    TemplateCloud cloud;
    Pose pose;
};

LoadedScene load_common(const CommonArgs& args) {
    LoadedScene loaded;
    loaded.scene = load_scene(args.scene_path);
    loaded.cloud = bake_template(loaded.scene, args.samples_per_primitive);
    size_t bones = loaded.scene.skeleton.bone_count();
    if (!args.pose_path.empty()) {
        auto poses = load_animation(args.pose_path, bones);
        if (args.pose_frame < 0 || size_t(args.pose_frame) >= poses.size())
            throw ConfigError("--pose-frame out of range (animation has " +
                              std::to_string(poses.size()) + " frames)");
        loaded.pose = poses[args.pose_frame];
    } else {
        loaded.pose = Pose::rest(bones);
    }
    return loaded;
}

void add_common_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--scene", args.scene_path, "scene JSON file")->required();
    cmd->add_option("--pose", args.pose_path, "animation JSON file (one pose per frame)");
    cmd->add_option("--pose-frame", args.pose_frame, "frame index into the animation");
    cmd->add_option("--samples", args.samples_per_primitive,
                    "template samples per primitive (default 4000)");
}

void write_outputs(const std::string& path, const RenderResult& result, bool gamma,
                   const std::string& png_path) {
    write_pfm(path, result.color);
    std::filesystem::path cov = path;
    cov.replace_extension(".coverage.pfm");
    write_pfm(cov.string(), result.coverage);
    if (!png_path.empty()) write_png(png_path, result.color, gamma);
}

int run(int argc, char** argv) {
    CLI::App app{"deformable SDF renderer with hierarchical distance queries"};
    app.require_subcommand(1);

    // ---- render ----
    auto* render_cmd = app.add_subcommand("render", "render one frame");
    CommonArgs render_args;
    add_common_options(render_cmd, render_args);
    std::string camera_path, probe_path, output = "out.pfm", png_path, mode_str = "relit",
                vis_str = "soft", variant_str = "full";
    bool gamma = true;
    int threads = 0, nst = 16;
    double cutoff = 0.1;
    uint64_t seed = 0;
    render_cmd->add_option("--camera", camera_path, "camera JSON file");
    render_cmd->add_option("--probe", probe_path, "light probe (PFM or HDR)");
    render_cmd->add_option("--mode", mode_str, "relit|albedo|normal|visibility-uniform|ambient");
    render_cmd->add_option("--vis", vis_str, "soft|hard|none|local");
    render_cmd->add_option("--variant", variant_str, "full|coarse-only|fine-only|dense-march");
    render_cmd->add_option("--output,-o", output, "output PFM path");
    render_cmd->add_option("--png", png_path, "also write an 8-bit PNG preview");
    render_cmd->add_flag("--gamma,!--no-gamma", gamma, "gamma-encode the PNG preview (default on)");
    render_cmd->add_option("--nst", nst, "sphere tracing steps");
    render_cmd->add_option("--cutoff", cutoff, "fine-query cutoff");
    render_cmd->add_option("--threads", threads, "worker threads (HDQ_THREADS env as fallback)");
    render_cmd->add_option("--seed", seed, "reserved; renders are deterministic");

    // ---- ablate ----
    auto* ablate_cmd = app.add_subcommand("ablate", "per-variant intersection accuracy table");
    CommonArgs ablate_args;
    add_common_options(ablate_cmd, ablate_args);
    std::string ablate_camera, ablate_csv_path;
    ablate_cmd->add_option("--camera", ablate_camera, "camera JSON file");
    ablate_cmd->add_option("--csv", ablate_csv_path, "write the table as CSV");

    // ---- bench ----
    auto* bench_cmd = app.add_subcommand("bench", "frame timing per variant");
    CommonArgs bench_args;
    add_common_options(bench_cmd, bench_args);
    std::string bench_camera, bench_csv_path, bench_vis = "soft";
    int repetitions = 5;
    bool sweep_cutoff = false;
    bench_cmd->add_option("--camera", bench_camera, "camera JSON file");
    bench_cmd->add_option("--repetitions", repetitions, "timing repetitions (median reported)");
    bench_cmd->add_option("--vis", bench_vis, "visibility kind for the timed renders");
    bench_cmd->add_option("--csv", bench_csv_path, "write timings as CSV");
    bench_cmd->add_flag("--cutoff-sweep", sweep_cutoff, "also sweep the fine-query cutoff");

    // ---- fit-probe ----
    auto* fit_cmd = app.add_subcommand("fit-probe", "estimate the light probe from renders");
    std::string fit_manifest, fit_output = "fitted_probe.pfm", fit_report_path;
    double ridge = 1e-4;
    fit_cmd->add_option("--manifest", fit_manifest,
                        "JSON manifest: scene, views (camera/pose_frame/image)")->required();
    fit_cmd->add_option("--output,-o", fit_output, "fitted probe PFM path");
    fit_cmd->add_option("--report", fit_report_path, "text report path (default stdout)");
    fit_cmd->add_option("--ridge", ridge, "ridge regularizer lambda");

    // ---- hdq probe ----
    auto* hdq_cmd = app.add_subcommand("hdq", "distance-query debugging");
    auto* probe_cmd = hdq_cmd->add_subcommand("probe", "print one DistanceSample");
    CommonArgs probe_args;
    add_common_options(probe_cmd, probe_args);
    std::vector<double> point{0, 0, 0};
    double probe_cutoff = -1;
    bool dump_knn = false;
    probe_cmd->add_option("--point", point, "query point x y z")->expected(3);
    probe_cmd->add_option("--cutoff", probe_cutoff, "cutoff override");
    probe_cmd->add_flag("--knn", dump_knn, "also dump the KNN records");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (render_cmd->parsed()) {
        auto loaded = load_common(render_args);
        RenderConfig cfg;
        if (!camera_path.empty()) cfg.camera = camera_from_json(load_json_file(camera_path));
        cfg.mode = parse_render_mode(mode_str);
        cfg.vis = parse_vis_kind(vis_str);
        cfg.variant = parse_variant(variant_str);
        cfg.trace.n_steps = nst;
        cfg.hdq.cutoff = cutoff;
        cfg.threads = threads;
        if (!probe_path.empty()) {
            bool resampled = false;
            cfg.probe = read_probe(probe_path, &resampled);
            if (resampled)
                std::cerr << "warning: probe resampled to " << kProbeRows << "x" << kProbeCols
                          << "\n";
        }
        RenderResult result = render(loaded.scene, loaded.cloud, loaded.pose, cfg);
        write_outputs(output, result, gamma, png_path);
        std::cout << "rendered " << cfg.camera.width << "x" << cfg.camera.height << " in "
                  << result.stats.seconds << " s: " << result.stats.hits << " hits, "
                  << result.stats.background << " background, " << result.stats.failures
                  << " failures, " << result.stats.fine_evaluations << " fine evals\n";
        return kExitOk;
    }

    if (ablate_cmd->parsed()) {
        auto loaded = load_common(ablate_args);
        Camera cam;
        if (!ablate_camera.empty()) cam = camera_from_json(load_json_file(ablate_camera));
        HdqConfig hdq_cfg;
        TraceConfig trace_cfg;
        auto rows = ablate(loaded.scene, loaded.cloud, loaded.pose, cam, hdq_cfg, trace_cfg);
        std::string csv = ablate_csv(rows);
        std::cout << csv;
        if (!ablate_csv_path.empty()) {
            std::ofstream out(ablate_csv_path);
            if (!out) throw IoError("cannot write " + ablate_csv_path);
            out << csv;
        }
        return kExitOk;
    }

    if (bench_cmd->parsed()) {
        auto loaded = load_common(bench_args);
        RenderConfig cfg;
        if (!bench_camera.empty()) cfg.camera = camera_from_json(load_json_file(bench_camera));
        cfg.vis = parse_vis_kind(bench_vis);
        std::ostringstream csv;
        csv << "variant,median_seconds,min_seconds,repetitions\n";
        for (Variant v : {Variant::Full, Variant::DenseMarch}) {
            BenchRow row = bench_variant(loaded.scene, loaded.cloud, loaded.pose, cfg, v, repetitions);
            csv << row.variant << "," << row.median_seconds << "," << row.min_seconds << ","
                << row.repetitions << "\n";
        }
        if (sweep_cutoff) {
            HdqConfig hdq_cfg;
            TraceConfig trace_cfg;
            auto rows = cutoff_sweep(loaded.scene, loaded.cloud, loaded.pose, cfg.camera, hdq_cfg,
                                     trace_cfg, {0.01, 0.05, 0.1, 0.5}, repetitions);
            csv << "cutoff,median_seconds,mean_residual\n";
            for (const CutoffRow& r : rows)
                csv << r.cutoff << "," << r.median_seconds << "," << r.mean_residual << "\n";
        }
        std::cout << csv.str();
        if (!bench_csv_path.empty()) {
            std::ofstream out(bench_csv_path);
            if (!out) throw IoError("cannot write " + bench_csv_path);
            out << csv.str();
        }
        return kExitOk;
    }

    if (fit_cmd->parsed()) {
        Json manifest = load_json_file(fit_manifest);
        if (!manifest.contains("scene") || !manifest.contains("views"))
            throw ConfigError("fit manifest needs scene and views");
        PuppetScene scene = load_scene(manifest["scene"].get<std::string>());
        int samples = manifest.value("samples_per_primitive", 4000);
        TemplateCloud cloud = bake_template(scene, samples);

        std::vector<Pose> poses;
        if (manifest.contains("pose_file"))
            poses = load_animation(manifest["pose_file"].get<std::string>(),
                                   scene.skeleton.bone_count());

        std::vector<Image> images;
        std::vector<ObservationView> views;
        images.reserve(manifest["views"].size());
        for (const Json& vj : manifest["views"]) {
            ObservationView view;
            view.camera = camera_from_json(vj.at("camera"));
            int frame = vj.value("pose_frame", -1);
            view.pose = frame >= 0 && !poses.empty()
                            ? poses.at(size_t(frame))
                            : Pose::rest(scene.skeleton.bone_count());
            images.push_back(read_pfm(vj.at("image").get<std::string>()));
            views.push_back(view);
        }
        for (size_t i = 0; i < views.size(); ++i) views[i].image = &images[i];

        CollectOptions opts;
        opts.vis = parse_vis_kind(manifest.value("vis", std::string("none")));
        opts.max_px_per_frame = manifest.value("max_px_per_frame", 1000);
        auto observations = collect_observations(scene, cloud, views, opts);
        FitReport report = fit_probe(observations, ridge);
        write_probe(fit_output, report.probe);

        std::ostringstream rep;
        rep << "observations: " << report.observation_count << "\n"
            << "ridge lambda: " << report.lambda << "\n"
            << "residual rms: " << report.residual_rms.x << " " << report.residual_rms.y << " "
            << report.residual_rms.z << "\n"
            << "condition estimate: " << report.condition_estimate << "\n"
            << "texel coverage (row-major " << kProbeRows << "x" << kProbeCols << "):\n";
        double total = 0;
        for (double c : report.coverage) total += c;
        for (int r = 0; r < kProbeRows; ++r) {
            for (int c = 0; c < kProbeCols; ++c)
                rep << (report.coverage[r * kProbeCols + c] / std::max(total, 1e-300) >= 0.0001
                            ? '#'
                            : '.');
            rep << "\n";
        }
        if (fit_report_path.empty()) {
            std::cout << rep.str();
        } else {
            std::ofstream out(fit_report_path);
            if (!out) throw IoError("cannot write " + fit_report_path);
            out << rep.str();
        }
        return kExitOk;
    }

    if (probe_cmd->parsed()) {
        auto loaded = load_common(probe_args);
        auto state = make_pose_state(loaded.scene, loaded.cloud, loaded.pose);
        HdqConfig cfg;
        std::optional<double> cutoff_override;
        if (probe_cutoff > 0) cutoff_override = probe_cutoff;
        Vec3 x{point[0], point[1], point[2]};
        DistanceSample s = query(x, *state, cfg, cutoff_override);
        std::cout << "point: " << x.x << " " << x.y << " " << x.z << "\n"
                  << "d_coarse: " << s.d_coarse << "\n"
                  << "fine_evaluated: " << (s.fine_evaluated ? "yes" : "no") << "\n";
        if (s.d_fine) std::cout << "d_fine: " << *s.d_fine << "\n";
        std::cout << "d_tilde: " << s.d_tilde << "\n";
        if (s.canonical)
            std::cout << "canonical: " << s.canonical->x << " " << s.canonical->y << " "
                      << s.canonical->z << "\n";
        std::cout << "degenerate_warp: " << (s.degenerate_warp ? "yes" : "no") << "\n";
        if (dump_knn) {
            KnnResult knn = gs_knn(x, state->index, cfg.k, cfg.geodesic_cutoff);
            for (int i = 0; i < knn.k; ++i) {
                const KnnEntry& e = knn.entries[i];
                std::cout << "knn[" << i << "]: index=" << e.index << " d=" << e.signed_distance
                          << " v=(" << e.position.x << " " << e.position.y << " " << e.position.z
                          << ")\n";
            }
        }
        return kExitOk;
    }

    return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const hdq::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const hdq::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
