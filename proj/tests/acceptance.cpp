// Acceptance suite: every shipping criterion at its stated tolerance, one
// pass/fail line each. Exits non-zero when any criterion fails.

#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <numeric>

#include "fixtures.hpp"
#include "hdq/harness.hpp"
#include "hdq/probefit.hpp"

using namespace hdq;

namespace {

int failures = 0;

void criterion(int number, const std::string& name, const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    std::cout << "CRITERION " << number << " [" << (ok ? "PASS" : "FAIL") << "] " << name;
    if (!detail.empty()) std::cout << " -- " << detail;
    std::cout << std::endl;
    if (!ok) ++failures;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<int> order(v.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int x, int y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (size_t i = 0; i < order.size(); ++i) r[order[i]] = double(i);
        return r;
    };
    std::vector<double> ra = ranks(a), rb = ranks(b);
    double n = double(a.size()), d2 = 0;
    for (size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace

int main() {
    std::cout.setf(std::ios::fixed);
    std::cout.precision(6);

    // ---- 1: sphere-tracing accuracy ordering on the bent fixture ----
    criterion(1, "sphere-tracing accuracy ordering (full <= 5e-4, variants >= 10x)", [](std::string& d) {
        auto t0 = std::chrono::steady_clock::now();
        PuppetScene scene = fixtures::bent_fixture_scene();
        TemplateCloud cloud = bake_template(scene, 12000);
        Camera cam = fixtures::bent_fixture_camera(256, 256);
        HdqConfig hdq_cfg;
        TraceConfig trace_cfg;
        auto rows = ablate(scene, cloud, fixtures::bent_pose(), cam, hdq_cfg, trace_cfg,
                           /*include_dense_march=*/false);
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const AblateRow& full = rows[0];
        const AblateRow& coarse = rows[1];
        const AblateRow& fine = rows[2];
        std::ostringstream s;
        s << "full=" << full.mean_residual << " coarse=" << coarse.mean_residual
          << " fine=" << fine.mean_residual << " hit_rays=" << full.hits
          << " runtime=" << seconds << "s";
        d = s.str();
        return full.hits >= 10000 && full.mean_residual <= 5e-4 &&
               coarse.mean_residual >= 10.0 * full.mean_residual &&
               fine.mean_residual >= 10.0 * full.mean_residual && seconds <= 120.0;
    });

    // ---- 2: full render at least 5x faster than the dense march ----
    criterion(2, "speedup over the 128-sample dense march (>= 5x, median of 5)", [](std::string& d) {
        PuppetScene scene = fixtures::two_capsule_scene();
        TemplateCloud cloud = bake_template(scene, 4000);
        Pose pose = fixtures::bent_pose();
        RenderConfig cfg;
        cfg.mode = RenderMode::Relit;
        cfg.vis = VisKind::Soft;
        cfg.camera = fixtures::bent_fixture_camera(32, 32);
        BenchRow full = bench_variant(scene, cloud, pose, cfg, Variant::Full, 5);
        BenchRow dense = bench_variant(scene, cloud, pose, cfg, Variant::DenseMarch, 5);
        double ratio = dense.median_seconds / full.median_seconds;
        std::ostringstream s;
        s << "full=" << full.median_seconds << "s dense=" << dense.median_seconds
          << "s ratio=" << ratio;
        d = s.str();
        return ratio >= 5.0;
    });

    // ---- 3: cutoff sweep, time trend and small-cutoff accuracy loss ----
    criterion(3, "cutoff sweep: time non-decreasing, 0.01 residual worse than 0.1", [](std::string& d) {
        PuppetScene scene = fixtures::bent_fixture_scene();
        TemplateCloud cloud = bake_template(scene, 8000);
        Camera cam = fixtures::bent_fixture_camera(128, 128);
        HdqConfig hdq_cfg;
        TraceConfig trace_cfg;
        auto rows = cutoff_sweep(scene, cloud, fixtures::bent_pose(), cam, hdq_cfg, trace_cfg,
                                 {0.01, 0.05, 0.1, 0.5}, 5);
        std::ostringstream s;
        bool monotone = true;
        for (size_t i = 0; i < rows.size(); ++i) {
            s << "T=" << rows[i].cutoff << " (" << rows[i].median_seconds << "s, r="
              << rows[i].mean_residual << ") ";
            if (i > 0 && rows[i].median_seconds < rows[i - 1].median_seconds) monotone = false;
        }
        d = s.str();
        return monotone && rows[0].mean_residual > rows[2].mean_residual;
    });

    // ---- 4: furnace test ----
    criterion(4, "furnace: uniform probe, diffuse 0.5 -> mean foreground 0.5 +/- 0.02", [](std::string& d) {
        PuppetScene scene = fixtures::sphere_scene(0.5, {0.5, 0.5, 0.5}, /*specular=*/false);
        TemplateCloud cloud = bake_template(scene, 12000);
        RenderConfig cfg;
        cfg.mode = RenderMode::Relit;
        cfg.vis = VisKind::None;
        cfg.probe = LightProbe::uniform(1.0);
        cfg.camera.width = 64;
        cfg.camera.height = 64;
        RenderResult res = render(scene, cloud, Pose::rest(1), cfg);
        double sum = 0;
        int count = 0;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                if (res.coverage.pixel(x, y)[0] > 0.5f) {
                    sum += res.color.pixel(x, y)[0];
                    ++count;
                }
        double mean = count ? sum / count : 0;
        std::ostringstream s;
        s << "mean=" << mean << " foreground_px=" << count;
        d = s.str();
        return count > 500 && std::abs(mean - 0.5) <= 0.02;
    });

    // ---- 5: solid-angle closure ----
    criterion(5, "probe solid angles sum to 4 pi within 1e-6 relative", [](std::string& d) {
        double sum = 0;
        for (int r = 0; r < kProbeRows; ++r)
            for (int c = 0; c < kProbeCols; ++c) sum += texel_direction(r, c).solid_angle;
        double rel = std::abs(sum - 4 * kPi) / (4 * kPi);
        std::ostringstream s;
        s << "sum=" << sum << " rel_err=" << rel;
        d = s.str();
        return rel < 1e-6;
    });

    // ---- 6: normal fidelity ----
    criterion(6, "normals: <= 2 deg mean vs field differences, <= 0.5 deg at identity", [](std::string& d) {
        PuppetScene scene = fixtures::two_capsule_scene();
        TemplateCloud cloud = bake_template(scene, 12000);
        Pose pose = fixtures::bent_pose();
        auto state = make_pose_state(scene, cloud, pose);
        HdqConfig cfg;
        FullField field{state.get(), &cfg, std::nullopt};

        Rng rng(91);
        const double h = 1e-3;
        double angle_sum = 0;
        int count = 0;
        while (count < 1000) {
            size_t i = size_t(rng.uniform() * double(state->posed.size()));
            Vec3 x = state->posed.positions[i];
            Vec3 n;
            try {
                n = surface_normal(x, *state, cfg);
            } catch (const Error&) {
                continue;
            }
            Vec3 fd;
            for (int axis = 0; axis < 3; ++axis) {
                Vec3 dx;
                dx[axis] = h;
                fd[axis] = field(x + dx) - field(x - dx);
            }
            if (length(fd) < 1e-6) continue;
            angle_sum += degrees(angle_between(n, fd));
            ++count;
        }
        double mean_posed = angle_sum / count;

        // Identity pose: analytic primitive normals are the reference.
        PuppetScene ball = fixtures::sphere_scene(0.5);
        TemplateCloud ball_cloud = bake_template(ball, 12000);
        auto ball_state = make_pose_state(ball, ball_cloud, Pose::rest(1));
        double worst_identity = 0;
        for (int i = 0; i < 100; ++i) {
            Vec3 dir = Rng(1000 + i).unit_vector();
            Vec3 x = dir * 0.5;
            Vec3 n = surface_normal(x, *ball_state, cfg);
            worst_identity = std::max(worst_identity, degrees(angle_between(n, dir)));
        }
        std::ostringstream s;
        s << "mean_posed=" << mean_posed << "deg worst_identity=" << worst_identity << "deg";
        d = s.str();
        return mean_posed <= 2.0 && worst_identity <= 0.5;
    });

    // ---- 7: soft shadows against the Monte-Carlo reference ----
    criterion(7, "DFSS within 0.15 of the area-light oracle, rank corr >= 0.9", [](std::string& d) {
        PuppetScene scene = fixtures::sphere_over_ground();
        TemplateCloud cloud = bake_template(scene, 16000);
        auto state = make_pose_state(scene, cloud, Pose::rest(1));
        HdqConfig hdq_cfg;
        TraceConfig trace_cfg;

        Vec3 start{0.55, 0, 0.025};
        const double a = 0.04;
        std::vector<double> soft, reference;
        double worst = 0;
        for (int i = 0; i < 32; ++i) {
            double elev = radians(15.0 + 60.0 * i / 31.0);
            Vec3 dir = normalize(Vec3{-std::cos(elev) * 0.55, 0, std::sin(elev) * 0.8});
            soft.push_back(soft_visibility(start, dir, a, *state, hdq_cfg, trace_cfg));
            reference.push_back(
                mc_area_visibility_oracle(start, dir, a, *state, hdq_cfg, trace_cfg, 2048));
            worst = std::max(worst, std::abs(soft.back() - reference.back()));
        }
        double rho = spearman(soft, reference);

        // Exactness at the endpoints: open sky and a blocked ray.
        double open = soft_visibility({0, 0, 1.1}, {0, 0, 1}, a, *state, hdq_cfg, trace_cfg);
        double blocked = soft_visibility({0, 0, 0.02}, {0, 0, 1}, a, *state, hdq_cfg, trace_cfg);
        std::ostringstream s;
        s << "worst_abs_err=" << worst << " spearman=" << rho << " open=" << open
          << " blocked=" << blocked;
        d = s.str();
        return worst <= 0.15 && rho >= 0.9 && open == 1.0 && blocked == 0.0;
    });

    // ---- 8: HDQ field against the brute-force oracle ----
    criterion(8, "HDQ vs brute force: near-surface error bound, sign agreement >= 99%", [](std::string& d) {
        PuppetScene scene = fixtures::two_capsule_scene();
        TemplateCloud cloud = bake_template(scene, 12000);
        Pose pose = fixtures::bent_pose();
        auto state = make_pose_state(scene, cloud, pose);
        HdqConfig cfg;
        DistanceOracle oracle(scene, pose, 60000);

        Rng rng(92);
        int near_count = 0, near_ok = 0, sign_total = 0, sign_agree = 0;
        int produced = 0;
        while (near_count < 10000 && produced < 200000) {
            ++produced;
            size_t i = size_t(rng.uniform() * double(state->posed.size()));
            Vec3 x = state->posed.positions[i] + rng.unit_vector() * rng.uniform(0.0, 0.08);
            double truth = oracle(x);
            DistanceSample sample = query(x, *state, cfg);
            if (std::abs(truth) <= 0.05) {
                ++near_count;
                if (std::abs(sample.d_tilde - truth) <= std::max(0.005, 0.15 * std::abs(truth)))
                    ++near_ok;
            }
            if (std::abs(truth) >= 0.005) {
                ++sign_total;
                if (std::signbit(sample.d_tilde) == std::signbit(truth)) ++sign_agree;
            }
        }
        double sign_rate = sign_total ? double(sign_agree) / sign_total : 0;
        std::ostringstream s;
        s << "near_points=" << near_count << " in_bound=" << near_ok
          << " sign_agreement=" << sign_rate;
        d = s.str();
        return near_count >= 10000 && near_ok == near_count && sign_rate >= 0.99;
    });

    // ---- 9: BRDF properties and shade linearity ----
    criterion(9, "BRDF reciprocity/non-negativity, shade linear in the probe (1e-9)", [](std::string& d) {
        Material mat;
        mat.albedo = {0.45, 0.55, 0.65};
        mat.roughness = 0.35;
        Rng rng(93);
        Vec3 n{0, 0, 1};
        double worst_recip = 0;
        bool non_negative = true;
        for (int i = 0; i < 1000; ++i) {
            Vec3 wi = rng.unit_vector();
            Vec3 wo = rng.unit_vector();
            wi.z = std::abs(wi.z) + 0.01;
            wo.z = std::abs(wo.z) + 0.01;
            wi = normalize(wi);
            wo = normalize(wo);
            Vec3 f = brdf_eval(mat, n, wi, wo);
            Vec3 g = brdf_eval(mat, n, wo, wi);
            for (int c = 0; c < 3; ++c) {
                worst_recip = std::max(worst_recip, std::abs(f[c] - g[c]));
                if (f[c] < 0) non_negative = false;
            }
        }

        ShadingPoint point{{0, 0, 0}, n, normalize(Vec3{0.2, 0.1, 1}), mat};
        LightProbe p1, p2;
        for (int t = 0; t < kProbeTexels; ++t) {
            p1.at(t) = {rng.uniform(), rng.uniform(), rng.uniform()};
            p2.at(t) = {rng.uniform(), rng.uniform(), rng.uniform()};
        }
        auto vis1 = [](const Vec3&, double) { return 1.0; };
        Vec3 a = shade(point, p1, vis1);
        Vec3 b = shade(point, p2, vis1);
        Vec3 scaled = shade(point, p1 * 2.5, vis1);
        Vec3 summed = shade(point, p1 + p2, vis1);
        double worst_linear = 0;
        for (int c = 0; c < 3; ++c) {
            worst_linear = std::max(worst_linear, std::abs(scaled[c] - 2.5 * a[c]));
            worst_linear = std::max(worst_linear, std::abs(summed[c] - (a[c] + b[c])));
        }
        std::ostringstream s;
        s << "worst_reciprocity=" << worst_recip << " worst_linearity=" << worst_linear;
        d = s.str();
        return worst_recip <= 1e-9 && non_negative && worst_linear <= 1e-9;
    });

    // ---- 10: probe fitting round trip ----
    criterion(10, "probe fit: <= 10% on covered texels, residual optimality", [](std::string& d) {
        PuppetScene scene = fixtures::two_capsule_scene();
        scene.primitives[0].material.roughness = 0.25;
        scene.primitives[1].material.roughness = 0.25;
        TemplateCloud cloud = bake_template(scene, 4000);

        LightProbe truth;
        for (int r = 0; r < kProbeRows; ++r)
            for (int c = 0; c < kProbeCols; ++c) {
                double z = std::cos(kPi * (r + 0.5) / kProbeRows);
                double base = 0.25 + 0.75 * std::max(0.0, z);
                double blob1 = 1.5 * std::exp(-(std::pow(r - 3.0, 2) + std::pow(c - 8.0, 2)) / 8.0);
                double blob2 = 1.0 * std::exp(-(std::pow(r - 5.0, 2) + std::pow(c - 24.0, 2)) / 12.0);
                truth.at(r, c) = {base + blob1, base + 0.8 * blob1 + 0.4 * blob2, base + blob2};
            }

        std::vector<Pose> poses;
        for (int i = 0; i < 4; ++i) {
            Pose p = Pose::rest(2);
            p.local_rotations[1] = Quat::from_axis_angle({0, 0, 1}, 0.3 * i);
            poses.push_back(p);
        }
        RenderConfig cfg;
        cfg.vis = VisKind::None;
        cfg.probe = truth;
        cfg.camera.width = 64;
        cfg.camera.height = 64;
        std::vector<Image> images;
        std::vector<ObservationView> views;
        for (const Pose& p : poses)
            for (int side = 0; side < 2; ++side) {
                cfg.camera.position = side == 0 ? Vec3{0.4, 0.3, 1.4} : Vec3{0.5, 1.2, 0.6};
                cfg.camera.look_at = {0.4, 0.1, 0};
                cfg.camera.up = {0, 1, 0};
                images.push_back(render(scene, cloud, p, cfg).color);
                views.push_back({p, cfg.camera, nullptr});
            }
        for (size_t i = 0; i < views.size(); ++i) views[i].image = &images[i];

        CollectOptions opts;
        opts.vis = VisKind::None;
        opts.max_px_per_frame = 300;
        auto observations = collect_observations(scene, cloud, views, opts);
        // Small ridge: enough to pin unobserved texels at zero without
        // disturbing the observed subspace.
        FitReport report = fit_probe(observations, 1e-8);

        double total = 0;
        for (double c : report.coverage) total += c;
        int covered = 0;
        double worst_rel = 0;
        for (int t = 0; t < kProbeTexels; ++t) {
            if (report.coverage[t] < 0.01 * total) continue;
            ++covered;
            for (int ch = 0; ch < 3; ++ch)
                worst_rel = std::max(worst_rel,
                                     std::abs(report.probe.at(t)[ch] - truth.at(t)[ch]) /
                                         std::max(1e-9, truth.at(t)[ch]));
        }
        Vec3 fit_res = reconstruction_error(report.probe, observations);
        Vec3 true_res = reconstruction_error(truth, observations);
        bool optimal = fit_res.x <= true_res.x + 1e-6 && fit_res.y <= true_res.y + 1e-6 &&
                       fit_res.z <= true_res.z + 1e-6;
        std::ostringstream s;
        s << "observations=" << observations.size() << " covered_texels=" << covered
          << " worst_rel_err=" << worst_rel << " fit_rms=" << fit_res.x
          << " true_rms=" << true_res.x;
        d = s.str();
        return covered > 0 && worst_rel <= 0.10 && optimal;
    });

    // ---- 11: determinism ----
    criterion(11, "renders bitwise identical across thread counts and reruns", [](std::string& d) {
        PuppetScene scene = fixtures::bent_fixture_scene();
        TemplateCloud cloud = bake_template(scene, 4000);
        Pose pose = fixtures::bent_pose();
        RenderConfig cfg;
        cfg.mode = RenderMode::Relit;
        cfg.vis = VisKind::Soft;
        cfg.camera = fixtures::bent_fixture_camera(64, 64);

        cfg.threads = 1;
        RenderResult single = render(scene, cloud, pose, cfg);
        cfg.threads = 4;
        RenderResult multi = render(scene, cloud, pose, cfg);
        RenderResult again = render(scene, cloud, pose, cfg);
        bool same_threads =
            std::memcmp(single.color.data.data(), multi.color.data.data(),
                        single.color.data.size() * 4) == 0 &&
            std::memcmp(single.coverage.data.data(), multi.coverage.data.data(),
                        single.coverage.data.size() * 4) == 0;
        bool same_rerun = std::memcmp(multi.color.data.data(), again.color.data.data(),
                                      multi.color.data.size() * 4) == 0;
        std::ostringstream s;
        s << "threads_match=" << (same_threads ? "yes" : "no")
          << " rerun_match=" << (same_rerun ? "yes" : "no");
        d = s.str();
        return same_threads && same_rerun;
    });

    std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(failures))
              << std::endl;
    return failures == 0 ? 0 : 1;
}
