#pragma once

// Accuracy-ablation and timing harness: per-variant intersection residuals
// against the reference field, frame-time benchmarks, and the cutoff sweep.

#include <algorithm>
#include <sstream>

#include "hdq/render.hpp"

namespace hdq {

struct AblateRow {
    std::string variant;
    double mean_residual = 0;  // |reference field| at each traced intersection
    double seconds = 0;        // wall time of the full-frame trace pass
    int rays = 0;
    int hits = 0;
};

namespace detail {

// Residuals are always measured with the default full-HDQ field, so the
// variants are compared on an equal footing; each variant contributes the
// depth its own tracer converged to (interpolated crossing or closest
// approach), over the ray set the full tracer hits.
template <class Tracer>
AblateRow ablate_variant(const std::string& name, const Camera& cam,
                         const std::vector<std::pair<int, int>>& pixels, const PoseState& state,
                         const HdqConfig& hdq_cfg, const TraceConfig& trace_cfg, Tracer&& tracer) {
    FullField reference{&state, &hdq_cfg, std::nullopt};
    AblateRow row;
    row.variant = name;
    auto t0 = std::chrono::steady_clock::now();
    double sum = 0;
    for (auto [px, py] : pixels) {
        Ray ray = cam.pixel_ray(px, py);
        auto span = ray_aabb(ray, state.posed.bounds, trace_cfg.aabb_pad);
        if (!span) continue;
        ray.near = span->first;
        ray.far = span->second;
        Hit hit = tracer(ray);
        sum += std::abs(reference(ray.at(hit.t_candidate)));
        ++row.rays;
        if (hit.hit) ++row.hits;
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.mean_residual = row.rays > 0 ? sum / row.rays : kInf;
    return row;
}

}  // namespace detail

// Pixels the full tracer hits; the shared evaluation set for the ablation.
inline std::vector<std::pair<int, int>> full_hit_pixels(const Camera& cam, const PoseState& state,
                                                        const HdqConfig& hdq_cfg,
                                                        const TraceConfig& trace_cfg) {
    std::vector<std::pair<int, int>> pixels;
    for (int py = 0; py < cam.height; ++py)
        for (int px = 0; px < cam.width; ++px) {
            Ray ray = cam.pixel_ray(px, py);
            auto span = ray_aabb(ray, state.posed.bounds, trace_cfg.aabb_pad);
            if (!span) continue;
            ray.near = span->first;
            ray.far = span->second;
            FullField field{&state, &hdq_cfg, std::nullopt};
            Hit hit = sphere_trace(ray.origin, ray.direction, ray.near, ray.far, field,
                                   trace_cfg.n_steps, trace_cfg.offset, trace_cfg.hit_residual);
            if (hit.hit) pixels.emplace_back(px, py);
        }
    return pixels;
}

inline std::vector<AblateRow> ablate(const PuppetScene& scene, const TemplateCloud& cloud,
                                     const Pose& pose, const Camera& cam, const HdqConfig& hdq_cfg,
                                     const TraceConfig& trace_cfg, bool include_dense_march = true) {
    auto state = make_pose_state(scene, cloud, pose);
    auto pixels = full_hit_pixels(cam, *state, hdq_cfg, trace_cfg);

    std::vector<AblateRow> rows;
    rows.push_back(detail::ablate_variant("full", cam, pixels, *state, hdq_cfg, trace_cfg,
                                          [&](const Ray& ray) {
                                              FullField field{state.get(), &hdq_cfg, std::nullopt};
                                              return sphere_trace(ray.origin, ray.direction, ray.near,
                                                                  ray.far, field, trace_cfg.n_steps,
                                                                  trace_cfg.offset,
                                                                  trace_cfg.hit_residual);
                                          }));
    rows.push_back(detail::ablate_variant("coarse-only", cam, pixels, *state, hdq_cfg, trace_cfg,
                                          [&](const Ray& ray) {
                                              CoarseOnlyField field{state.get(), &hdq_cfg};
                                              return sphere_trace(ray.origin, ray.direction, ray.near,
                                                                  ray.far, field, trace_cfg.n_steps,
                                                                  trace_cfg.offset,
                                                                  trace_cfg.hit_residual);
                                          }));
    rows.push_back(detail::ablate_variant("fine-only", cam, pixels, *state, hdq_cfg, trace_cfg,
                                          [&](const Ray& ray) {
                                              FineOnlyField field{state.get()};
                                              return sphere_trace(ray.origin, ray.direction, ray.near,
                                                                  ray.far, field, trace_cfg.n_steps,
                                                                  trace_cfg.offset,
                                                                  trace_cfg.hit_residual);
                                          }));
    if (include_dense_march)
        rows.push_back(detail::ablate_variant("dense-march", cam, pixels, *state, hdq_cfg, trace_cfg,
                                              [&](const Ray& ray) {
                                                  FullField field{state.get(), &hdq_cfg, std::nullopt};
                                                  return dense_march(ray.origin, ray.direction,
                                                                     ray.near, ray.far, field,
                                                                     trace_cfg.hit_residual);
                                              }));
    return rows;
}

inline std::string ablate_csv(const std::vector<AblateRow>& rows) {
    std::ostringstream out;
    out << "variant,residual,seconds,rays,hits\n";
    for (const AblateRow& r : rows)
        out << r.variant << "," << r.mean_residual << "," << r.seconds << "," << r.rays << ","
            << r.hits << "\n";
    return out.str();
}

struct BenchRow {
    std::string variant;
    double median_seconds = 0;
    double min_seconds = 0;
    int repetitions = 0;
};

// Median frame time over repetitions; each frame rebuilds the pose state,
// matching the per-pose usage pattern.
inline BenchRow bench_variant(const PuppetScene& scene, const TemplateCloud& cloud,
                              const Pose& pose, RenderConfig cfg, Variant variant, int repetitions) {
    cfg.variant = variant;
    BenchRow row;
    switch (variant) {
        case Variant::Full: row.variant = "full"; break;
        case Variant::CoarseOnly: row.variant = "coarse-only"; break;
        case Variant::FineOnly: row.variant = "fine-only"; break;
        case Variant::DenseMarch: row.variant = "dense-march"; break;
    }
    row.repetitions = repetitions;
    std::vector<double> times;
    for (int i = 0; i < repetitions; ++i) times.push_back(render(scene, cloud, pose, cfg).stats.seconds);
    std::sort(times.begin(), times.end());
    row.min_seconds = times.front();
    row.median_seconds = times[times.size() / 2];
    return row;
}

struct CutoffRow {
    double cutoff = 0;
    double median_seconds = 0;
    double mean_residual = 0;
};

// Trace-only cutoff sweep: the field under test overrides the cutoff, the
// residual is judged by the reference field at the default cutoff.
inline std::vector<CutoffRow> cutoff_sweep(const PuppetScene& scene, const TemplateCloud& cloud,
                                           const Pose& pose, const Camera& cam,
                                           const HdqConfig& hdq_cfg, const TraceConfig& trace_cfg,
                                           const std::vector<double>& cutoffs, int repetitions) {
    auto state = make_pose_state(scene, cloud, pose);
    FullField reference{state.get(), &hdq_cfg, std::nullopt};
    std::vector<CutoffRow> rows;
    for (double cutoff : cutoffs) {
        CutoffRow row;
        row.cutoff = cutoff;
        std::vector<double> times;
        for (int rep = 0; rep < repetitions; ++rep) {
            auto t0 = std::chrono::steady_clock::now();
            double sum = 0;
            int rays = 0;
            for (int py = 0; py < cam.height; ++py)
                for (int px = 0; px < cam.width; ++px) {
                    Ray ray = cam.pixel_ray(px, py);
                    auto span = ray_aabb(ray, state->posed.bounds, trace_cfg.aabb_pad);
                    if (!span) continue;
                    ray.near = span->first;
                    ray.far = span->second;
                    FullField field{state.get(), &hdq_cfg, cutoff};
                    Hit hit = sphere_trace(ray.origin, ray.direction, ray.near, ray.far, field,
                                           trace_cfg.n_steps, trace_cfg.offset,
                                           trace_cfg.hit_residual);
                    if (hit.hit) {
                        sum += std::abs(reference(ray.at(hit.t_candidate)));
                        ++rays;
                    }
                }
            times.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            if (rep == 0) row.mean_residual = rays > 0 ? sum / rays : kInf;
        }
        std::sort(times.begin(), times.end());
        row.median_seconds = times[times.size() / 2];
        rows.push_back(row);
    }
    return rows;
}

}  // namespace hdq
