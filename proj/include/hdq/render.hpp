#pragma once

// Render orchestration: modes (relit / albedo / normal / visibility-uniform
// / ambient), tracer variants (full / coarse-only / fine-only / dense-march),
// pluggable visibility, and a tile-parallel deterministic pixel loop.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "hdq/camera.hpp"
#include "hdq/image_io.hpp"
#include "hdq/shade.hpp"

namespace hdq {

enum class RenderMode { Relit, Albedo, Normal, VisibilityUniform, Ambient };
enum class VisKind { Soft, Hard, None, Local };
enum class Variant { Full, CoarseOnly, FineOnly, DenseMarch };

inline RenderMode parse_render_mode(const std::string& s) {
    if (s == "relit") return RenderMode::Relit;
    if (s == "albedo") return RenderMode::Albedo;
    if (s == "normal") return RenderMode::Normal;
    if (s == "visibility-uniform") return RenderMode::VisibilityUniform;
    if (s == "ambient") return RenderMode::Ambient;
    throw ConfigError("unknown render mode: " + s);
}

inline VisKind parse_vis_kind(const std::string& s) {
    if (s == "soft") return VisKind::Soft;
    if (s == "hard") return VisKind::Hard;
    if (s == "none") return VisKind::None;
    if (s == "local") return VisKind::Local;
    throw ConfigError("unknown visibility kind: " + s);
}

inline Variant parse_variant(const std::string& s) {
    if (s == "full") return Variant::Full;
    if (s == "coarse-only") return Variant::CoarseOnly;
    if (s == "fine-only") return Variant::FineOnly;
    if (s == "dense-march") return Variant::DenseMarch;
    throw ConfigError("unknown variant: " + s);
}

struct RenderConfig {
    Camera camera;
    RenderMode mode = RenderMode::Relit;
    VisKind vis = VisKind::Soft;
    Variant variant = Variant::Full;
    LightProbe probe = LightProbe::uniform(1.0);
    HdqConfig hdq;
    TraceConfig trace;
    int material_samples = 3;
    double material_step = 0.005;
    int threads = 0;  // 0: HDQ_THREADS env var, then hardware concurrency

    void validate() const {
        camera.validate();
        hdq.validate();
        trace.validate();
        probe.validate();
        if (material_samples < 1) throw ConfigError("material_samples must be >= 1");
    }
};

struct RenderStats {
    uint64_t hits = 0;
    uint64_t background = 0;
    uint64_t failures = 0;  // hit but unshadeable (back-facing, degenerate normal)
    uint64_t fine_evaluations = 0;
    double seconds = 0;
};

struct RenderResult {
    Image color;     // RGB, linear
    Image coverage;  // single channel, 1 on foreground
    RenderStats stats;
};

namespace detail {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HDQ_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

// Upper-hemisphere white dome used by the ambient mode.
inline const LightProbe& dome_probe() {
    static const LightProbe dome = [] {
        LightProbe p;
        for (int r = 0; r < kProbeRows; ++r)
            for (int c = 0; c < kProbeCols; ++c)
                p.at(r, c) = r < kProbeRows / 2 ? Vec3{1, 1, 1} : Vec3{0, 0, 0};
        return p;
    }();
    return dome;
}

// Central-difference normal for tracer variants whose intersection point
// is not on the full field's surface.
template <class Field>
std::optional<Vec3> fd_normal(const Field& field, const Vec3& x, double h = 1e-3) {
    Vec3 g;
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 dx;
        dx[axis] = h;
        g[axis] = field(x + dx) - field(x - dx);
    }
    double len = length(g);
    if (len < 1e-12) return std::nullopt;
    return g / len;
}

// 128-sample occlusion march used by the dense-march variant's visibility.
inline double dense_binary_visibility(const Vec3& x_s, const Vec3& dir, const PoseState& state,
                                      const HdqConfig& hdq_cfg, const TraceConfig& trace_cfg) {
    Ray light{x_s, dir, 0.0, kInf};
    auto span = ray_aabb(light, state.posed.bounds, trace_cfg.aabb_pad);
    if (!span) return 1.0;
    double near = std::max(trace_cfg.vis_near, span->first);
    double far = std::min(trace_cfg.vis_far, span->second);
    if (near >= far) return 1.0;
    FullField field{&state, &hdq_cfg, hdq_cfg.vis_cutoff};
    double prev = kInf;
    double dt = (far - near) / kDenseMarchSamples;
    for (int i = 0; i <= kDenseMarchSamples; ++i) {
        double d = field(x_s + dir * (near + dt * i));
        if (d < 0.0 || (prev != kInf && std::signbit(prev) != std::signbit(d))) return 0.0;
        prev = d;
    }
    return 1.0;
}

}  // namespace detail

inline RenderResult render_state(const PoseState& state, const RenderConfig& cfg) {
    cfg.validate();
    const Camera& cam = cfg.camera;
    RenderResult result;
    result.color = Image(cam.width, cam.height, 3);
    result.coverage = Image(cam.width, cam.height, 1);

    std::atomic<uint64_t> hits{0}, background{0}, failures{0};
    uint64_t fine_before = state.fine_evaluations.load(std::memory_order_relaxed);
    auto t_start = std::chrono::steady_clock::now();

    auto shade_pixel = [&](int px, int py) {
        Ray ray = cam.pixel_ray(px, py);
        auto span = ray_aabb(ray, state.posed.bounds, cfg.trace.aabb_pad);
        float* out = result.color.pixel(px, py);
        float* cov = result.coverage.pixel(px, py);
        out[0] = out[1] = out[2] = 0.f;
        cov[0] = 0.f;
        if (!span) {
            background.fetch_add(1, std::memory_order_relaxed);
            return;
        }
        ray.near = span->first;
        ray.far = span->second;

        Hit hit;
        std::optional<Vec3> normal;
        switch (cfg.variant) {
            case Variant::Full: {
                hit = intersect(ray, state, cfg.hdq, cfg.trace);
                normal = hit.normal;
                break;
            }
            case Variant::DenseMarch: {
                FullField field{&state, &cfg.hdq, std::nullopt};
                hit = dense_march(ray.origin, ray.direction, ray.near, ray.far, field,
                                  cfg.trace.hit_residual);
                if (hit.hit) {
                    try {
                        normal = surface_normal(hit.position, state, cfg.hdq);
                        DistanceSample s = query(hit.position, state, cfg.hdq);
                        if (s.fine_evaluated) hit.canonical = s.canonical;
                    } catch (const Error&) {
                        normal.reset();
                    }
                }
                break;
            }
            case Variant::CoarseOnly: {
                CoarseOnlyField field{&state, &cfg.hdq};
                hit = sphere_trace(ray.origin, ray.direction, ray.near, ray.far, field,
                                   cfg.trace.n_steps, cfg.trace.offset, cfg.trace.hit_residual);
                if (hit.hit) normal = detail::fd_normal(field, hit.position);
                break;
            }
            case Variant::FineOnly: {
                FineOnlyField field{&state};
                hit = sphere_trace(ray.origin, ray.direction, ray.near, ray.far, field,
                                   cfg.trace.n_steps, cfg.trace.offset, cfg.trace.hit_residual);
                if (hit.hit) normal = detail::fd_normal(field, hit.position);
                break;
            }
        }

        if (!hit.hit) {
            background.fetch_add(1, std::memory_order_relaxed);
            return;
        }
        if (!normal || dot(*normal, -ray.direction) <= 0.0) {
            failures.fetch_add(1, std::memory_order_relaxed);
            return;
        }
        hits.fetch_add(1, std::memory_order_relaxed);
        cov[0] = 1.f;

        // Per-texel visibility. The on-surface precondition was already
        // established by the hit residual, so skip the per-call re-check.
        auto visibility = [&](const Vec3& dir, double solid_angle) -> double {
            if (cfg.variant == Variant::DenseMarch &&
                (cfg.vis == VisKind::Soft || cfg.vis == VisKind::Hard))
                return detail::dense_binary_visibility(hit.position, dir, state, cfg.hdq, cfg.trace);
            switch (cfg.vis) {
                case VisKind::Soft:
                    return soft_visibility(hit.position, dir, solid_angle, state, cfg.hdq,
                                           cfg.trace, /*verify_surface=*/false);
                case VisKind::Hard:
                    return hard_visibility(hit.position, dir, state, cfg.hdq, cfg.trace,
                                           /*verify_surface=*/false);
                case VisKind::Local:
                    return clamp(dot(*normal, dir), 0.0, 1.0);
                case VisKind::None:
                    return 1.0;
            }
            return 1.0;
        };

        Vec3 color{0, 0, 0};
        switch (cfg.mode) {
            case RenderMode::Normal:
                color = (*normal + Vec3{1, 1, 1}) * 0.5;
                break;
            case RenderMode::Albedo: {
                Material mat = (cfg.variant == Variant::Full || cfg.variant == Variant::DenseMarch)
                                   ? sample_material(state, cfg.hdq, ray, hit, cfg.material_samples,
                                                     cfg.material_step)
                                   : material_at(*state.scene, hit.position);
                color = mat.albedo;
                break;
            }
            case RenderMode::Relit: {
                Material mat = (cfg.variant == Variant::Full || cfg.variant == Variant::DenseMarch)
                                   ? sample_material(state, cfg.hdq, ray, hit, cfg.material_samples,
                                                     cfg.material_step)
                                   : material_at(*state.scene, hit.position);
                ShadingPoint point{hit.position, *normal, -ray.direction, mat};
                color = shade(point, cfg.probe, visibility);
                break;
            }
            case RenderMode::VisibilityUniform:
                color = shade_uniform_brdf(*normal, cfg.probe, visibility, 0.8);
                break;
            case RenderMode::Ambient: {
                Vec3 ao = shade_uniform_brdf(*normal, detail::dome_probe(), visibility, 1.0 / kPi);
                color = ao;
                break;
            }
        }
        out[0] = float(color.x);
        out[1] = float(color.y);
        out[2] = float(color.z);
    };

    const int tile = 32;
    int tiles_x = (cam.width + tile - 1) / tile;
    int tiles_y = (cam.height + tile - 1) / tile;
    int tile_count = tiles_x * tiles_y;
    std::atomic<int> next_tile{0};
    int n_threads = std::min(detail::resolve_threads(cfg.threads), tile_count);

    auto worker = [&] {
        for (;;) {
            int t = next_tile.fetch_add(1, std::memory_order_relaxed);
            if (t >= tile_count) return;
            int x0 = (t % tiles_x) * tile, y0 = (t / tiles_x) * tile;
            for (int y = y0; y < std::min(y0 + tile, cam.height); ++y)
                for (int x = x0; x < std::min(x0 + tile, cam.width); ++x) shade_pixel(x, y);
        }
    };

    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    result.stats.hits = hits.load();
    result.stats.background = background.load();
    result.stats.failures = failures.load();
    result.stats.fine_evaluations =
        state.fine_evaluations.load(std::memory_order_relaxed) - fine_before;
    result.stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

// Frame entry point: rebuilds the posed cloud and spatial index for the
// pose, then renders.
inline RenderResult render(const PuppetScene& scene, const TemplateCloud& cloud, const Pose& pose,
                           const RenderConfig& cfg) {
    auto t_start = std::chrono::steady_clock::now();
    auto state = make_pose_state(scene, cloud, pose);
    RenderResult result = render_state(*state, cfg);
    result.stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace hdq
