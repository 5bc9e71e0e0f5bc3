#pragma once

// Sphere tracing over the hierarchically queried distance field: surface
// intersection with sign-change interpolation, distance-field soft
// visibility, hard visibility and the Monte-Carlo area-light oracle.

#include <functional>
#include <optional>

#include "hdq/hdq.hpp"

namespace hdq {

struct Ray {
    Vec3 origin;
    Vec3 direction;   // unit
    double near = 0;
    double far = kInf;

    Vec3 at(double t) const { return origin + direction * t; }

    void validate() const {
        if (std::abs(length(direction) - 1.0) > 1e-9)
            throw ConfigError("ray direction must be unit length");
        if (near < 0 || near >= far) throw ConfigError("ray requires 0 <= near < far");
    }
};

struct TraceConfig {
    int n_steps = 16;             // surface intersection iterations
    double offset = 0.02;         // added to the queried distance each step
    int n_steps_vis = 4;          // visibility iterations
    double vis_near = 0.01;
    double vis_far = 10.0;
    double hit_residual = 5e-3;   // |field| at t_s below which a trace counts as a hit
    double aabb_pad = 0.15;

    void validate() const {
        if (n_steps < 1 || n_steps_vis < 1) throw ConfigError("step counts must be >= 1");
        if (offset < 0) throw ConfigError("trace offset must be non-negative");
    }
};

struct Hit {
    bool hit = false;
    double t = 0;                  // far when missed
    Vec3 position;
    double residual = kInf;        // |field| at the returned position
    std::optional<Vec3> canonical; // x'' at the hit (full-HDQ traces only)
    std::optional<Vec3> normal;    // world normal (full-HDQ traces only)
    int steps = 0;
    double t_candidate = 0;        // tracer's raw depth before the miss reset
};

// Slab test against the posed cloud's padded bounding box.
inline std::optional<std::pair<double, double>> ray_aabb(const Ray& ray, const Aabb& bounds,
                                                         double pad = 0.15) {
    Aabb box = bounds;
    box.inflate(pad);
    double t0 = 0.0, t1 = kInf;
    for (int axis = 0; axis < 3; ++axis) {
        double o = ray.origin[axis], d = ray.direction[axis];
        if (std::abs(d) < 1e-300) {
            if (o < box.lo[axis] || o > box.hi[axis]) return std::nullopt;
            continue;
        }
        double inv = 1.0 / d;
        double ta = (box.lo[axis] - o) * inv;
        double tb = (box.hi[axis] - o) * inv;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::nullopt;
    }
    return std::make_pair(t0, t1);
}

inline std::optional<std::pair<double, double>> ray_aabb(const Ray& ray, const PosedCloud& cloud,
                                                         double pad = 0.15) {
    if (cloud.size() == 0) throw ConfigError("ray_aabb: empty cloud");
    return ray_aabb(ray, cloud.bounds, pad);
}

// Surface-intersection sphere tracing. Tracks the previous/current
// distance pair and the all-time closest sample while marching by the
// queried distance plus the grazing offset; the first sign change brackets
// the crossing and is resolved by linear interpolation. The remaining step
// budget keeps interpolating inside the shrinking bracket (false position
// with Illinois damping), which is how the fixed-iteration loop converges:
// letting the plain march continue past the crossing instead would strand
// the ray near the d = -offset level set inside the surface and the
// closest-sample update would drag t_s there, leaving a residual on the
// order of the offset.
template <class Field>
Hit sphere_trace(const Vec3& origin, const Vec3& direction, double near, double far,
                 const Field& field, int n_steps, double offset, double hit_residual) {
    double t = near;
    double t_s = far;
    double d0 = kInf, d1 = kInf;
    double d_closest = kInf;
    double d_t = kInf;
    bool crossed = false;
    double t_lo = 0, t_hi = 0, f_lo = 0, f_hi = 0;  // crossing bracket
    int steps = 0;

    for (int i = 0; i < n_steps; ++i) {
        ++steps;
        d0 = d1;
        d1 = field(origin + direction * t);
        double abs1 = std::abs(d1);

        if (abs1 < d_closest) {
            d_closest = abs1;
            t_s = t;
        }
        // d_t is the step that produced the current sample, undefined on
        // the first iteration.
        if (i > 0 && std::signbit(d0) != std::signbit(d1)) {
            t_lo = t - d_t;
            t_hi = t;
            f_lo = d0;
            f_hi = d1;
            crossed = true;
            break;
        }
        d_t = d1 + offset;
        t += d_t;
        t = std::min(t, far);
        t = std::max(t, near);
    }

    Hit hit;
    double residual;
    if (crossed) {
        // First interpolation, then refine with whatever budget is left.
        double best_t = 0, best_f = kInf;
        int lo_streak = 0, hi_streak = 0;
        do {
            double t_mid = (t_lo * f_hi - t_hi * f_lo) / (f_hi - f_lo);
            double f_mid = field(origin + direction * t_mid);
            ++steps;
            if (std::abs(f_mid) < best_f) {
                best_f = std::abs(f_mid);
                best_t = t_mid;
            }
            if (f_mid == 0.0) break;
            if (std::signbit(f_mid) == std::signbit(f_lo)) {
                t_lo = t_mid;
                f_lo = f_mid;
                if (++lo_streak >= 2) f_hi *= 0.5;  // Illinois damping
                hi_streak = 0;
            } else {
                t_hi = t_mid;
                f_hi = f_mid;
                if (++hi_streak >= 2) f_lo *= 0.5;
                lo_streak = 0;
            }
        } while (steps < n_steps && std::abs(t_hi - t_lo) > 1e-13);
        t_s = best_t;
        residual = best_f;
    } else {
        residual = d_closest;
    }

    hit.steps = steps;
    hit.t_candidate = t_s;
    if (residual <= hit_residual) {
        hit.hit = true;
        hit.t = t_s;
        hit.position = origin + direction * t_s;
        hit.residual = residual;
    } else {
        hit.hit = false;
        hit.t = far;
        hit.position = origin + direction * far;
        hit.residual = std::abs(field(hit.position));
    }
    return hit;
}

// Distance-field variants the tracer can run on.
struct FullField {
    const PoseState* state;
    const HdqConfig* cfg;
    std::optional<double> cutoff_override;
    double operator()(const Vec3& x) const { return query(x, *state, *cfg, cutoff_override).d_tilde; }
};

struct CoarseOnlyField {
    const PoseState* state;
    const HdqConfig* cfg;
    double operator()(const Vec3& x) const {
        return coarse_distance(gs_knn(x, state->index, cfg->k, cfg->geodesic_cutoff));
    }
};

// Canonical S evaluated at unwarped world points.
struct FineOnlyField {
    const PoseState* state;
    double operator()(const Vec3& x) const { return canonical_sdf(*state->scene, x); }
};

// Full-pipeline surface intersection; fills the canonical point and world
// normal on hits.
inline Hit intersect(const Ray& ray, const PoseState& state, const HdqConfig& hdq_cfg,
                     const TraceConfig& trace_cfg) {
    ray.validate();
    FullField field{&state, &hdq_cfg, std::nullopt};
    Hit hit = sphere_trace(ray.origin, ray.direction, ray.near, ray.far, field,
                           trace_cfg.n_steps, trace_cfg.offset, trace_cfg.hit_residual);
    if (hit.hit) {
        DistanceSample sample = query(hit.position, state, hdq_cfg);
        if (sample.fine_evaluated) hit.canonical = sample.canonical;
        try {
            hit.normal = surface_normal(hit.position, state, hdq_cfg);
        } catch (const Error&) {
            hit.hit = false;
            hit.t = ray.far;
            hit.position = ray.at(ray.far);
        }
    }
    return hit;
}

// Dense-march baseline: uniform sampling along the ray plus bisection on
// the first sign change. Stands in for 128-sample volume rendering.
inline constexpr int kDenseMarchSamples = 128;

template <class Field>
Hit dense_march(const Vec3& origin, const Vec3& direction, double near, double far,
                const Field& field, double hit_residual, int n_samples = kDenseMarchSamples) {
    double dt = (far - near) / n_samples;
    double prev_t = near;
    double prev_d = field(origin + direction * near);
    double closest_t = near, closest_d = std::abs(prev_d);
    Hit hit;
    hit.steps = n_samples;
    for (int i = 1; i <= n_samples; ++i) {
        double t = near + dt * i;
        double d = field(origin + direction * t);
        if (std::abs(d) < closest_d) {
            closest_d = std::abs(d);
            closest_t = t;
        }
        if (std::signbit(prev_d) != std::signbit(d)) {
            double lo = prev_t, hi = t, d_lo = prev_d;
            for (int it = 0; it < 24; ++it) {
                double mid = 0.5 * (lo + hi);
                double dm = field(origin + direction * mid);
                if (std::signbit(dm) == std::signbit(d_lo)) {
                    lo = mid;
                    d_lo = dm;
                } else {
                    hi = mid;
                }
            }
            double t_s = 0.5 * (lo + hi);
            double residual = std::abs(field(origin + direction * t_s));
            hit.t_candidate = t_s;
            hit.hit = residual <= hit_residual;
            hit.t = hit.hit ? t_s : far;
            hit.position = origin + direction * hit.t;
            hit.residual = hit.hit ? residual : std::abs(field(origin + direction * far));
            return hit;
        }
        prev_t = t;
        prev_d = d;
    }
    hit.hit = false;
    hit.t = far;
    hit.t_candidate = closest_t;
    hit.position = origin + direction * far;
    hit.residual = std::abs(field(hit.position));
    return hit;
}

namespace detail {

// Shared stepping loop for the visibility queries (near/far clamped,
// signed step d1 + offset).
template <class Field, class PerStep>
void visibility_march(const Vec3& origin, const Vec3& dir, const Field& field, int n_steps,
                      double near, double far, double offset, PerStep&& per_step) {
    double t = near;
    double d1 = kInf;
    for (int i = 0; i < n_steps; ++i) {
        d1 = field(origin + dir * t);
        if (!per_step(d1, t)) return;
        double d_t = d1 + offset;
        t += d_t;
        t = std::min(t, far);
        t = std::max(t, near);
    }
}

inline void require_on_surface(const Vec3& x_s, const PoseState& state, const HdqConfig& cfg) {
    DistanceSample sample = query(x_s, state, cfg);
    if (std::abs(sample.d_tilde) > kSurfaceResidualMax)
        throw NotOnSurfaceError("visibility query does not start on the surface");
}

}  // namespace detail

// Soft penumbra coefficient: minimum over the march of
// max(d, 0) / (2 t sqrt(a / pi)), starting from 1.
inline double soft_visibility(const Vec3& x_s, const Vec3& w_in, double solid_angle,
                              const PoseState& state, const HdqConfig& hdq_cfg,
                              const TraceConfig& trace_cfg, bool verify_surface = true) {
    if (solid_angle <= 0) throw ConfigError("soft_visibility: solid angle must be positive");
    // Callers shading a confirmed hit may skip the on-surface re-check.
    if (verify_surface) detail::require_on_surface(x_s, state, hdq_cfg);

    FullField field{&state, &hdq_cfg, hdq_cfg.vis_cutoff};
    double cap_radius = std::sqrt(solid_angle / kPi);
    double p = 1.0;
    detail::visibility_march(x_s, w_in, field, trace_cfg.n_steps_vis, trace_cfg.vis_near,
                             trace_cfg.vis_far, trace_cfg.offset, [&](double d1, double t) {
                                 p = std::min(p, std::max(d1, 0.0) / (2.0 * t * cap_radius));
                                 return p > 0.0;  // cannot recover once fully shadowed
                             });
    return p;
}

// Binary visibility: 1 iff the occlusion march sees no sign change.
inline double hard_visibility(const Vec3& x_s, const Vec3& w_in, const PoseState& state,
                              const HdqConfig& hdq_cfg, const TraceConfig& trace_cfg,
                              bool verify_surface = true) {
    if (verify_surface) detail::require_on_surface(x_s, state, hdq_cfg);
    FullField field{&state, &hdq_cfg, hdq_cfg.vis_cutoff};
    double prev = kInf;
    bool occluded = false;
    detail::visibility_march(x_s, w_in, field, trace_cfg.n_steps, trace_cfg.vis_near,
                             trace_cfg.vis_far, trace_cfg.offset, [&](double d1, double) {
                                 if (prev != kInf && std::signbit(prev) != std::signbit(d1))
                                     occluded = true;
                                 if (d1 < 0.0) occluded = true;
                                 prev = d1;
                                 return !occluded;
                             });
    return occluded ? 0.0 : 1.0;
}

// Monte-Carlo area-light reference: fraction of directions in the
// spherical cap of the given solid angle that escape unoccluded.
inline double mc_area_visibility_oracle(const Vec3& x_s, const Vec3& w_in, double solid_angle,
                                        const PoseState& state, const HdqConfig& hdq_cfg,
                                        const TraceConfig& trace_cfg, int n_samples = 1024,
                                        uint64_t seed = 12345) {
    if (solid_angle <= 0) throw ConfigError("visibility oracle: solid angle must be positive");
    detail::require_on_surface(x_s, state, hdq_cfg);

    Vec3 axis = normalize(w_in);
    Vec3 t, b;
    make_basis(axis, t, b);
    double cos_cap = 1.0 - solid_angle / (2.0 * kPi);

    FullField field{&state, &hdq_cfg, hdq_cfg.vis_cutoff};
    Rng rng(seed);
    int open = 0;
    for (int i = 0; i < n_samples; ++i) {
        double cz = rng.uniform(cos_cap, 1.0);
        double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
        double phi = rng.uniform(0.0, 2.0 * kPi);
        Vec3 dir = axis * cz + t * (sz * std::cos(phi)) + b * (sz * std::sin(phi));

        bool occluded = false;
        double prev = kInf;
        double tt = trace_cfg.vis_near;
        for (int s = 0; s < 32 && !occluded; ++s) {
            double d = field(x_s + dir * tt);
            if ((prev != kInf && std::signbit(prev) != std::signbit(d)) || d < 0.0) occluded = true;
            prev = d;
            tt += std::abs(d) + trace_cfg.offset;
            if (tt >= trace_cfg.vis_far) break;
            tt = std::max(tt, trace_cfg.vis_near);
        }
        if (!occluded) ++open;
    }
    return double(open) / n_samples;
}

}  // namespace hdq
