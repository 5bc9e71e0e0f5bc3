#pragma once

// Analytic signed-distance primitives (sphere, capsule, rounded box),
// their gradients, and hard/smooth minimum combination rules.

#include "hdq/core.hpp"

namespace hdq {

enum class PrimitiveKind { Sphere, Capsule, RoundedBox };

struct GradientSample {
    Vec3 gradient;        // unit length unless singular
    bool singular = false;
};

namespace sdf {

inline double sphere(const Vec3& p, const Vec3& center, double radius) {
    return length(p - center) - radius;
}

inline GradientSample sphere_gradient(const Vec3& p, const Vec3& center) {
    Vec3 d = p - center;
    double len = length(d);
    if (len < 1e-9) return {{0, 0, 1}, true};
    return {d / len, false};
}

inline double capsule(const Vec3& p, const Vec3& a, const Vec3& b, double radius) {
    Vec3 ab = b - a, ap = p - a;
    double h = clamp(dot(ap, ab) / dot(ab, ab), 0.0, 1.0);
    return length(ap - ab * h) - radius;
}

inline GradientSample capsule_gradient(const Vec3& p, const Vec3& a, const Vec3& b) {
    Vec3 ab = b - a, ap = p - a;
    double h = clamp(dot(ap, ab) / dot(ab, ab), 0.0, 1.0);
    Vec3 d = ap - ab * h;
    double len = length(d);
    if (len < 1e-9) return {{0, 0, 1}, true};  // on the spine
    return {d / len, false};
}

inline double rounded_box(const Vec3& p, const Vec3& center, const Vec3& half, double radius) {
    Vec3 q = Vec3{std::abs(p.x - center.x), std::abs(p.y - center.y), std::abs(p.z - center.z)} - half;
    Vec3 q_out = max(q, Vec3{0, 0, 0});
    return length(q_out) + std::min(max_component(q), 0.0) - radius;
}

inline GradientSample rounded_box_gradient(const Vec3& p, const Vec3& center, const Vec3& half) {
    Vec3 rel = p - center;
    Vec3 s{rel.x >= 0 ? 1.0 : -1.0, rel.y >= 0 ? 1.0 : -1.0, rel.z >= 0 ? 1.0 : -1.0};
    Vec3 q = Vec3{std::abs(rel.x), std::abs(rel.y), std::abs(rel.z)} - half;
    Vec3 q_out = max(q, Vec3{0, 0, 0});
    double out_len = length(q_out);
    if (out_len > 1e-9) {
        Vec3 g = q_out / out_len;
        return {{s.x * g.x, s.y * g.y, s.z * g.z}, false};
    }
    // Inside the core box: gradient points along the least-deep axis.
    int axis = 0;
    if (q.y > q[axis]) axis = 1;
    if (q.z > q[axis]) axis = 2;
    // Tie between axes means a medial-surface point.
    int ties = 0;
    for (int i = 0; i < 3; ++i)
        if (std::abs(q[i] - q[axis]) < 1e-12) ++ties;
    Vec3 g{0, 0, 0};
    g[axis] = s[axis];
    return {g, ties > 1};
}

// Polynomial smooth minimum (quadratic). Deviates from min(a, b) by at
// most k/4, only when |a - b| < k.
inline double smooth_min(double a, double b, double k) {
    double h = std::max(k - std::abs(a - b), 0.0) / k;
    return std::min(a, b) - h * h * k * 0.25;
}

}  // namespace sdf
}  // namespace hdq
