#pragma once

// Canonical-space geometry: analytic SDF primitives bound to bones, a
// pose-dependent displacement field, per-primitive materials, and the
// template point cloud that drives the coarse KNN distance.

#include <optional>
#include <vector>

#include "hdq/brdf.hpp"
#include "hdq/core.hpp"
#include "hdq/rig.hpp"
#include "hdq/sdf.hpp"

namespace hdq {

struct CanonicalPrimitive {
    PrimitiveKind kind = PrimitiveKind::Sphere;
    Vec3 center;               // sphere / rounded box
    double radius = 0.1;       // sphere / capsule / rounding radius
    Vec3 a, b;                 // capsule endpoints
    Vec3 half_extents;         // rounded box core half extents
    int bone = 0;              // owning bone
    Material material;
    std::string name;

    void validate(size_t bone_count) const {
        if (radius <= 0.0) throw ConfigError("primitive radius must be positive");
        if (kind == PrimitiveKind::Capsule && length_squared(b - a) == 0.0)
            throw ConfigError("capsule endpoints must be distinct");
        if (bone < 0 || size_t(bone) >= bone_count)
            throw ConfigError("primitive references an unknown bone");
        material.validate();
    }

    double distance(const Vec3& p) const {
        switch (kind) {
            case PrimitiveKind::Sphere: return sdf::sphere(p, center, radius);
            case PrimitiveKind::Capsule: return sdf::capsule(p, a, b, radius);
            case PrimitiveKind::RoundedBox: return sdf::rounded_box(p, center, half_extents, radius);
        }
        return kInf;
    }

    GradientSample gradient(const Vec3& p) const {
        switch (kind) {
            case PrimitiveKind::Sphere: return sdf::sphere_gradient(p, center);
            case PrimitiveKind::Capsule: return sdf::capsule_gradient(p, a, b);
            case PrimitiveKind::RoundedBox: return sdf::rounded_box_gradient(p, center, half_extents);
        }
        return {{0, 0, 1}, true};
    }
};

enum class CombineRule { HardMin, SmoothMin };

enum class DisplacementKind { Zero, AnalyticBulge };

// Pose-dependent canonical displacement. The bulge fades in with pose
// magnitude so it vanishes exactly at the identity pose, and its norm is
// bounded by the amplitude by construction.
struct DisplacementField {
    DisplacementKind kind = DisplacementKind::Zero;
    double amplitude = 0.0;    // scene units, must stay below 0.05
    Vec3 center;               // bulge center, canonical space
    double falloff = 0.1;      // gaussian falloff radius

    void validate() const {
        if (amplitude < 0.0 || amplitude >= 0.05)
            throw ConfigError("displacement amplitude must be in [0, 0.05)");
        if (kind == DisplacementKind::AnalyticBulge && falloff <= 0.0)
            throw ConfigError("bulge falloff must be positive");
    }
};

inline double pose_magnitude(const Pose& pose) {
    double sum = 0.0;
    for (const Quat& q : pose.local_rotations) sum += 2.0 * std::acos(clamp(std::abs(q.w), 0.0, 1.0));
    sum += length(pose.root_translation);
    return sum;
}

inline Vec3 displacement(const DisplacementField& field, const Pose& pose, const Vec3& x_prime) {
    if (field.kind == DisplacementKind::Zero || field.amplitude == 0.0) return {0, 0, 0};
    double ramp = clamp(pose_magnitude(pose) / kPi, 0.0, 1.0);
    if (ramp == 0.0) return {0, 0, 0};
    Vec3 rel = x_prime - field.center;
    double r2 = length_squared(rel);
    if (r2 < 1e-18) return {0, 0, 0};
    double bump = std::exp(-r2 / (2.0 * field.falloff * field.falloff));
    return rel * (field.amplitude * ramp * bump / std::sqrt(r2));
}

struct PuppetScene {
    Skeleton skeleton;
    std::vector<CanonicalPrimitive> primitives;
    CombineRule combine = CombineRule::HardMin;
    double smooth_k = 0.02;    // smooth-min blend parameter
    DisplacementField displacement_field;

    void validate() const {
        if (primitives.empty()) throw ConfigError("scene has no primitives");
        for (const auto& prim : primitives) prim.validate(skeleton.bone_count());
        if (combine == CombineRule::SmoothMin && smooth_k <= 0.0)
            throw ConfigError("smooth-min parameter must be positive");
        displacement_field.validate();
    }
};

// Exact signed distance for hard-min scenes; smooth-min underestimates
// min(.) by at most smooth_k/4 and is flagged approximate.
inline double canonical_sdf(const PuppetScene& scene, const Vec3& x) {
    if (scene.combine == CombineRule::HardMin) {
        double d = kInf;
        for (const auto& prim : scene.primitives) d = std::min(d, prim.distance(x));
        return d;
    }
    double d = scene.primitives[0].distance(x);
    for (size_t i = 1; i < scene.primitives.size(); ++i)
        d = sdf::smooth_min(d, scene.primitives[i].distance(x), scene.smooth_k);
    return d;
}

inline GradientSample canonical_gradient(const PuppetScene& scene, const Vec3& x) {
    if (scene.combine == CombineRule::HardMin) {
        double best = kInf, second = kInf;
        size_t arg = 0;
        for (size_t i = 0; i < scene.primitives.size(); ++i) {
            double d = scene.primitives[i].distance(x);
            if (d < best) {
                second = best;
                best = d;
                arg = i;
            } else {
                second = std::min(second, d);
            }
        }
        GradientSample g = scene.primitives[arg].gradient(x);
        // A tie between primitives puts x on the union's medial surface.
        if (second - best < 1e-9) g.singular = true;
        return g;
    }
    // Smooth-min field: central differences, normalized.
    const double h = 1e-4;
    Vec3 g;
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 dx;
        dx[axis] = h;
        g[axis] = (canonical_sdf(scene, x + dx) - canonical_sdf(scene, x - dx)) / (2.0 * h);
    }
    double len = length(g);
    if (len < 1e-6) return {{0, 0, 1}, true};
    return {g / len, false};
}

// Material of the nearest primitive by unsigned distance; ties go to the
// lower primitive id.
inline const Material& material_at(const PuppetScene& scene, const Vec3& x) {
    double best = kInf;
    size_t arg = 0;
    for (size_t i = 0; i < scene.primitives.size(); ++i) {
        double d = std::abs(scene.primitives[i].distance(x));
        if (d < best) {
            best = d;
            arg = i;
        }
    }
    return scene.primitives[arg].material;
}

struct TemplateCloud {
    std::vector<Vec3> positions;        // canonical, on the combined zero set
    std::vector<Vec3> normals;          // canonical, unit, aligned with grad S
    std::vector<WeightVector> weights;  // per-point skinning weights
    std::vector<int> primitive_ids;
    std::vector<int> swallowed_counts;  // per primitive, points lost to the union

    size_t size() const { return positions.size(); }
};

namespace detail {

// Uniform surface samplers. Each pushes exactly `count` points that lie on
// the primitive's own zero set (before union projection).

inline void sample_sphere(const Vec3& center, double radius, int count, int spin,
                          std::vector<Vec3>& out) {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / count;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden * (i + spin);
        out.push_back(center + radius * Vec3{r * std::cos(phi), r * std::sin(phi), z});
    }
}

inline void sample_capsule(const Vec3& a, const Vec3& b, double radius, int count, int spin,
                           std::vector<Vec3>& out) {
    Vec3 axis = b - a;
    double len = length(axis);
    Vec3 n = axis / len;
    Vec3 t, s;
    make_basis(n, t, s);

    double area_cyl = 2.0 * kPi * radius * len;
    double area_caps = 4.0 * kPi * radius * radius;
    int n_cyl = int(std::round(count * area_cyl / (area_cyl + area_caps)));
    int n_caps = count - n_cyl;
    int n_top = n_caps / 2;
    int n_bot = n_caps - n_top;

    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n_cyl; ++i) {
        double h = len * (i + 0.5) / n_cyl;
        double phi = golden * (i + spin);
        out.push_back(a + n * h + radius * (t * std::cos(phi) + s * std::sin(phi)));
    }
    // Hemispherical caps, Fibonacci over z in (0, 1].
    for (int i = 0; i < n_top; ++i) {
        double z = (i + 0.5) / n_top;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden * (i + spin);
        out.push_back(b + radius * (n * z + t * (r * std::cos(phi)) + s * (r * std::sin(phi))));
    }
    for (int i = 0; i < n_bot; ++i) {
        double z = (i + 0.5) / n_bot;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden * (i + spin + 7);
        out.push_back(a - radius * (n * z - t * (r * std::cos(phi)) - s * (r * std::sin(phi))));
    }
}

inline void sample_rounded_box(const Vec3& center, const Vec3& half, double rho, int count,
                               Rng& rng, std::vector<Vec3>& out) {
    // Decompose the offset surface: 6 faces, 12 quarter-cylinder edges,
    // 8 eighth-sphere corners; sample each part by exact area.
    struct Part {
        double area;
        int kind;  // 0 face, 1 edge, 2 corner
        int axis;  // face/edge orientation
        Vec3 sign;
    };
    std::vector<Part> parts;
    double he[3] = {half.x, half.y, half.z};
    for (int axis = 0; axis < 3; ++axis) {
        int u = (axis + 1) % 3, v = (axis + 2) % 3;
        for (double s : {-1.0, 1.0}) {
            Vec3 sign{0, 0, 0};
            sign[axis] = s;
            parts.push_back({4.0 * he[u] * he[v], 0, axis, sign});
        }
        // Edges parallel to `axis`.
        for (double su : {-1.0, 1.0})
            for (double sv : {-1.0, 1.0}) {
                Vec3 sign{0, 0, 0};
                sign[u] = su;
                sign[v] = sv;
                parts.push_back({0.5 * kPi * rho * 2.0 * he[axis], 1, axis, sign});
            }
    }
    for (double sx : {-1.0, 1.0})
        for (double sy : {-1.0, 1.0})
            for (double sz : {-1.0, 1.0})
                parts.push_back({0.5 * kPi * rho * rho, 2, 0, Vec3{sx, sy, sz}});

    double total = 0;
    for (const auto& p : parts) total += p.area;
    for (const auto& part : parts) {
        int n = std::max(1, int(std::round(count * part.area / total)));
        for (int i = 0; i < n; ++i) {
            Vec3 p;
            if (part.kind == 0) {
                int axis = part.axis, u = (axis + 1) % 3, v = (axis + 2) % 3;
                p[axis] = part.sign[axis] * (he[axis] + rho);
                p[u] = (2.0 * rng.uniform() - 1.0) * he[u];
                p[v] = (2.0 * rng.uniform() - 1.0) * he[v];
            } else if (part.kind == 1) {
                int axis = part.axis, u = (axis + 1) % 3, v = (axis + 2) % 3;
                double ang = rng.uniform() * 0.5 * kPi;
                p[axis] = (2.0 * rng.uniform() - 1.0) * he[axis];
                p[u] = part.sign[u] * (he[u] + rho * std::cos(ang));
                p[v] = part.sign[v] * (he[v] + rho * std::sin(ang));
            } else {
                Vec3 d = rng.unit_vector();
                d = {std::abs(d.x), std::abs(d.y), std::abs(d.z)};
                p = Vec3{part.sign.x * (he[0] + rho * d.x), part.sign.y * (he[1] + rho * d.y),
                         part.sign.z * (he[2] + rho * d.z)};
            }
            out.push_back(center + p);
        }
    }
}

}  // namespace detail

inline constexpr double kWeightFalloffSigma = 0.1;

inline WeightVector bone_falloff_weights(const Skeleton& skeleton, const Vec3& p) {
    WeightVector w;
    w.w.resize(skeleton.bone_count());
    double sum = 0;
    for (size_t b = 0; b < skeleton.bone_count(); ++b) {
        double d = sdf::capsule(p, skeleton.bone(b).head, skeleton.bone(b).tail, 0.0);
        w.w[b] = std::exp(-d * d / (2.0 * kWeightFalloffSigma * kWeightFalloffSigma));
        sum += w.w[b];
    }
    for (double& v : w.w) v /= sum;
    return w;
}

// Sample each primitive's surface, project onto the combined zero set,
// drop points swallowed by the union or smooth blending, and attach
// bone-falloff skinning weights.
inline TemplateCloud bake_template(const PuppetScene& scene, int samples_per_primitive) {
    if (samples_per_primitive < 100)
        throw ConfigError("bake_template needs at least 100 samples per primitive");
    scene.validate();

    TemplateCloud cloud;
    cloud.swallowed_counts.assign(scene.primitives.size(), 0);
    Rng rng(0x5eedu);

    for (size_t pi = 0; pi < scene.primitives.size(); ++pi) {
        const auto& prim = scene.primitives[pi];
        std::vector<Vec3> samples;
        samples.reserve(samples_per_primitive);
        switch (prim.kind) {
            case PrimitiveKind::Sphere:
                detail::sample_sphere(prim.center, prim.radius, samples_per_primitive, int(pi), samples);
                break;
            case PrimitiveKind::Capsule:
                detail::sample_capsule(prim.a, prim.b, prim.radius, samples_per_primitive, int(pi), samples);
                break;
            case PrimitiveKind::RoundedBox:
                detail::sample_rounded_box(prim.center, prim.half_extents, prim.radius,
                                           samples_per_primitive, rng, samples);
                break;
        }

        int kept = 0;
        for (Vec3 p : samples) {
            // Inside another primitive: swallowed by the union.
            if (canonical_sdf(scene, p) < -1e-6) continue;
            // Newton projection onto the combined zero set (a no-op for
            // hard-min points away from other primitives).
            bool ok = true;
            for (int it = 0; it < 8; ++it) {
                double d = canonical_sdf(scene, p);
                if (std::abs(d) < 1e-7) break;
                GradientSample g = canonical_gradient(scene, p);
                if (g.singular) { ok = false; break; }
                p -= g.gradient * d;
            }
            if (!ok || std::abs(canonical_sdf(scene, p)) > 1e-5) continue;
            GradientSample g = canonical_gradient(scene, p);
            if (g.singular) continue;

            cloud.positions.push_back(p);
            cloud.normals.push_back(g.gradient);
            cloud.weights.push_back(bone_falloff_weights(scene.skeleton, p));
            cloud.primitive_ids.push_back(int(pi));
            ++kept;
        }
        cloud.swallowed_counts[pi] = int(samples.size()) - kept;
    }
    return cloud;
}

// Template cloud after skinning into world space for one pose.
struct PosedCloud {
    const TemplateCloud* canonical = nullptr;
    std::vector<Vec3> positions;   // world
    std::vector<Vec3> normals;     // world, unit
    std::vector<int> source;       // index into the canonical cloud
    int dropped = 0;               // points lost to degenerate blends
    Aabb bounds;

    size_t size() const { return positions.size(); }
    const Vec3& canonical_position(size_t i) const { return canonical->positions[source[i]]; }
    const WeightVector& point_weights(size_t i) const { return canonical->weights[source[i]]; }
};

inline PosedCloud pose_template(const TemplateCloud& cloud, const BoneTransforms& transforms) {
    PosedCloud posed;
    posed.canonical = &cloud;
    posed.positions.reserve(cloud.size());
    posed.normals.reserve(cloud.size());
    posed.source.reserve(cloud.size());
    for (size_t i = 0; i < cloud.size(); ++i) {
        auto [lin, trans] = detail::blend_transforms(cloud.weights[i], transforms);
        if (std::abs(determinant(lin)) < 1e-12 || condition_estimate(lin) > kDegenerateWarpCondition) {
            ++posed.dropped;
            continue;
        }
        Vec3 p = lin * cloud.positions[i] + trans;
        Vec3 n = normalize(polar_rotation(lin) * cloud.normals[i]);
        posed.positions.push_back(p);
        posed.normals.push_back(n);
        posed.source.push_back(int(i));
        posed.bounds.expand(p);
    }
    if (posed.positions.empty()) throw ConfigError("pose_template dropped every point");
    return posed;
}

}  // namespace hdq
