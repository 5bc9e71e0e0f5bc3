#pragma once

// The discrete rendering equation over the 512 probe texels, the
// per-pixel transfer row it induces, and near-surface material sampling.

#include "hdq/brdf.hpp"
#include "hdq/probe.hpp"
#include "hdq/trace.hpp"

namespace hdq {

struct ShadingPoint {
    Vec3 position;   // x_s
    Vec3 normal;     // n_s, unit
    Vec3 w_out;      // toward the camera, unit
    Material material;

    void validate() const {
        if (dot(normal, w_out) <= 0.0)
            throw InvariantError("shading point is back-facing; cull upstream");
    }
};

// L_o = sum_i L(w_i) R(w_i, w_o) V(w_i) max(n.w_i, 0) dOmega_i.
// Texels below the horizon contribute nothing and never invoke the
// visibility function.
template <class Vis>
Vec3 shade(const ShadingPoint& point, const LightProbe& probe, Vis&& visibility) {
    Vec3 radiance{0, 0, 0};
    for (int i = 0; i < kProbeTexels; ++i) {
        const TexelGeometry& tex = LightProbe::texel(i);
        double cos_in = dot(point.normal, tex.direction);
        if (cos_in <= 0.0) continue;
        double v = visibility(tex.direction, tex.solid_angle);
        if (v <= 0.0) continue;
        Vec3 f = brdf_eval(point.material, point.normal, tex.direction, point.w_out);
        radiance += mul(probe.at(i), f) * (v * cos_in * tex.solid_angle);
    }
    return radiance;
}

// Per-texel RGB weights w_i = R V cos dOmega, so that dot(row, probe)
// reproduces shade() exactly. This is the linear system the probe fit uses.
template <class Vis>
std::vector<Vec3> transfer_row(const ShadingPoint& point, Vis&& visibility) {
    std::vector<Vec3> row(kProbeTexels, Vec3{0, 0, 0});
    for (int i = 0; i < kProbeTexels; ++i) {
        const TexelGeometry& tex = LightProbe::texel(i);
        double cos_in = dot(point.normal, tex.direction);
        if (cos_in <= 0.0) continue;
        double v = visibility(tex.direction, tex.solid_angle);
        if (v <= 0.0) continue;
        Vec3 f = brdf_eval(point.material, point.normal, tex.direction, point.w_out);
        row[i] = f * (v * cos_in * tex.solid_angle);
    }
    return row;
}

inline Vec3 apply_transfer_row(const std::vector<Vec3>& row, const LightProbe& probe) {
    Vec3 out{0, 0, 0};
    for (int i = 0; i < kProbeTexels; ++i) out += mul(row[i], probe.at(i));
    return out;
}

// Uniform-BRDF shading used by the visibility render mode: the BRDF is a
// constant 0.8 across all radiance directions.
template <class Vis>
Vec3 shade_uniform_brdf(const Vec3& normal, const LightProbe& probe, Vis&& visibility,
                        double brdf_value = 0.8) {
    Vec3 radiance{0, 0, 0};
    for (int i = 0; i < kProbeTexels; ++i) {
        const TexelGeometry& tex = LightProbe::texel(i);
        double cos_in = dot(normal, tex.direction);
        if (cos_in <= 0.0) continue;
        double v = visibility(tex.direction, tex.solid_angle);
        if (v <= 0.0) continue;
        radiance += probe.at(i) * (brdf_value * v * cos_in * tex.solid_angle);
    }
    return radiance;
}

// Materials sampled at a few depths around the intersection and averaged
// uniformly: depths t_s + 2 (j / N_s) t_step - t_step for j = 1..N_s.
inline Material sample_material(const PoseState& state, const HdqConfig& cfg, const Ray& ray,
                                const Hit& hit, int n_samples = 3, double t_step = 0.005) {
    if (!hit.hit) throw NotOnSurfaceError("sample_material requires a hit");
    if (n_samples < 1) throw ConfigError("sample_material: n_samples must be >= 1");

    Vec3 albedo{0, 0, 0};
    double roughness = 0;
    bool specular = true;
    int used = 0;
    for (int j = 1; j <= n_samples; ++j) {
        double t = hit.t + 2.0 * (double(j) / n_samples) * t_step - t_step;
        DistanceSample sample = query(ray.at(t), state, cfg);
        Vec3 canonical = sample.fine_evaluated ? *sample.canonical
                                               : hit.canonical.value_or(ray.at(t));
        const Material& m = material_at(*state.scene, canonical);
        albedo += m.albedo;
        roughness += m.roughness;
        if (j == 1) specular = m.specular;
        ++used;
    }
    Material out;
    out.albedo = albedo * (1.0 / used);
    out.roughness = clamp(roughness / used, 1e-6, 1.0);
    out.specular = specular;
    return out;
}

}  // namespace hdq
