#pragma once

// Microfacet BRDF: Lambertian diffuse plus GGX specular with Smith
// shadowing and a Schlick Fresnel term pinned at F0 = 0.04.

#include "hdq/core.hpp"

namespace hdq {

struct Material {
    Vec3 albedo{0.5, 0.5, 0.5};  // in [0,1] per channel
    double roughness = 0.5;      // gamma in (0,1]
    bool specular = true;        // test/furnace hook: false makes the BRDF pure Lambertian

    static constexpr double kFresnelF0 = 0.04;

    void validate() const {
        for (int c = 0; c < 3; ++c)
            if (albedo[c] < 0.0 || albedo[c] > 1.0) throw ConfigError("albedo out of [0,1]");
        if (roughness <= 0.0 || roughness > 1.0) throw ConfigError("roughness out of (0,1]");
    }
};

namespace brdf {

// GGX width from the perceptual roughness, alpha_g = gamma^2.
inline double ggx_alpha(double roughness) { return roughness * roughness; }

inline double ggx_distribution(double n_dot_h, double alpha) {
    double a2 = alpha * alpha;
    double d = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
    return a2 / (kPi * d * d);
}

inline double smith_g1(double n_dot_v, double alpha) {
    double a2 = alpha * alpha;
    double t2 = (1.0 - n_dot_v * n_dot_v) / (n_dot_v * n_dot_v);
    return 2.0 / (1.0 + std::sqrt(1.0 + a2 * t2));
}

inline double schlick_fresnel(double cos_theta, double f0) {
    double m = clamp(1.0 - cos_theta, 0.0, 1.0);
    double m2 = m * m;
    return f0 + (1.0 - f0) * m2 * m2 * m;
}

}  // namespace brdf

// f = albedo/pi + F D G / (4 (n.wi)(n.wo)), zero below the horizon.
inline Vec3 brdf_eval(const Material& mat, const Vec3& n, const Vec3& w_in, const Vec3& w_out) {
    double n_i = dot(n, w_in);
    double n_o = dot(n, w_out);
    if (n_i <= 0.0 || n_o <= 0.0) return {0, 0, 0};

    Vec3 f = mat.albedo * (1.0 / kPi);
    if (!mat.specular) return f;

    Vec3 h = normalize(w_in + w_out);
    double n_h = dot(n, h);
    if (n_h > 0.0) {
        double alpha = brdf::ggx_alpha(mat.roughness);
        double d = brdf::ggx_distribution(n_h, alpha);
        double g = brdf::smith_g1(n_i, alpha) * brdf::smith_g1(n_o, alpha);
        double fr = brdf::schlick_fresnel(dot(h, w_in), Material::kFresnelF0);
        double spec = fr * d * g / (4.0 * n_i * n_o);
        f += Vec3{spec, spec, spec};
    }
    return f;
}

}  // namespace hdq
