#pragma once

// Environment-light estimation: the discrete rendering equation is linear
// in the probe, so known geometry and materials turn every rendered pixel
// into one row of a least-squares system over the 512 texels.

#include <Eigen/Dense>

#include "hdq/render.hpp"

namespace hdq {

struct Observation {
    std::vector<Vec3> row;  // per-texel RGB transfer weights, kProbeTexels entries
    Vec3 target;            // observed radiance L_gt
    int frame = 0;
    int px = 0, py = 0;
};

struct ObservationView {
    Pose pose;
    Camera camera;
    const Image* image = nullptr;  // rendered radiance for this view
};

struct CollectOptions {
    VisKind vis = VisKind::None;
    int max_px_per_frame = 1000;
    HdqConfig hdq;
    TraceConfig trace;
    int material_samples = 3;
    double material_step = 0.005;
};

// One observation per sampled hit pixel; the transfer row is rebuilt from
// the same trace/shade internals the renderer uses.
inline std::vector<Observation> collect_observations(const PuppetScene& scene,
                                                     const TemplateCloud& cloud,
                                                     const std::vector<ObservationView>& views,
                                                     const CollectOptions& opts = {}) {
    std::vector<Observation> observations;
    for (size_t vi = 0; vi < views.size(); ++vi) {
        const ObservationView& view = views[vi];
        if (!view.image) throw ConfigError("observation view has no image");
        if (view.image->width != view.camera.width || view.image->height != view.camera.height)
            throw ConfigError("observation image does not match the camera resolution");
        auto state = make_pose_state(scene, cloud, view.pose);

        // Pass 1: find shadeable pixels.
        std::vector<std::pair<int, int>> hits;
        for (int py = 0; py < view.camera.height; ++py)
            for (int px = 0; px < view.camera.width; ++px) {
                Ray ray = view.camera.pixel_ray(px, py);
                auto span = ray_aabb(ray, state->posed.bounds, opts.trace.aabb_pad);
                if (!span) continue;
                ray.near = span->first;
                ray.far = span->second;
                Hit hit = intersect(ray, *state, opts.hdq, opts.trace);
                if (hit.hit && hit.normal && dot(*hit.normal, -ray.direction) > 0.0)
                    hits.emplace_back(px, py);
            }

        // Pass 2: evenly strided subset up to the per-frame budget.
        size_t take = std::min<size_t>(hits.size(), size_t(opts.max_px_per_frame));
        if (take == 0) continue;
        double stride = double(hits.size()) / double(take);
        for (size_t s = 0; s < take; ++s) {
            auto [px, py] = hits[size_t(s * stride)];
            Ray ray = view.camera.pixel_ray(px, py);
            auto span = ray_aabb(ray, state->posed.bounds, opts.trace.aabb_pad);
            ray.near = span->first;
            ray.far = span->second;
            Hit hit = intersect(ray, *state, opts.hdq, opts.trace);
            if (!hit.hit || !hit.normal) continue;

            Material mat = sample_material(*state, opts.hdq, ray, hit, opts.material_samples,
                                           opts.material_step);
            ShadingPoint point{hit.position, *hit.normal, -ray.direction, mat};
            auto visibility = [&](const Vec3& dir, double solid_angle) -> double {
                switch (opts.vis) {
                    case VisKind::Soft:
                        return soft_visibility(hit.position, dir, solid_angle, *state, opts.hdq,
                                               opts.trace, false);
                    case VisKind::Hard:
                        return hard_visibility(hit.position, dir, *state, opts.hdq, opts.trace,
                                               false);
                    case VisKind::Local:
                        return clamp(dot(*hit.normal, dir), 0.0, 1.0);
                    case VisKind::None:
                        return 1.0;
                }
                return 1.0;
            };

            Observation obs;
            obs.row = transfer_row(point, visibility);
            const float* p = view.image->pixel(px, py);
            obs.target = {p[0], p[1], p[2]};
            obs.frame = int(vi);
            obs.px = px;
            obs.py = py;
            observations.push_back(std::move(obs));
        }
    }
    if (observations.empty()) throw ConfigError("collect_observations found no hit pixels");
    return observations;
}

struct FitReport {
    LightProbe probe;
    Vec3 residual_rms;               // per channel, after the non-negativity clamp
    double condition_estimate = 0;   // of the ridge-regularized normal matrix
    std::vector<double> coverage;    // per-texel total transfer weight
    size_t observation_count = 0;
    double lambda = 0;
};

namespace detail {

inline double power_iteration_cond(const Eigen::MatrixXd& a, const Eigen::LDLT<Eigen::MatrixXd>& solver) {
    const int n = int(a.rows());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
    double lambda_max = 0;
    for (int it = 0; it < 60; ++it) {
        v = (a * v).normalized();
    }
    lambda_max = v.dot(a * v);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n).normalized();
    for (int it = 0; it < 60; ++it) {
        w = solver.solve(w).normalized();
    }
    double lambda_min = w.dot(a * w);
    return lambda_min > 0 ? lambda_max / lambda_min : kInf;
}

}  // namespace detail

// Ridge least squares per channel over the 512 texels via the normal
// equations; negative texels are clamped to zero afterward.
inline FitReport fit_probe(const std::vector<Observation>& observations, double lambda = 1e-4) {
    if (observations.empty()) throw ConfigError("fit_probe: no observations");
    if (lambda < 0) throw ConfigError("fit_probe: ridge must be non-negative");

    const int n = kProbeTexels;
    FitReport report;
    report.lambda = lambda;
    report.observation_count = observations.size();
    report.coverage.assign(n, 0.0);

    for (const Observation& obs : observations) {
        if (int(obs.row.size()) != n) throw ConfigError("fit_probe: malformed transfer row");
        for (int t = 0; t < n; ++t)
            report.coverage[t] += obs.row[t].x + obs.row[t].y + obs.row[t].z;
    }

    double condition = 0;
    for (int channel = 0; channel < 3; ++channel) {
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd row(n);
        for (const Observation& obs : observations) {
            for (int t = 0; t < n; ++t) row[t] = obs.row[t][channel];
            gram.selfadjointView<Eigen::Lower>().rankUpdate(row);
            rhs += row * obs.target[channel];
        }
        gram = gram.selfadjointView<Eigen::Lower>();
        if (lambda == 0.0) {
            // Zero columns (unobserved texels) make the system rank-deficient.
            for (int t = 0; t < n; ++t)
                if (gram(t, t) <= 0.0)
                    throw InvariantError("fit_probe: rank-deficient system with lambda = 0");
        }
        gram.diagonal().array() += lambda;
        Eigen::LDLT<Eigen::MatrixXd> solver(gram);
        if (solver.info() != Eigen::Success)
            throw InvariantError("fit_probe: normal-equation factorization failed");
        Eigen::VectorXd solution = solver.solve(rhs);
        for (int t = 0; t < n; ++t) report.probe.at(t)[channel] = std::max(0.0, solution[t]);
        if (channel == 0) condition = detail::power_iteration_cond(gram, solver);
    }
    report.condition_estimate = condition;

    // Residual of the clamped probe on the fitting set.
    Vec3 sq{0, 0, 0};
    for (const Observation& obs : observations) {
        Vec3 predicted = apply_transfer_row(obs.row, report.probe);
        Vec3 err = predicted - obs.target;
        sq += mul(err, err);
    }
    double inv = 1.0 / double(observations.size());
    report.residual_rms = {std::sqrt(sq.x * inv), std::sqrt(sq.y * inv), std::sqrt(sq.z * inv)};
    return report;
}

inline Vec3 reconstruction_error(const LightProbe& probe, const std::vector<Observation>& observations) {
    if (observations.empty()) throw ConfigError("reconstruction_error: no observations");
    Vec3 sq{0, 0, 0};
    for (const Observation& obs : observations) {
        Vec3 err = apply_transfer_row(obs.row, probe) - obs.target;
        sq += mul(err, err);
    }
    double inv = 1.0 / double(observations.size());
    return {std::sqrt(sq.x * inv), std::sqrt(sq.y * inv), std::sqrt(sq.z * inv)};
}

}  // namespace hdq
