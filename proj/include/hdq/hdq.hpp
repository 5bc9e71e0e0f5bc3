#pragma once

// The hierarchical distance query: coarse KNN distance everywhere, lazy
// fine canonical evaluation under a cutoff, and the smooth blend of the
// two. Also hosts the world-space surface normal and the brute-force
// distance oracle used to validate the field.

#include <atomic>
#include <memory>
#include <optional>

#include "hdq/knn.hpp"

namespace hdq {

struct HdqConfig {
    double cutoff = 0.1;          // fine query activates when d_coarse <= cutoff
    double blend_scale = 0.1;     // T_d inside the blend formula
    double vis_cutoff = 0.025;    // cutoff override used by visibility tracing
    int k = 10;
    double blending_radius = 0.075;
    double geodesic_cutoff = 0.1;

    void validate() const {
        if (cutoff <= 0 || blend_scale <= 0 || vis_cutoff <= 0 || blending_radius <= 0 ||
            geodesic_cutoff <= 0 || k < 1)
            throw ConfigError("hdq config fields must be positive");
        if (vis_cutoff > cutoff) throw ConfigError("visibility cutoff exceeds main cutoff");
    }
};

// Immutable per-pose bundle: posed cloud, spatial index and transforms.
// Queries are pure; the fine-evaluation tally is a relaxed counter.
struct PoseState {
    const PuppetScene* scene = nullptr;
    Pose pose;
    BoneTransforms transforms;
    PosedCloud posed;
    SpatialIndex index;
    mutable std::atomic<uint64_t> fine_evaluations{0};

    PoseState() = default;
    PoseState(const PoseState&) = delete;
    PoseState& operator=(const PoseState&) = delete;
};

inline std::unique_ptr<PoseState> make_pose_state(const PuppetScene& scene,
                                                  const TemplateCloud& cloud, const Pose& pose) {
    auto state = std::make_unique<PoseState>();
    state->scene = &scene;
    state->pose = pose;
    state->transforms = pose_transforms(scene.skeleton, pose);
    state->posed = pose_template(cloud, state->transforms);
    state->index = build_index(state->posed);
    return state;
}

struct DistanceSample {
    double d_coarse = 0;
    std::optional<double> d_fine;
    double d_tilde = 0;
    std::optional<Vec3> canonical;   // x'' when the fine query ran
    std::optional<Mat3> rotation;    // rotation component of T_world
    bool fine_evaluated = false;
    bool degenerate_warp = false;
};

inline DistanceSample query(const Vec3& x, const PoseState& state, const HdqConfig& cfg,
                            std::optional<double> cutoff_override = std::nullopt) {
    KnnResult knn = gs_knn(x, state.index, cfg.k, cfg.geodesic_cutoff);
    DistanceSample sample;
    sample.d_coarse = coarse_distance(knn);
    double cutoff = cutoff_override.value_or(cfg.cutoff);
    if (sample.d_coarse > cutoff) {
        sample.d_tilde = sample.d_coarse;
        return sample;
    }

    WeightVector weights = knn_blend_weights(knn, cfg.blending_radius);
    InverseWarp warp;
    try {
        warp = inverse_warp(x, weights, state.transforms);
    } catch (const DegenerateWarpError&) {
        sample.d_tilde = sample.d_coarse;
        sample.degenerate_warp = true;
        return sample;
    }

    Vec3 x2 = warp.canonical + displacement(state.scene->displacement_field, state.pose, warp.canonical);
    double d_fine = canonical_sdf(*state.scene, x2);
    state.fine_evaluations.fetch_add(1, std::memory_order_relaxed);

    double f = d_fine / cfg.blend_scale;
    sample.d_fine = d_fine;
    sample.d_tilde = d_fine * (1.0 - f) + sample.d_coarse * f;
    sample.canonical = x2;
    sample.rotation = warp.rotation;
    sample.fine_evaluated = true;
    return sample;
}

inline constexpr double kSurfaceResidualMax = 5e-3;

// World normal at a surface point: canonical gradient rotated back through
// the inverse-warp rotation. Singular gradients get one jittered retry.
inline Vec3 surface_normal(const Vec3& x_s, const PoseState& state, const HdqConfig& cfg) {
    DistanceSample sample = query(x_s, state, cfg);
    if (!sample.fine_evaluated || std::abs(sample.d_tilde) >= kSurfaceResidualMax)
        throw NotOnSurfaceError("surface_normal: point is not on the surface");
    GradientSample g = canonical_gradient(*state.scene, *sample.canonical);
    if (g.singular) {
        const Vec3 jitter{5.7735e-6, 5.7735e-6, 5.7735e-6};  // 1e-5 total
        sample = query(x_s + jitter, state, cfg);
        if (!sample.fine_evaluated)
            throw NotOnSurfaceError("surface_normal: jittered point left the fine region");
        g = canonical_gradient(*state.scene, *sample.canonical);
        if (g.singular) throw InvariantError("surface_normal: gradient singular after jitter");
    }
    return rotate_normal_to_world(g.gradient, *sample.rotation);
}

// Brute-force signed distance against a dense forward-skinned sampling of
// the deformed surface. Exactness is the 1-NN scan; the kd-tree only
// accelerates it and is itself tested for scan equality.
class DistanceOracle {
  public:
    DistanceOracle(const PuppetScene& scene, const Pose& pose, int samples_per_primitive) {
        if (samples_per_primitive * int(scene.primitives.size()) < 100000)
            throw ConfigError("distance oracle needs at least 1e5 samples");
        cloud_ = bake_template(scene, samples_per_primitive);
        posed_ = pose_template(cloud_, pose_transforms(scene.skeleton, pose));
        tree_ = KdTree(posed_.positions);
    }

    double operator()(const Vec3& x) const {
        Neighbor n = tree_.nearest(x);
        double dist = std::sqrt(n.dist_sq);
        return dot(x - posed_.positions[n.index], posed_.normals[n.index]) >= 0.0 ? dist : -dist;
    }

    // Mean spacing between samples; the oracle's resolution floor.
    double sampling_gap() const {
        double area_proxy = 0;
        Vec3 extent = posed_.bounds.hi - posed_.bounds.lo;
        area_proxy = 2.0 * (extent.x * extent.y + extent.y * extent.z + extent.z * extent.x);
        return std::sqrt(area_proxy / double(posed_.size()));
    }

    const PosedCloud& posed() const { return posed_; }

  private:
    TemplateCloud cloud_;
    PosedCloud posed_;
    KdTree tree_;
};

}  // namespace hdq
