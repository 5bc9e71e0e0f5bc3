#pragma once

// Skeleton, poses, forward kinematics and the linear-blend-skinning
// forward/inverse warps, including the KNN-driven blend-weight blending.

#include <span>
#include <vector>

#include "hdq/core.hpp"

namespace hdq {

struct Bone {
    int parent = -1;           // -1 for the root; parents precede children
    Vec3 head;                 // rest-pose joint position, canonical space
    Quat rest = Quat::identity();
    Vec3 tail;                 // end of the bone segment used for weight falloff
    std::string name;
};

class Skeleton {
  public:
    Skeleton() = default;
    explicit Skeleton(std::vector<Bone> bones) : bones_(std::move(bones)) {
        validate();
        // Default a degenerate tail to the first child's head so the
        // weight-falloff segment follows the chain.
        for (size_t b = 0; b < bones_.size(); ++b) {
            if (bones_[b].tail == bones_[b].head || bones_[b].tail == Vec3{}) {
                Vec3 tail = bones_[b].head;
                for (size_t c = b + 1; c < bones_.size(); ++c)
                    if (bones_[c].parent == int(b)) { tail = bones_[c].head; break; }
                bones_[b].tail = tail;
            }
        }
        rest_world_.resize(bones_.size());
        for (size_t b = 0; b < bones_.size(); ++b) {
            Rigid local{to_matrix(bones_[b].rest),
                        bones_[b].parent < 0 ? bones_[b].head
                                             : bones_[b].head - bones_[bones_[b].parent].head};
            rest_world_[b] = bones_[b].parent < 0 ? local : rest_world_[bones_[b].parent] * local;
        }
    }

    size_t bone_count() const { return bones_.size(); }
    const std::vector<Bone>& bones() const { return bones_; }
    const Bone& bone(size_t b) const { return bones_[b]; }
    const Rigid& rest_world(size_t b) const { return rest_world_[b]; }

  private:
    void validate() const {
        if (bones_.empty()) throw ConfigError("skeleton has no bones");
        int roots = 0;
        for (size_t b = 0; b < bones_.size(); ++b) {
            const Bone& bone = bones_[b];
            if (bone.parent < 0) {
                ++roots;
            } else if (size_t(bone.parent) >= b) {
                throw ConfigError("skeleton bones are not topologically sorted");
            }
            if (std::abs(bone.rest.norm() - 1.0) > 1e-9)
                throw ConfigError("rest orientation is not a unit quaternion");
        }
        if (roots != 1) throw ConfigError("skeleton must have exactly one root");
    }

    std::vector<Bone> bones_;
    std::vector<Rigid> rest_world_;
};

struct Pose {
    std::vector<Quat> local_rotations;  // one per bone, unit
    Vec3 root_translation;
    int frame = 0;

    static Pose rest(size_t bone_count) {
        Pose p;
        p.local_rotations.assign(bone_count, Quat::identity());
        return p;
    }

    bool is_identity() const {
        if (length_squared(root_translation) != 0.0) return false;
        for (const Quat& q : local_rotations)
            if (q.x != 0 || q.y != 0 || q.z != 0 || q.w != 1) return false;
        return true;
    }
};

// World transforms G_b taking canonical-space points to posed world space.
struct BoneTransforms {
    std::vector<Rigid> world;

    size_t size() const { return world.size(); }
    const Rigid& operator[](size_t b) const { return world[b]; }
};

// Forward kinematics: G_b = A_b(pose) * A_b(rest)^-1 so the identity pose
// maps every bone to the identity transform.
inline BoneTransforms pose_transforms(const Skeleton& skeleton, const Pose& pose) {
    if (pose.local_rotations.size() != skeleton.bone_count())
        throw ConfigError("pose has " + std::to_string(pose.local_rotations.size()) +
                          " rotations for " + std::to_string(skeleton.bone_count()) + " bones");
    for (const Quat& q : pose.local_rotations)
        if (std::abs(q.norm() - 1.0) > 1e-9)
            throw ConfigError("pose rotation is not a unit quaternion");

    std::vector<Rigid> posed(skeleton.bone_count());
    BoneTransforms out;
    out.world.resize(skeleton.bone_count());
    for (size_t b = 0; b < skeleton.bone_count(); ++b) {
        const Bone& bone = skeleton.bone(b);
        Vec3 offset = bone.parent < 0 ? bone.head + pose.root_translation
                                      : bone.head - skeleton.bone(bone.parent).head;
        Rigid local{to_matrix(bone.rest) * to_matrix(pose.local_rotations[b]), offset};
        posed[b] = bone.parent < 0 ? local : posed[bone.parent] * local;
        out.world[b] = posed[b] * inverse(skeleton.rest_world(b));
    }
    return out;
}

struct WeightVector {
    std::vector<double> w;

    size_t size() const { return w.size(); }
    double operator[](size_t b) const { return w[b]; }

    void validate() const {
        double sum = 0;
        for (double v : w) {
            if (v < 0.0) throw InvariantError("blend weight is negative");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6) throw InvariantError("blend weights do not sum to 1");
    }
};

// w = sum_k softmax(-d_k / (2 R_w^2))_k * w_k over the K neighbors.
inline WeightVector blend_weights(std::span<const double> distances,
                                  std::span<const WeightVector* const> weights,
                                  double blending_radius = 0.075) {
    if (distances.empty()) throw ConfigError("blend_weights: empty neighborhood");
    if (distances.size() != weights.size())
        throw ConfigError("blend_weights: distance/weight count mismatch");

    // Shift-invariant softmax over -d_k / (2 R_w^2).
    double scale = -1.0 / (2.0 * blending_radius * blending_radius);
    double max_logit = -kInf;
    for (double d : distances) max_logit = std::max(max_logit, d * scale);

    size_t bone_count = weights[0]->size();
    WeightVector out;
    out.w.assign(bone_count, 0.0);
    double norm = 0.0;
    for (size_t k = 0; k < distances.size(); ++k) {
        double e = std::exp(distances[k] * scale - max_logit);
        norm += e;
        const WeightVector& wk = *weights[k];
        if (wk.size() != bone_count) throw ConfigError("blend_weights: inconsistent bone counts");
        for (size_t b = 0; b < bone_count; ++b) out.w[b] += e * wk[b];
    }
    for (double& v : out.w) v /= norm;
    return out;
}

struct InverseWarp {
    Vec3 canonical;   // x' = T_world * x
    Mat3 rotation;    // rotation component of T_world (nearest rotation)
    double condition; // condition estimate of the blended linear part
};

namespace detail {

// Blended affine map sum_b w_b G_b as (linear, translation).
inline std::pair<Mat3, Vec3> blend_transforms(const WeightVector& w, const BoneTransforms& transforms) {
    if (w.size() != transforms.size())
        throw ConfigError("weight vector does not match bone count");
    Mat3 lin = Mat3::zero();
    Vec3 trans;
    for (size_t b = 0; b < w.size(); ++b) {
        double wb = w[b];
        if (wb == 0.0) continue;
        const Rigid& g = transforms[b];
        for (int i = 0; i < 9; ++i) lin.m[i] += wb * g.rot.m[i];
        trans += wb * g.trans;
    }
    return {lin, trans};
}

}  // namespace detail

inline constexpr double kDegenerateWarpCondition = 1e6;

// T_world = (sum_b w_b G_b)^-1; the rotation component comes from a polar
// decomposition because the convex blend is generally not rigid.
inline InverseWarp inverse_warp(const Vec3& x, const WeightVector& w, const BoneTransforms& transforms) {
    auto [lin, trans] = detail::blend_transforms(w, transforms);
    if (std::abs(determinant(lin)) < 1e-12)
        throw DegenerateWarpError("blended skinning transform is singular", kInf);
    double cond = condition_estimate(lin);
    if (cond > kDegenerateWarpCondition)
        throw DegenerateWarpError("blended skinning transform is near-singular", cond);
    Mat3 inv = inverse(lin);
    return {inv * (x - trans), polar_rotation(inv), cond};
}

inline Vec3 forward_skin_point(const Vec3& x_canonical, const WeightVector& w,
                               const BoneTransforms& transforms) {
    auto [lin, trans] = detail::blend_transforms(w, transforms);
    return lin * x_canonical + trans;
}

// World normal from a canonical one: (R_world)^-1 * n, renormalized.
inline Vec3 rotate_normal_to_world(const Vec3& n_canonical, const Mat3& rotation_world) {
    if (length(n_canonical) < 1e-12) throw InvariantError("invalid zero-length normal");
    return normalize(transpose(rotation_world) * n_canonical);
}

}  // namespace hdq
