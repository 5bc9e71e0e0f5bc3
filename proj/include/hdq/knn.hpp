#pragma once

// Geodesically-aware signed K nearest neighbors over the posed template
// cloud, and the coarse world-space distance derived from them.

#include <array>

#include "hdq/kdtree.hpp"
#include "hdq/puppet.hpp"

namespace hdq {

inline constexpr int kMaxKnn = 32;

struct SpatialIndex {
    KdTree tree;
    const PosedCloud* cloud = nullptr;
};

inline SpatialIndex build_index(const PosedCloud& cloud) {
    if (cloud.size() == 0) throw ConfigError("cannot index an empty posed cloud");
    return {KdTree(cloud.positions), &cloud};
}

struct KnnEntry {
    int index = -1;
    double signed_distance = 0;    // sign from dot(x - v, n)
    Vec3 position;                 // world
    Vec3 normal;                   // world
    Vec3 canonical;                // canonical correspondence
    const WeightVector* weights = nullptr;
};

// Entries keep the pre-replacement Euclidean order; the geodesic rule only
// swaps payloads, so unsigned distances are ascending with respect to the
// original neighbor set.
struct KnnResult {
    int k = 0;
    bool clamped = false;          // cloud had fewer than K points
    std::array<KnnEntry, kMaxKnn> entries;

    const KnnEntry& operator[](int i) const { return entries[i]; }
};

inline KnnResult gs_knn(const Vec3& x, const SpatialIndex& index, int k = 10,
                        double geodesic_cutoff = 0.1) {
    if (k < 1 || k > kMaxKnn) throw ConfigError("gs_knn: K out of range");
    const PosedCloud& cloud = *index.cloud;

    thread_local std::vector<Neighbor> found;
    index.tree.knn(x, k, found);

    KnnResult result;
    result.k = int(found.size());
    result.clamped = result.k < k;
    for (int i = 0; i < result.k; ++i) {
        int idx = found[i].index;
        KnnEntry& e = result.entries[i];
        e.index = idx;
        e.position = cloud.positions[idx];
        e.normal = cloud.normals[idx];
        e.canonical = cloud.canonical_position(idx);
        e.weights = &cloud.point_weights(idx);
        double dist = std::sqrt(found[i].dist_sq);
        e.signed_distance = dot(x - e.position, e.normal) >= 0.0 ? dist : -dist;
    }

    // Replace neighbors whose canonical correspondence lies farther than
    // the cutoff from the nearest neighbor's canonical position.
    const KnnEntry nearest = result.entries[0];
    for (int i = 1; i < result.k; ++i)
        if (length(result.entries[i].canonical - nearest.canonical) > geodesic_cutoff)
            result.entries[i] = nearest;

    return result;
}

inline double coarse_distance(const KnnResult& knn) {
    if (knn.k == 0) throw ConfigError("coarse_distance: empty KNN result");
    double sum = 0;
    for (int i = 0; i < knn.k; ++i) sum += knn.entries[i].signed_distance;
    return sum / knn.k;
}

// Blend-weight blending over the (post-replacement) neighbor set.
inline WeightVector knn_blend_weights(const KnnResult& knn, double blending_radius = 0.075) {
    if (knn.k == 0) throw ConfigError("blend_weights: empty neighborhood");
    std::array<double, kMaxKnn> d;
    std::array<const WeightVector*, kMaxKnn> w;
    for (int i = 0; i < knn.k; ++i) {
        d[i] = knn.entries[i].signed_distance;
        w[i] = knn.entries[i].weights;
    }
    return blend_weights({d.data(), size_t(knn.k)}, {w.data(), size_t(knn.k)}, blending_radius);
}

}  // namespace hdq
