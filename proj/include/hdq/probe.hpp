#pragma once

// Discrete equirectangular light probe: 16 rows x 32 columns x RGB with
// per-texel directions and solid angles. Zenith is +z, texels are sampled
// at their centers.

#include <vector>

#include "hdq/core.hpp"

namespace hdq {

inline constexpr int kProbeRows = 16;
inline constexpr int kProbeCols = 32;
inline constexpr int kProbeTexels = kProbeRows * kProbeCols;

struct TexelGeometry {
    Vec3 direction;
    double solid_angle;
};

// Texel center direction and exact solid angle. The solid angle is the
// band integral (2 pi / W)(cos(theta_r) - cos(theta_{r+1})), which
// telescopes to exactly 4 pi over the grid; the midpoint-rule
// (pi/H)(2 pi/W) sin(theta) approximation misses closure by ~0.16%.
inline TexelGeometry texel_direction(int row, int col, int rows = kProbeRows,
                                     int cols = kProbeCols) {
    if (row < 0 || row >= rows || col < 0 || col >= cols)
        throw ConfigError("texel index out of range");
    double theta = kPi * (row + 0.5) / rows;
    double phi = 2.0 * kPi * (col + 0.5) / cols;
    double sin_theta = std::sin(theta);
    Vec3 dir{sin_theta * std::cos(phi), sin_theta * std::sin(phi), std::cos(theta)};
    double omega = (2.0 * kPi / cols) *
                   (std::cos(kPi * row / rows) - std::cos(kPi * (row + 1) / rows));
    return {dir, omega};
}

namespace detail {

inline const std::vector<TexelGeometry>& probe_geometry() {
    static const std::vector<TexelGeometry> table = [] {
        std::vector<TexelGeometry> t;
        t.reserve(kProbeTexels);
        for (int r = 0; r < kProbeRows; ++r)
            for (int c = 0; c < kProbeCols; ++c) t.push_back(texel_direction(r, c));
        return t;
    }();
    return table;
}

}  // namespace detail

class LightProbe {
  public:
    LightProbe() : radiance_(kProbeTexels) {}

    static LightProbe uniform(double value) {
        LightProbe p;
        for (auto& v : p.radiance_) v = {value, value, value};
        return p;
    }

    // Bilinear resample from an arbitrary equirectangular grid.
    static LightProbe from_grid(const std::vector<Vec3>& data, int rows, int cols) {
        if (int(data.size()) != rows * cols) throw ConfigError("probe grid size mismatch");
        LightProbe p;
        if (rows == kProbeRows && cols == kProbeCols) {
            p.radiance_ = data;
        } else {
            for (int r = 0; r < kProbeRows; ++r)
                for (int c = 0; c < kProbeCols; ++c) {
                    double sr = (r + 0.5) / kProbeRows * rows - 0.5;
                    double sc = (c + 0.5) / kProbeCols * cols - 0.5;
                    int r0 = int(std::floor(sr)), c0 = int(std::floor(sc));
                    double fr = sr - r0, fc = sc - c0;
                    auto at = [&](int rr, int cc) {
                        rr = std::clamp(rr, 0, rows - 1);
                        cc = ((cc % cols) + cols) % cols;  // azimuth wraps
                        return data[rr * cols + cc];
                    };
                    p.radiance_[r * kProbeCols + c] =
                        (at(r0, c0) * (1 - fr) + at(r0 + 1, c0) * fr) * (1 - fc) +
                        (at(r0, c0 + 1) * (1 - fr) + at(r0 + 1, c0 + 1) * fr) * fc;
                }
        }
        p.validate();
        return p;
    }

    const Vec3& at(int row, int col) const { return radiance_[row * kProbeCols + col]; }
    Vec3& at(int row, int col) { return radiance_[row * kProbeCols + col]; }
    const Vec3& at(int texel) const { return radiance_[texel]; }
    Vec3& at(int texel) { return radiance_[texel]; }
    const std::vector<Vec3>& data() const { return radiance_; }

    static const TexelGeometry& texel(int i) { return detail::probe_geometry()[i]; }

    void validate() const {
        for (const Vec3& v : radiance_)
            for (int c = 0; c < 3; ++c)
                if (!(v[c] >= 0.0) || !std::isfinite(v[c]))
                    throw ConfigError("probe radiance must be finite and non-negative");
    }

  private:
    std::vector<Vec3> radiance_;
};

inline LightProbe operator*(const LightProbe& p, double s) {
    LightProbe r = p;
    for (int i = 0; i < kProbeTexels; ++i) r.at(i) *= s;
    return r;
}

inline LightProbe operator+(const LightProbe& a, const LightProbe& b) {
    LightProbe r = a;
    for (int i = 0; i < kProbeTexels; ++i) r.at(i) += b.at(i);
    return r;
}

}  // namespace hdq
