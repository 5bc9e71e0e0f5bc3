#pragma once

// Pinhole camera with look-at orientation; generates primary rays through
// pixel centers.

#include "hdq/trace.hpp"

namespace hdq {

struct Camera {
    Vec3 position{0, 0, 2};
    Vec3 look_at{0, 0, 0};
    Vec3 up{0, 0, 1};
    double vfov_deg = 40.0;
    int width = 256, height = 256;

    void validate() const {
        if (vfov_deg <= 1.0 || vfov_deg >= 179.0) throw ConfigError("camera FOV out of (1, 179)");
        if (width < 16 || height < 16) throw ConfigError("camera resolution below 16x16");
        if (length_squared(look_at - position) == 0.0)
            throw ConfigError("camera look-at coincides with position");
    }

    Ray pixel_ray(int px, int py) const {
        Vec3 forward = normalize(look_at - position);
        Vec3 right = normalize(cross(forward, up));
        Vec3 upv = cross(right, forward);
        double tan_half = std::tan(0.5 * radians(vfov_deg));
        double aspect = double(width) / height;
        double u = ((px + 0.5) / width * 2.0 - 1.0) * tan_half * aspect;
        double v = (1.0 - (py + 0.5) / height * 2.0) * tan_half;
        return Ray{position, normalize(forward + right * u + upv * v), 0.0, kInf};
    }
};

}  // namespace hdq
