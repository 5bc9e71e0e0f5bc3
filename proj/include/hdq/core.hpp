#pragma once

// Small double-precision 3D math kit shared by every module: vectors,
// 3x3 matrices, unit quaternions, rigid transforms, axis-aligned boxes,
// a polar decomposition and a deterministic RNG for sampling.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace hdq {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error hierarchy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct InvariantError : Error {
    using Error::Error;
};
struct DegenerateWarpError : Error {
    double condition_estimate = 0.0;
    explicit DegenerateWarpError(const std::string& msg, double cond)
        : Error(msg), condition_estimate(cond) {}
};
struct NotOnSurfaceError : Error {
    using Error::Error;
};

struct Vec3 {
    double x = 0, y = 0, z = 0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    double& operator[](int i) { return (&x)[i]; }
    double operator[](int i) const { return (&x)[i]; }

    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& v) { x += v.x; y += v.y; z += v.z; return *this; }
    Vec3& operator-=(const Vec3& v) { x -= v.x; y -= v.y; z -= v.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
inline bool operator==(const Vec3& a, const Vec3& b) { return a.x == b.x && a.y == b.y && a.z == b.z; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length_squared(const Vec3& v) { return dot(v, v); }
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) {
    double len = length(v);
    if (len == 0.0) throw InvariantError("cannot normalize zero-length vector");
    return v / len;
}
inline Vec3 min(const Vec3& a, const Vec3& b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 max(const Vec3& a, const Vec3& b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
inline Vec3 mul(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
inline double max_component(const Vec3& v) { return std::max(v.x, std::max(v.y, v.z)); }

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }
inline double degrees(double rad) { return rad * (180.0 / kPi); }
inline double radians(double deg) { return deg * (kPi / 180.0); }

// Angle between two unit-ish vectors, robust near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) {
    double c = clamp(dot(a, b) / (length(a) * length(b)), -1.0, 1.0);
    return std::acos(c);
}

// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }
    static Mat3 zero() { Mat3 r; r.m.fill(0.0); return r; }

    double& operator()(int r, int c) { return m[3 * r + c]; }
    double operator()(int r, int c) const { return m[3 * r + c]; }
};

inline Vec3 operator*(const Mat3& a, const Vec3& v) {
    return {a.m[0] * v.x + a.m[1] * v.y + a.m[2] * v.z,
            a.m[3] * v.x + a.m[4] * v.y + a.m[5] * v.z,
            a.m[6] * v.x + a.m[7] * v.y + a.m[8] * v.z};
}

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r = Mat3::zero();
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 3; ++j) r(i, j) += a(i, k) * b(k, j);
    return r;
}

inline Mat3 operator+(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = a.m[i] + b.m[i];
    return r;
}

inline Mat3 operator*(const Mat3& a, double s) {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = a.m[i] * s;
    return r;
}

inline Mat3 transpose(const Mat3& a) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = a(j, i);
    return r;
}

inline double determinant(const Mat3& a) {
    return a.m[0] * (a.m[4] * a.m[8] - a.m[5] * a.m[7]) -
           a.m[1] * (a.m[3] * a.m[8] - a.m[5] * a.m[6]) +
           a.m[2] * (a.m[3] * a.m[7] - a.m[4] * a.m[6]);
}

inline Mat3 inverse(const Mat3& a) {
    double det = determinant(a);
    if (std::abs(det) < 1e-300) throw InvariantError("singular 3x3 matrix");
    double inv = 1.0 / det;
    Mat3 r;
    r.m[0] = (a.m[4] * a.m[8] - a.m[5] * a.m[7]) * inv;
    r.m[1] = (a.m[2] * a.m[7] - a.m[1] * a.m[8]) * inv;
    r.m[2] = (a.m[1] * a.m[5] - a.m[2] * a.m[4]) * inv;
    r.m[3] = (a.m[5] * a.m[6] - a.m[3] * a.m[8]) * inv;
    r.m[4] = (a.m[0] * a.m[8] - a.m[2] * a.m[6]) * inv;
    r.m[5] = (a.m[2] * a.m[3] - a.m[0] * a.m[5]) * inv;
    r.m[6] = (a.m[3] * a.m[7] - a.m[4] * a.m[6]) * inv;
    r.m[7] = (a.m[1] * a.m[6] - a.m[0] * a.m[7]) * inv;
    r.m[8] = (a.m[0] * a.m[4] - a.m[1] * a.m[3]) * inv;
    return r;
}

inline double frobenius_norm(const Mat3& a) {
    double s = 0;
    for (double v : a.m) s += v * v;
    return std::sqrt(s);
}

inline double max_abs_entry(const Mat3& a) {
    double s = 0;
    for (double v : a.m) s = std::max(s, std::abs(v));
    return s;
}

// ||R^T R - I||_inf, the orthonormality defect used by tests.
inline double orthonormality_defect(const Mat3& r) {
    Mat3 d = transpose(r) * r;
    for (int i = 0; i < 3; ++i) d(i, i) -= 1.0;
    return max_abs_entry(d);
}

// Nearest rotation to an invertible matrix via Higham's iteration
// X <- (X + X^-T)/2. Quadratic convergence; 30 iterations is far more
// than enough for the condition numbers we accept.
inline Mat3 polar_rotation(const Mat3& a) {
    Mat3 x = a;
    for (int it = 0; it < 30; ++it) {
        Mat3 next = (x + transpose(inverse(x))) * 0.5;
        double delta = 0;
        for (int i = 0; i < 9; ++i) delta = std::max(delta, std::abs(next.m[i] - x.m[i]));
        x = next;
        if (delta < 1e-14) break;
    }
    return x;
}

// Cheap condition estimate: ||A||_F * ||A^-1||_F (upper bound on cond_2 up to 3x).
inline double condition_estimate(const Mat3& a) {
    return frobenius_norm(a) * frobenius_norm(inverse(a));
}

// Unit quaternion (w, x, y, z).
struct Quat {
    double w = 1, x = 0, y = 0, z = 0;

    static Quat identity() { return {}; }
    static Quat from_axis_angle(const Vec3& axis, double angle) {
        Vec3 a = normalize(axis);
        double h = 0.5 * angle, s = std::sin(h);
        return {std::cos(h), a.x * s, a.y * s, a.z * s};
    }

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
};

inline Quat normalize(const Quat& q) {
    double n = q.norm();
    if (n == 0.0) throw InvariantError("cannot normalize zero quaternion");
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

inline Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Mat3 to_matrix(const Quat& q) {
    double xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
    double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
    double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
    Mat3 r;
    r.m = {1 - 2 * (yy + zz), 2 * (xy - wz),     2 * (xz + wy),
           2 * (xy + wz),     1 - 2 * (xx + zz), 2 * (yz - wx),
           2 * (xz - wy),     2 * (yz + wx),     1 - 2 * (xx + yy)};
    return r;
}

// Rigid transform x -> R x + t.
struct Rigid {
    Mat3 rot;
    Vec3 trans;

    static Rigid identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return rot * p + trans; }
    Vec3 apply_vector(const Vec3& v) const { return rot * v; }
};

inline Rigid operator*(const Rigid& a, const Rigid& b) {
    return {a.rot * b.rot, a.rot * b.trans + a.trans};
}

inline Rigid inverse(const Rigid& a) {
    Mat3 rt = transpose(a.rot);
    return {rt, -(rt * a.trans)};
}

struct Aabb {
    Vec3 lo{kInf, kInf, kInf};
    Vec3 hi{-kInf, -kInf, -kInf};

    void expand(const Vec3& p) { lo = min(lo, p); hi = max(hi, p); }
    void inflate(double pad) {
        lo -= Vec3{pad, pad, pad};
        hi += Vec3{pad, pad, pad};
    }
    bool empty() const { return lo.x > hi.x; }
    Vec3 center() const { return (lo + hi) * 0.5; }
};

// splitmix64-seeded xoshiro256** -- deterministic across platforms,
// used for template sampling and the Monte-Carlo oracles.
class Rng {
  public:
    explicit Rng(uint64_t seed = 0x9e3779b97f4a7c15ULL) {
        uint64_t z = seed;
        for (auto& si : s_) {
            z += 0x9e3779b97f4a7c15ULL;
            uint64_t t = z;
            t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ULL;
            t = (t ^ (t >> 27)) * 0x94d049bb133111ebULL;
            si = t ^ (t >> 31);
        }
    }

    uint64_t next_u64() {
        auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
        uint64_t result = rotl(s_[1] * 5, 7) * 9;
        uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    Vec3 unit_vector() {
        double z = uniform(-1.0, 1.0);
        double phi = uniform(0.0, 2.0 * kPi);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

    Quat unit_quaternion() {
        // Shoemake's uniform rotation sampling.
        double u1 = uniform(), u2 = uniform(), u3 = uniform();
        double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
        return {b * std::cos(2 * kPi * u3), a * std::sin(2 * kPi * u2),
                a * std::cos(2 * kPi * u2), b * std::sin(2 * kPi * u3)};
    }

  private:
    std::array<uint64_t, 4> s_{};
};

// Orthonormal basis around a unit vector n (branchless Duff et al. variant).
inline void make_basis(const Vec3& n, Vec3& t, Vec3& b) {
    double sign = n.z >= 0.0 ? 1.0 : -1.0;
    double a = -1.0 / (sign + n.z);
    double c = n.x * n.y * a;
    t = {1.0 + sign * n.x * n.x * a, sign * c, -sign * n.x};
    b = {c, sign + n.y * n.y * a, -n.y};
}

}  // namespace hdq
