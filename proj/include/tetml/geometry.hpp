#ifndef TETML_GEOMETRY_HPP
#define TETML_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <algorithm>

namespace tetml {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 midpoint(const Vec3& a, const Vec3& b) {
    return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y), 0.5 * (a.z + b.z)};
}

inline double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return dot(b - a, cross(c - a, d - a)) / 6.0;
}

inline double tet_volume(const std::array<Vec3, 4>& v) {
    return signed_volume(v[0], v[1], v[2], v[3]);
}

// Longest edge.
inline double tet_diameter(const std::array<Vec3, 4>& v) {
    double d = 0;
    for (int i = 0; i < 4; ++i)
        for (int k = i + 1; k < 4; ++k) d = std::max(d, norm(v[i] - v[k]));
    return d;
}

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

// inradius = 3 V / (sum of face areas)
inline double tet_inradius(const std::array<Vec3, 4>& v) {
    double vol = std::abs(tet_volume(v));
    double area = triangle_area(v[1], v[2], v[3]) + triangle_area(v[0], v[2], v[3]) +
                  triangle_area(v[0], v[1], v[3]) + triangle_area(v[0], v[1], v[2]);
    return 3.0 * vol / area;
}

// Nondegeneracy measure volume^(1/3) / diameter, scale invariant and bounded
// above (regular tet ~ 0.49). Conforming-closure children keep at least a
// quarter of the father's volume without growing its diameter, so the measure
// drops by at most 4^(-1/3) in a single closure step.
inline double shape_ratio(const std::array<Vec3, 4>& v) {
    return std::cbrt(std::abs(tet_volume(v))) / tet_diameter(v);
}

// Barycentric coordinates of p with respect to the tet.
inline std::array<double, 4> barycentric(const std::array<Vec3, 4>& v, const Vec3& p) {
    double vol = tet_volume(v);
    std::array<double, 4> lam;
    lam[0] = signed_volume(p, v[1], v[2], v[3]) / vol;
    lam[1] = signed_volume(v[0], p, v[2], v[3]) / vol;
    lam[2] = signed_volume(v[0], v[1], p, v[3]) / vol;
    lam[3] = signed_volume(v[0], v[1], v[2], p) / vol;
    return lam;
}

inline bool point_in_tet(const std::array<Vec3, 4>& v, const Vec3& p, double tol = 1e-12) {
    auto lam = barycentric(v, p);
    for (double l : lam)
        if (l < -tol) return false;
    return true;
}

} // namespace tetml

#endif
