#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "spktrack/common.hpp"
#include "spktrack/rng.hpp"

namespace spktrack {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
    friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 cross(const Vec3& o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{1.0, 0.0, 0.0};
    }
};

/// Direction of arrival in degrees. Azimuth is counter-clockwise from the
/// front (x axis) towards the left (y axis), elevation is up from the
/// horizontal plane.
struct DoA {
    double azimuth = 0.0;
    double elevation = 0.0;

    bool operator==(const DoA&) const = default;

    Vec3 unit() const {
        const double az = deg2rad(azimuth), el = deg2rad(elevation);
        return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
    }

    static DoA from_unit(const Vec3& v) {
        const Vec3 u = v.normalized();
        DoA d;
        d.elevation = rad2deg(std::asin(std::clamp(u.z, -1.0, 1.0)));
        d.azimuth = wrap_azimuth(rad2deg(std::atan2(u.y, u.x)));
        return d;
    }

    // Maps any angle onto [-180, 180).
    static double wrap_azimuth(double az) {
        double a = std::fmod(az + 180.0, 360.0);
        if (a < 0.0) a += 360.0;
        a -= 180.0;
        return a >= 180.0 ? a - 360.0 : a;
    }
};

inline double angular_distance_unit(const Vec3& a, const Vec3& b) {
    return rad2deg(std::acos(std::clamp(a.dot(b), -1.0, 1.0)));
}

/// Great-circle distance in degrees, in [0, 180].
inline double angular_distance(const DoA& a, const DoA& b) {
    return angular_distance_unit(a.unit(), b.unit());
}

/// Normalized mean of unit vectors. Falls back to the first direction when the
/// resultant vanishes (antipodal inputs).
inline DoA spherical_mean(std::span<const DoA> doas) {
    if (doas.empty()) return {};
    Vec3 acc;
    for (const auto& d : doas) acc += d.unit();
    if (acc.norm() < 1e-12) return doas.front();
    return DoA::from_unit(acc);
}

inline Vec3 sample_uniform_sphere(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        Vec3 v{n(rng), n(rng), n(rng)};
        if (v.norm() > 1e-12) return v.normalized();
    }
}

/// Von Mises-Fisher draw on S^2 around unit vector `mean` (Wood's method, which
/// is exact in three dimensions).
inline Vec3 sample_vmf(Rng& rng, const Vec3& mean, double kappa) {
    if (!(kappa > 0.0)) return sample_uniform_sphere(rng);
    if (std::isinf(kappa)) return mean;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = u01(rng);
    // w = cos(theta)
    double w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
    w = std::clamp(w, -1.0, 1.0);
    const double phi = 2.0 * kPi * u01(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - w * w));

    // Orthonormal frame around the mean.
    const Vec3 mu = mean.normalized();
    const Vec3 helper = std::abs(mu.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    const Vec3 e1 = mu.cross(helper).normalized();
    const Vec3 e2 = mu.cross(e1);
    return (w * mu + (r * std::cos(phi)) * e1 + (r * std::sin(phi)) * e2).normalized();
}

/// Expected great-circle angle (degrees) between a vMF draw and its mean,
/// by midpoint quadrature of p(theta) = kappa / (2 sinh kappa) e^{kappa cos theta} sin theta.
inline double vmf_mean_angle_deg(double kappa, int steps = 20000) {
    if (!(kappa > 0.0)) return 90.0;
    // Work with e^{kappa (cos t - 1)} to avoid overflow.
    double num = 0.0, den = 0.0;
    const double h = kPi / steps;
    for (int i = 0; i < steps; ++i) {
        const double t = (i + 0.5) * h;
        const double p = std::exp(kappa * (std::cos(t) - 1.0)) * std::sin(t);
        num += t * p;
        den += p;
    }
    return rad2deg(num / den);
}

/// Concentration whose expected angular error equals `mean_error_deg`.
inline double vmf_kappa_for_mean_angle(double mean_error_deg) {
    double lo = 1e-3, hi = 1e7;
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (vmf_mean_angle_deg(mid) > mean_error_deg)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

}  // namespace spktrack
