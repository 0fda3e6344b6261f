#pragma once

#include "rbffd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rbffd {

/// Fully normalised associated Legendre function Pbar_l^m(cos theta), m >= 0,
/// without the Condon-Shortley phase, so that Pbar^2 integrates to 1/(2 pi)
/// over [-1, 1].
inline double normalized_legendre(int l, int m, double x)
{
    if (m < 0 || m > l) throw std::invalid_argument("normalized_legendre: need 0 <= m <= l");
    const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    double pmm = 1.0 / std::sqrt(4.0 * std::numbers::pi);
    for (int k = 1; k <= m; ++k) pmm *= std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
    if (l == m) return pmm;
    double pm1 = std::sqrt(2.0 * m + 3.0) * x * pmm;
    if (l == m + 1) return pm1;
    double p = 0.0;
    for (int k = m + 2; k <= l; ++k) {
        const double kk = k, mm = m;
        const double a = std::sqrt((4.0 * kk * kk - 1.0) / (kk * kk - mm * mm));
        const double b = std::sqrt(((kk - 1.0) * (kk - 1.0) - mm * mm) / (4.0 * (kk - 1.0) * (kk - 1.0) - 1.0));
        p = a * (x * pm1 - b * pmm);
        pmm = pm1;
        pm1 = p;
    }
    return p;
}

/// Real orthonormal spherical harmonic Y_l^m at a unit vector:
/// m > 0 uses cos(m phi), m < 0 uses sin(|m| phi).
inline double real_spherical_harmonic(int l, int m, const Vec3& x)
{
    if (l < 0 || std::abs(m) > l) {
        throw std::invalid_argument("real_spherical_harmonic: need |m| <= l (l=" + std::to_string(l) +
                                    ", m=" + std::to_string(m) + ")");
    }
    const double z = std::clamp(x.z() / x.norm(), -1.0, 1.0);
    const double phi = std::atan2(x.y(), x.x());
    const double p = normalized_legendre(l, std::abs(m), z);
    if (m == 0) return p;
    const double r2 = std::numbers::sqrt2;
    return m > 0 ? r2 * p * std::cos(m * phi) : r2 * p * std::sin(-m * phi);
}

} // namespace rbffd
