#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rbffd {

enum class KernelFamily { imq, gaussian, multiquadric };

inline std::string_view to_string(KernelFamily f)
{
    switch (f) {
    case KernelFamily::imq: return "imq";
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::multiquadric: return "multiquadric";
    }
    return "?";
}

inline KernelFamily kernel_family_from_string(std::string_view s)
{
    if (s == "imq") return KernelFamily::imq;
    if (s == "gaussian" || s == "ga") return KernelFamily::gaussian;
    if (s == "multiquadric" || s == "mq") return KernelFamily::multiquadric;
    throw std::invalid_argument("unknown kernel family '" + std::string(s) + "'");
}

/// Radial kernel phi(r) with shape parameter epsilon > 0.
struct Kernel {
    KernelFamily family = KernelFamily::imq;
    double epsilon = 1.0;

    Kernel() = default;
    Kernel(KernelFamily f, double eps) : family(f), epsilon(eps)
    {
        if (!(eps > 0.0)) throw std::invalid_argument("shape parameter must be positive");
    }
};

inline double kernel_eval(const Kernel& k, double r)
{
    const double er2 = (k.epsilon * r) * (k.epsilon * r);
    switch (k.family) {
    case KernelFamily::imq: return 1.0 / std::sqrt(1.0 + er2);
    case KernelFamily::gaussian: return std::exp(-er2);
    case KernelFamily::multiquadric: return std::sqrt(1.0 + er2);
    }
    return 0.0;
}

/// eta(r) = phi'(r) / r in closed form (finite at r = 0), so that
/// grad_x phi(|x - y|) = eta(r) (x - y).
inline double kernel_eta(const Kernel& k, double r)
{
    const double e2 = k.epsilon * k.epsilon;
    const double er2 = e2 * r * r;
    switch (k.family) {
    case KernelFamily::imq: {
        const double s = 1.0 + er2;
        return -e2 / (s * std::sqrt(s));
    }
    case KernelFamily::gaussian: return -2.0 * e2 * std::exp(-er2);
    case KernelFamily::multiquadric: return e2 / std::sqrt(1.0 + er2);
    }
    return 0.0;
}

} // namespace rbffd
