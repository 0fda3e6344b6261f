#pragma once

#include "rbffd/errors.hpp"
#include "rbffd/geometry.hpp"
#include "rbffd/spherical_harmonics.hpp"
#include "rbffd/timestepping.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rbffd {

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline constexpr std::uint64_t default_problem_seed = 20240611;

// ---------------------------------------------------------------------------
// Heat equation on the unit sphere
// ---------------------------------------------------------------------------

/// u = 20/(3 pi) sum_{l=1}^{L} exp(-l^2/9) exp(-t l(l+1)) Y_l^l(x)
struct SphereHeatSolution {
    int truncation = 30;
    double amplitude = 20.0 / (3.0 * std::numbers::pi);

    /// l-th term of the series.
    double mode(int l, double t, const Vec3& x) const
    {
        const double ll = l;
        return amplitude * std::exp(-ll * ll / 9.0) * std::exp(-t * ll * (ll + 1.0)) * real_spherical_harmonic(l, l, x);
    }

    double value(double t, const Vec3& x) const
    {
        if (truncation < 1) throw std::invalid_argument("SphereHeatSolution: truncation must be >= 1");
        double u = 0.0;
        for (int l = 1; l <= truncation; ++l) u += mode(l, t, x);
        return u;
    }
};

inline double sphere_heat_exact(double t, const Vec3& x) { return SphereHeatSolution{}.value(t, x); }

// ---------------------------------------------------------------------------
// Forced diffusion on the unit sphere
// ---------------------------------------------------------------------------

/// Radial profile of the summands of the forced sphere solution.
enum class SphereBump {
    geodesic, // exp(-10 theta), as published; cone points at theta = 0 and pi
    gaussian  // exp(-10 (1 - cos theta)), smooth; diagnostic only
};

/// u = exp(-5t) sum_k g(theta_k), theta_k the geodesic distance to xi_k.
struct ForcedSphereSolution {
    std::vector<Vec3> centers;
    std::uint64_t seed = default_problem_seed;
    SphereBump bump = SphereBump::geodesic;

    static ForcedSphereSolution random(std::uint64_t seed = default_problem_seed, int count = 23,
                                       SphereBump bump = SphereBump::geodesic)
    {
        ForcedSphereSolution s;
        s.seed = seed;
        s.bump = bump;
        std::mt19937_64 rng(seed);
        for (int k = 0; k < count; ++k) {
            const double z = uniform(rng, -1.0, 1.0);
            const double az = uniform(rng, -std::numbers::pi, std::numbers::pi);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            s.centers.emplace_back(r * std::cos(az), r * std::sin(az), z);
        }
        return s;
    }

    double value(double t, const Vec3& x) const
    {
        const Vec3 y = x.normalized();
        double u = 0.0;
        for (const auto& c : centers) {
            u += bump == SphereBump::geodesic ? std::exp(-10.0 * geodesic(c, y)) : std::exp(-10.0 * (1.0 - c.dot(y)));
        }
        return std::exp(-5.0 * t) * u;
    }

    /// Delta_M u from g'' + cot(theta) g' per summand. For the published
    /// profile this is unbounded at a centre and at its antipode.
    double laplacian(double t, const Vec3& x) const
    {
        const Vec3 y = x.normalized();
        double acc = 0.0;
        for (const auto& c : centers) {
            const double co = c.dot(y);
            if (bump == SphereBump::gaussian) {
                acc += std::exp(-10.0 * (1.0 - co)) * (100.0 * (1.0 - co * co) - 20.0 * co);
                continue;
            }
            const double s = c.cross(y).norm();
            if (s == 0.0) {
                throw std::domain_error("forced sphere Laplacian is unbounded at a centre or its antipode");
            }
            const double theta = std::atan2(s, co);
            acc += std::exp(-10.0 * theta) * (100.0 - 10.0 * co / s);
        }
        return std::exp(-5.0 * t) * acc;
    }

    /// f = u_t - delta Delta_M u
    double forcing(double t, const Vec3& x, double delta = 1.0) const
    {
        return -5.0 * value(t, x) - delta * laplacian(t, x);
    }

    static double geodesic(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }
};

// ---------------------------------------------------------------------------
// Forced diffusion on the torus (1 - sqrt(x^2+y^2))^2 + z^2 = 1/9
// ---------------------------------------------------------------------------

struct TorusCoords {
    double phi;
    double lambda;
};

inline double torus_implicit_residual(const Vec3& x)
{
    const double rho = std::hypot(x.x(), x.y());
    return (1.0 - rho) * (1.0 - rho) + x.z() * x.z() - 1.0 / 9.0;
}

inline TorusCoords torus_intrinsic_coords(const Vec3& x)
{
    const double res = torus_implicit_residual(x);
    if (std::abs(res) > 1e-8) throw InputError("point is off the torus (residual " + std::to_string(res) + ")");
    const double rho = std::hypot(x.x(), x.y());
    return {std::atan2(3.0 * x.z(), 3.0 * rho - 3.0), std::atan2(x.y(), x.x())};
}

/// u = exp(-5t) sum_k exp(-a^2 (1 - cos(lambda - lambda_k)) - b^2 (1 - cos(phi - phi_k)))
struct ForcedTorusSolution {
    std::vector<TorusCoords> centers;
    double a = 9.0;
    double b = 3.0;
    std::uint64_t seed = default_problem_seed;

    static ForcedTorusSolution random(std::uint64_t seed = default_problem_seed, int count = 23)
    {
        ForcedTorusSolution s;
        s.seed = seed;
        std::mt19937_64 rng(seed);
        for (int k = 0; k < count; ++k) {
            const double phi = uniform(rng, -std::numbers::pi, std::numbers::pi);
            const double lambda = uniform(rng, -std::numbers::pi, std::numbers::pi);
            s.centers.push_back({phi, lambda});
        }
        return s;
    }

    double value(double t, double phi, double lambda) const
    {
        double u = 0.0;
        for (const auto& c : centers) u += bump(c, phi, lambda);
        return std::exp(-5.0 * t) * u;
    }

    /// (1/rho^2) u_ll + (9/rho) d/dphi(rho u_phi),  rho = 1 + cos(phi)/3
    double laplacian(double t, double phi, double lambda) const
    {
        const double rho = 1.0 + std::cos(phi) / 3.0;
        const double drho = -std::sin(phi) / 3.0;
        const double aa = a * a, bb = b * b;
        double acc = 0.0;
        for (const auto& c : centers) {
            const double e = bump(c, phi, lambda);
            const double sl = std::sin(lambda - c.lambda), cl = std::cos(lambda - c.lambda);
            const double sp = std::sin(phi - c.phi), cp = std::cos(phi - c.phi);
            const double e_ll = (aa * aa * sl * sl - aa * cl) * e;
            const double e_p = -bb * sp * e;
            const double e_pp = (bb * bb * sp * sp - bb * cp) * e;
            acc += e_ll / (rho * rho) + 9.0 * (e_pp + drho / rho * e_p);
        }
        return std::exp(-5.0 * t) * acc;
    }

    double forcing(double t, double phi, double lambda, double delta = 1.0) const
    {
        return -5.0 * value(t, phi, lambda) - delta * laplacian(t, phi, lambda);
    }

    double value(double t, const Vec3& x) const
    {
        const auto c = torus_intrinsic_coords(x);
        return value(t, c.phi, c.lambda);
    }

    double forcing(double t, const Vec3& x, double delta = 1.0) const
    {
        const auto c = torus_intrinsic_coords(x);
        return forcing(t, c.phi, c.lambda, delta);
    }

private:
    double bump(const TorusCoords& c, double phi, double lambda) const
    {
        return std::exp(-a * a * (1.0 - std::cos(lambda - c.lambda)) - b * b * (1.0 - std::cos(phi - c.phi)));
    }
};

// ---------------------------------------------------------------------------
// Convergence-study problems over a node set
// ---------------------------------------------------------------------------

enum class ProblemKind { sphere_heat, forced_sphere, forced_torus, forced_sphere_gaussian };

inline ProblemKind problem_kind_from_string(std::string_view s)
{
    if (s == "sphere_heat") return ProblemKind::sphere_heat;
    if (s == "forced_sphere") return ProblemKind::forced_sphere;
    if (s == "forced_torus") return ProblemKind::forced_torus;
    if (s == "forced_sphere_gaussian") return ProblemKind::forced_sphere_gaussian;
    throw InputError("unknown problem '" + std::string(s) + "'");
}

inline std::string_view to_string(ProblemKind k)
{
    switch (k) {
    case ProblemKind::sphere_heat: return "sphere_heat";
    case ProblemKind::forced_sphere: return "forced_sphere";
    case ProblemKind::forced_torus: return "forced_torus";
    case ProblemKind::forced_sphere_gaussian: return "forced_sphere_gaussian";
    }
    return "?";
}

inline double default_final_time(ProblemKind k) { return k == ProblemKind::sphere_heat ? 0.5 : 0.2; }

/// Exact solution and forcing sampled at every node of a fixed node set.
struct NodalProblem {
    TimeField exact;
    TimeField forcing; // empty for the unforced heat problem
    double delta = 1.0;
};

inline NodalProblem make_nodal_problem(ProblemKind kind, const NodeSet& nodes, std::uint64_t seed = default_problem_seed,
                                       double delta = 1.0)
{
    const auto pts = nodes.points; // captured by value: the problem may outlive the node set
    const auto n = static_cast<Eigen::Index>(pts.size());
    auto sample = [pts, n](auto fn) {
        return [pts, n, fn](double t) {
            Eigen::VectorXd v(n);
            for (Eigen::Index i = 0; i < n; ++i) v(i) = fn(t, pts[static_cast<std::size_t>(i)]);
            return v;
        };
    };
    NodalProblem p;
    p.delta = delta;
    switch (kind) {
    case ProblemKind::sphere_heat: {
        // modes decay independently: evaluate Y_ll once per node
        const SphereHeatSolution s;
        Eigen::MatrixXd ylm(n, s.truncation);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int l = 1; l <= s.truncation; ++l) ylm(i, l - 1) = s.mode(l, 0.0, pts[static_cast<std::size_t>(i)]);
        }
        p.exact = [ylm, delta](double t) {
            Eigen::VectorXd decay(ylm.cols());
            for (Eigen::Index l = 1; l <= ylm.cols(); ++l) decay(l - 1) = std::exp(-delta * t * double(l) * double(l + 1));
            return Eigen::VectorXd(ylm * decay);
        };
        break;
    }
    case ProblemKind::forced_sphere:
    case ProblemKind::forced_sphere_gaussian: {
        const auto s = ForcedSphereSolution::random(
            seed, 23, kind == ProblemKind::forced_sphere ? SphereBump::geodesic : SphereBump::gaussian);
        p.exact = sample([s](double t, const Vec3& x) { return s.value(t, x); });
        p.forcing = sample([s, delta](double t, const Vec3& x) { return s.forcing(t, x, delta); });
        break;
    }
    case ProblemKind::forced_torus: {
        const auto s = ForcedTorusSolution::random(seed);
        p.exact = sample([s](double t, const Vec3& x) { return s.value(t, x); });
        p.forcing = sample([s, delta](double t, const Vec3& x) { return s.forcing(t, x, delta); });
        break;
    }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Turing system
// ---------------------------------------------------------------------------

struct TuringParams {
    double delta_u = 0.516 * 4.5e-3;
    double delta_v = 4.5e-3;
    double alpha = 0.899;
    double beta = -0.91;
    double gamma = -0.899;
    double tau1 = 0.02;
    double tau2 = 0.2;
    double final_time = 800.0;

    void validate() const
    {
        if (!(delta_u > 0.0) || !(delta_v > 0.0)) throw InputError("diffusion coefficients must be positive");
        if (!(final_time > 0.0)) throw InputError("final time must be positive");
        if (beta == 0.0 && tau1 != 0.0) throw InputError("beta = 0 with tau1 != 0 leaves alpha*tau1/beta undefined");
    }
};

/// (du, dv) for
///   du = alpha u (1 - tau1 v^2) + v (1 - tau2 u)
///   dv = beta v (1 + alpha tau1 / beta u v) + u (gamma + tau2 v)
inline std::pair<double, double> turing_reaction(double u, double v, const TuringParams& p)
{
    if (p.beta == 0.0 && p.tau1 != 0.0) {
        throw InputError("beta = 0 with tau1 != 0 leaves alpha*tau1/beta undefined");
    }
    const double du = p.alpha * u * (1.0 - p.tau1 * v * v) + v * (1.0 - p.tau2 * u);
    const double bv = p.beta == 0.0 ? 0.0 : p.beta * v * (1.0 + (p.alpha * p.tau1 / p.beta) * u * v);
    const double dv = bv + u * (p.gamma + p.tau2 * v);
    return {du, dv};
}

/// Node-wise reaction for the integrator.
inline Reaction turing_reaction_field(const TuringParams& p)
{
    p.validate();
    return [p](double, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
        FieldPair r{Eigen::VectorXd(u.size()), Eigen::VectorXd(v.size())};
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const auto [du, dv] = turing_reaction(u(i), v(i), p);
            r.u(i) = du;
            r.v(i) = dv;
        }
        return r;
    };
}

/// i.i.d. uniform samples in [-amplitude, amplitude] for u, then for v.
inline FieldPair turing_initial_state(std::size_t n, std::uint64_t seed, double amplitude = 0.5)
{
    std::mt19937_64 rng(seed);
    FieldPair s{Eigen::VectorXd(static_cast<Eigen::Index>(n)), Eigen::VectorXd(static_cast<Eigen::Index>(n))};
    for (auto& x : s.u) x = uniform(rng, -amplitude, amplitude);
    for (auto& x : s.v) x = uniform(rng, -amplitude, amplitude);
    return s;
}

/// One row of the published parameter table plus its discretisation.
struct TuringPreset {
    std::string name; // "Surface/pattern"
    std::string surface;
    std::string pattern;
    TuringParams params;
    std::size_t nodes = 0;
    std::size_t stencil = 31;
    double kappa_target = 1e12;
    double dt = 0.01;
};

inline std::vector<TuringPreset> turing_presets()
{
    struct Disc {
        const char* surface;
        std::size_t nodes;
        double kappa;
    };
    constexpr std::array<Disc, 5> disc{{{"RBC", 10000, 1e12},
                                        {"Bumpy sphere", 10000, 1e12},
                                        {"Double-torus", 12100, 1e11},
                                        {"Frog", 7458, 1e10},
                                        {"Bunny", 11339, 1e10}}};
    struct Row {
        const char* surface;
        const char* pattern;
        double delta_v, tau1, tau2, final_time;
    };
    constexpr std::array<Row, 8> rows{{{"RBC", "spots", 4.5e-3, 0.02, 0.2, 800},
                                       {"RBC", "stripes", 2.1e-3, 3.5, 0.0, 6500},
                                       {"Bumpy sphere", "spots", 4.5e-3, 0.02, 0.2, 800},
                                       {"Bumpy sphere", "stripes", 2.1e-3, 3.5, 0.0, 7000},
                                       {"Double-torus", "spots", 2.1e-3, 0.02, 0.2, 700},
                                       {"Double-torus", "stripes", 8.87e-4, 3.5, 0.0, 6000},
                                       {"Frog", "spots", 2.87e-4, 0.02, 0.2, 600},
                                       {"Bunny", "stripes", 2.87e-4, 3.5, 0.0, 6000}}};
    std::vector<TuringPreset> out;
    for (const auto& r : rows) {
        TuringPreset p;
        p.surface = r.surface;
        p.pattern = r.pattern;
        p.name = p.surface + "/" + p.pattern;
        p.params.delta_v = r.delta_v;
        p.params.delta_u = 0.516 * r.delta_v;
        p.params.alpha = 0.899;
        p.params.beta = -0.91;
        p.params.gamma = -0.899;
        p.params.tau1 = r.tau1;
        p.params.tau2 = r.tau2;
        p.params.final_time = r.final_time;
        for (const auto& d : disc) {
            if (p.surface == d.surface) {
                p.nodes = d.nodes;
                p.kappa_target = d.kappa;
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

inline TuringPreset turing_preset(std::string_view name)
{
    for (auto& p : turing_presets()) {
        if (p.name == name) return p;
    }
    throw InputError("unknown Turing preset '" + std::string(name) + "'");
}

} // namespace rbffd
