#pragma once

#include "rbffd/errors.hpp"
#include "rbffd/geometry.hpp"
#include "rbffd/kernel.hpp"
#include "rbffd/rbf_core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace rbffd {

// ---------------------------------------------------------------------------
// Heuristic seed
// ---------------------------------------------------------------------------

/// log(eps) ~ s(r, l), a bivariate cubic in r = 1/h_min and l = ln(kappa_T).
struct HeuristicModel {
    struct Term {
        int pow_r;
        int pow_l;
        double coefficient;
    };
    std::array<Term, 10> terms;

    /// Coefficients fitted to icosahedral sphere stencils.
    static HeuristicModel default_table()
    {
        return HeuristicModel{{{
            {3, 0, 1.1012e-04},
            {2, 1, -7.1270e-05},
            {2, 0, -0.0071},
            {1, 2, 7.0963e-05},
            {1, 1, 0.0011},
            {1, 0, 0.2112},
            {0, 3, -7.9245e-05},
            {0, 2, 0.0028},
            {0, 1, -0.2005},
            {0, 0, 1.1472},
        }}};
    }

    /// Monomial exponents in table order.
    static constexpr std::array<std::array<int, 2>, 10> exponents()
    {
        return {{{3, 0}, {2, 1}, {2, 0}, {1, 2}, {1, 1}, {1, 0}, {0, 3}, {0, 2}, {0, 1}, {0, 0}}};
    }

    double log_epsilon(double r, double l) const
    {
        double s = 0.0;
        for (const auto& t : terms) s += t.coefficient * std::pow(r, t.pow_r) * std::pow(l, t.pow_l);
        return s;
    }

    double coefficient(int pow_r, int pow_l) const
    {
        for (const auto& t : terms) {
            if (t.pow_r == pow_r && t.pow_l == pow_l) return t.coefficient;
        }
        throw std::out_of_range("no term r^" + std::to_string(pow_r) + " l^" + std::to_string(pow_l));
    }

    /// Plain text, one `pow_r pow_l coefficient` line per term.
    void save(const std::filesystem::path& path) const
    {
        std::ofstream out(path);
        if (!out) throw InputError("cannot write " + path.string());
        out.precision(17);
        for (const auto& t : terms) out << t.pow_r << ' ' << t.pow_l << ' ' << t.coefficient << '\n';
    }

    static HeuristicModel load(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open " + path.string());
        HeuristicModel m = default_table();
        std::set<std::pair<int, int>> seen;
        std::string line;
        std::size_t count = 0;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
            std::istringstream is(line);
            Term t{};
            if (!(is >> t.pow_r >> t.pow_l >> t.coefficient)) {
                throw InputError("heuristic model: malformed line '" + line + "'");
            }
            if (t.pow_r < 0 || t.pow_l < 0 || t.pow_r + t.pow_l > 3 || !seen.emplace(t.pow_r, t.pow_l).second) {
                throw InputError("heuristic model: invalid or repeated term '" + line + "'");
            }
            if (count == m.terms.size()) throw InputError("heuristic model: more than 10 terms");
            m.terms[count++] = t;
        }
        if (count != m.terms.size()) throw InputError("heuristic model: expected 10 terms");
        return m;
    }
};

/// Seed shape parameter exp(s(1/h_min, ln kappa_T)); always positive.
inline double heuristic_epsilon(double h_min, double kappa_target,
                                const HeuristicModel& model = HeuristicModel::default_table())
{
    if (!(h_min > 0.0)) throw std::invalid_argument("heuristic_epsilon: h_min must be positive");
    if (!(kappa_target > 1.0)) throw std::invalid_argument("heuristic_epsilon: kappa_target must exceed 1");
    return std::exp(model.log_epsilon(1.0 / h_min, std::log(kappa_target)));
}

// ---------------------------------------------------------------------------
// Per-stencil optimisation
// ---------------------------------------------------------------------------

struct OptimizerConfig {
    double kappa_target = 1e12;
    double abs_tol = 1e-4;      // on epsilon
    int max_iterations = 100;
    double bracket_growth = 2.0;
    double epsilon_floor = 1e-3;
    double kappa_cutoff = 1e16; // largest condition number trusted in double precision

    void validate() const
    {
        if (!(kappa_target > 1.0)) throw std::invalid_argument("kappa_target must exceed 1");
        if (!(abs_tol > 0.0)) throw std::invalid_argument("abs_tol must be positive");
        if (max_iterations <= 0) throw std::invalid_argument("max_iterations must be positive");
        if (!(bracket_growth > 1.0)) throw std::invalid_argument("bracket_growth must exceed 1");
    }
};

struct EpsilonResult {
    double epsilon = 0.0;
    double achieved_kappa = 0.0;
    int iterations = 0; // bracket_steps + bisection_steps
    int bracket_steps = 0;
    int bisection_steps = 0;
    bool clamped = false;
};

/// Finds eps with kappa(A(eps)) = kappa_T: geometric bracketing from `seed`
/// followed by bisection down to an eps-interval of width abs_tol.
///
/// Targets beyond `kappa_cutoff` are unreachable in double precision; the
/// search then aims at the cutoff itself and reports clamped = true. The
/// same happens if the bracket would drop below `epsilon_floor`.
inline EpsilonResult optimize_epsilon(std::span<const Vec3> pts, KernelFamily family,
                                      const OptimizerConfig& cfg, double seed)
{
    cfg.validate();
    if (!(seed > 0.0)) throw std::invalid_argument("optimize_epsilon: seed must be positive");

    const bool over_cutoff = cfg.kappa_target > cfg.kappa_cutoff;
    const double target = over_cutoff ? cfg.kappa_cutoff : cfg.kappa_target;
    auto kappa_at = [&](double eps) { return condition_number_sym(interpolation_matrix(pts, Kernel(family, eps))); };
    auto residual = [&](double kappa) { return std::log(kappa / target); };

    EpsilonResult res;
    res.clamped = over_cutoff;
    auto bump = [&](double lo, double hi) {
        if (++res.iterations > cfg.max_iterations) {
            throw RootFindError("optimize_epsilon: no convergence within " +
                                    std::to_string(cfg.max_iterations) + " iterations",
                                lo, hi);
        }
    };

    const double k0 = kappa_at(seed);
    const double f0 = residual(k0);
    if (std::abs(f0) < std::log(1.0001)) {
        res.epsilon = seed;
        res.achieved_kappa = k0;
        return res;
    }

    double lo = seed;
    double hi = seed;
    if (f0 > 0.0) {
        // too ill-conditioned: eps is too small
        for (;;) {
            hi *= cfg.bracket_growth;
            bump(lo, hi);
            ++res.bracket_steps;
            if (residual(kappa_at(hi)) <= 0.0) break;
            lo = hi;
        }
    } else {
        for (;;) {
            lo /= cfg.bracket_growth;
            bump(lo, hi);
            ++res.bracket_steps;
            if (lo <= cfg.epsilon_floor) {
                lo = cfg.epsilon_floor;
                const double kf = kappa_at(lo);
                if (residual(kf) < 0.0) {
                    res.epsilon = lo;
                    res.achieved_kappa = kf;
                    res.clamped = true;
                    return res;
                }
                break;
            }
            if (residual(kappa_at(lo)) >= 0.0) break;
            hi = lo;
        }
    }

    while (hi - lo > cfg.abs_tol) {
        bump(lo, hi);
        ++res.bisection_steps;
        const double mid = 0.5 * (lo + hi);
        if (residual(kappa_at(mid)) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    res.epsilon = 0.5 * (lo + hi);
    res.achieved_kappa = kappa_at(res.epsilon);
    return res;
}

/// Per-stencil shape parameters and their diagnostics.
struct EpsilonReport {
    std::vector<double> epsilon;
    std::vector<double> kappa;
    std::vector<int> iterations;
    std::vector<std::uint8_t> clamped;

    std::size_t size() const noexcept { return epsilon.size(); }

    void resize(std::size_t n)
    {
        epsilon.resize(n);
        kappa.resize(n);
        iterations.resize(n);
        clamped.resize(n);
    }

    void set(std::size_t k, const EpsilonResult& r)
    {
        epsilon[k] = r.epsilon;
        kappa[k] = r.achieved_kappa;
        iterations[k] = r.iterations;
        clamped[k] = r.clamped ? 1 : 0;
    }

    double mean_epsilon() const
    {
        return epsilon.empty() ? 0.0 : std::accumulate(epsilon.begin(), epsilon.end(), 0.0) / epsilon.size();
    }

    std::size_t clamped_count() const
    {
        return static_cast<std::size_t>(std::count(clamped.begin(), clamped.end(), std::uint8_t{1}));
    }

    /// Sidecar text: `k epsilon kappa iterations clamped` per line.
    void save(const std::filesystem::path& path) const
    {
        std::ofstream out(path);
        if (!out) throw InputError("cannot write " + path.string());
        out.precision(17);
        for (std::size_t k = 0; k < size(); ++k) {
            out << k << ' ' << epsilon[k] << ' ' << kappa[k] << ' ' << iterations[k] << ' '
                << static_cast<int>(clamped[k]) << '\n';
        }
    }
};

/// Geometric mean over stencils of kappa(A_k(eps)) for a single shared eps.
/// Used to grow the target condition number with resolution while holding
/// the mean shape parameter fixed.
inline double mean_log_kappa_for_epsilon(const NodeSet& nodes, const StencilSet& stencils,
                                         KernelFamily family, double eps)
{
    const Kernel kernel(family, eps);
    double acc = 0.0;
    for (std::size_t k = 0; k < stencils.count(); ++k) {
        const auto pts = gather(nodes.points, stencils.row(k));
        acc += std::log(condition_number_sym(interpolation_matrix(pts, kernel)));
    }
    return acc / static_cast<double>(stencils.count());
}

// ---------------------------------------------------------------------------
// Refitting the heuristic
// ---------------------------------------------------------------------------

struct HeuristicSample {
    double h_min;
    double kappa_target;
    double epsilon;
};

struct HeuristicFit {
    HeuristicModel model;
    double residual_norm = 0.0;
};

/// Least-squares fit of ln(eps) on the ten monomials r^i l^j, i + j <= 3.
inline HeuristicFit fit_heuristic(std::span<const HeuristicSample> samples)
{
    constexpr auto ex = HeuristicModel::exponents();
    if (samples.size() < ex.size()) throw InputError("fit_heuristic: need at least 10 samples");
    std::set<double> targets;
    for (const auto& s : samples) targets.insert(s.kappa_target);
    if (targets.size() < 2) throw InputError("fit_heuristic: samples must span more than one kappa_T");

    const auto m = static_cast<Eigen::Index>(samples.size());
    Matrix x(m, static_cast<Eigen::Index>(ex.size()));
    Vector y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        if (!(s.h_min > 0.0) || !(s.epsilon > 0.0)) throw InputError("fit_heuristic: non-positive sample");
        const double r = 1.0 / s.h_min;
        const double l = std::log(s.kappa_target);
        for (std::size_t c = 0; c < ex.size(); ++c) {
            x(i, static_cast<Eigen::Index>(c)) = std::pow(r, ex[c][0]) * std::pow(l, ex[c][1]);
        }
        y(i) = std::log(s.epsilon);
    }
    // equilibrate columns so the rank test is scale-free
    const Vector scale = x.colwise().norm().transpose();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (scale(c) == 0.0) throw InputError("fit_heuristic: rank-deficient design matrix");
        x.col(c) /= scale(c);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    qr.setThreshold(1e-12);
    if (qr.rank() < x.cols()) throw InputError("fit_heuristic: rank-deficient design matrix");
    const Vector coef = qr.solve(y);

    HeuristicFit fit;
    fit.residual_norm = (x * coef - y).norm();
    for (std::size_t c = 0; c < ex.size(); ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        fit.model.terms[c] = {ex[c][0], ex[c][1], coef(ci) / scale(ci)};
    }
    return fit;
}

} // namespace rbffd
