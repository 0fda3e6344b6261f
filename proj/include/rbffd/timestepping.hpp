#pragma once

#include "rbffd/errors.hpp"
#include "rbffd/linear_solvers.hpp"
#include "rbffd/sparse.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rbffd {

enum class Scheme { bdf4_bicgstab, sbdf2_lu };

struct IntegratorConfig {
    double dt = 1e-4;
    double t_final = 0.5;
    Scheme scheme = Scheme::bdf4_bicgstab;
    double linear_tol = 1e-12;
    int max_linear_iters = 200;

    void validate() const
    {
        if (!(dt > 0.0)) throw InputError("dt must be positive");
        if (!(t_final >= dt)) throw InputError("t_final must be at least dt");
        if (!(linear_tol > 0.0)) throw InputError("linear_tol must be positive");
        if (max_linear_iters < 1) throw InputError("max_linear_iters must be at least 1");
    }

    /// Number of steps; t_final is rounded to a whole number of steps.
    std::size_t steps() const { return static_cast<std::size_t>(std::llround(t_final / dt)); }
};

/// Per-step record of the implicit solves.
struct StepTrace {
    std::vector<double> t;
    std::vector<int> iterations;
    std::vector<double> residual;
    std::vector<double> wall_ms;

    std::size_t size() const noexcept { return t.size(); }

    void push(double time, int iters, double res, double ms)
    {
        t.push_back(time);
        iterations.push_back(iters);
        residual.push_back(res);
        wall_ms.push_back(ms);
    }

    double median_iterations() const
    {
        if (iterations.empty()) return 0.0;
        std::vector<int> s = iterations;
        std::sort(s.begin(), s.end());
        const std::size_t h = s.size() / 2;
        return s.size() % 2 ? s[h] : 0.5 * (s[h - 1] + s[h]);
    }

    void save_csv(const std::filesystem::path& path) const
    {
        std::ofstream out(path);
        if (!out) throw InputError("cannot write " + path.string());
        out << "step,t,iterations,residual,wall_ms\n";
        out.precision(12);
        for (std::size_t i = 0; i < size(); ++i) {
            out << i + 1 << ',' << t[i] << ',' << iterations[i] << ',' << residual[i] << ',' << wall_ms[i] << '\n';
        }
    }
};

using TimeField = std::function<Eigen::VectorXd(double)>; // t -> values at all nodes

/// u_t = delta L u + f(t)
struct DiffusionProblem {
    const CsrMatrix* op = nullptr;
    double delta = 1.0;
    TimeField forcing;  // empty: f = 0
    TimeField exact;    // required by BDF4 for the start-up levels
};

struct IntegrationResult {
    Eigen::VectorXd u;
    StepTrace trace;
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

inline bool finite_and_bounded(const Eigen::VectorXd& v, double bound = 1e100)
{
    return v.allFinite() && (v.size() == 0 || v.cwiseAbs().maxCoeff() < bound);
}

} // namespace detail

/// BDF4 in time, BiCGSTAB for each implicit system, forcing taken at t^{m+1}.
/// Levels 0..3 come from the exact solution.
inline IntegrationResult bdf4_integrate(const DiffusionProblem& prob, const IntegratorConfig& cfg)
{
    cfg.validate();
    if (!prob.op) throw InputError("bdf4: operator missing");
    if (!prob.exact) throw InputError("bdf4: exact solution required for start-up");
    const std::size_t nsteps = cfg.steps();
    if (nsteps < 4) throw InputError("bdf4: need at least 4 steps");
    const double dt = cfg.dt;
    const auto dim = static_cast<Eigen::Index>(prob.op->dim);

    const CsrMatrix a = shifted(*prob.op, 25.0 / 12.0, -dt * prob.delta);
    auto apply = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(a * x); };

    // hist[0] = u^m, hist[1] = u^{m-1}, ...
    std::array<Eigen::VectorXd, 4> hist;
    for (int j = 0; j < 4; ++j) {
        hist[3 - j] = prob.exact(j * dt);
        if (hist[3 - j].size() != dim) throw InputError("bdf4: state length does not match operator");
    }

    IntegrationResult out;
    for (std::size_t m = 3; m < nsteps; ++m) {
        const auto start = std::chrono::steady_clock::now();
        const double t_next = static_cast<double>(m + 1) * dt;
        Eigen::VectorXd rhs = 4.0 * hist[0] - 3.0 * hist[1] + (4.0 / 3.0) * hist[2] - 0.25 * hist[3];
        if (prob.forcing) rhs += dt * prob.forcing(t_next);
        BicgstabResult sol;
        try {
            sol = bicgstab(apply, rhs, hist[0], cfg.linear_tol, cfg.max_linear_iters);
        } catch (const std::exception& e) {
            throw IntegrationError(m + 1, e.what());
        }
        if (!detail::finite_and_bounded(sol.x)) throw IntegrationError(m + 1, "state is not finite");
        for (int j = 3; j > 0; --j) hist[j] = std::move(hist[j - 1]);
        hist[0] = std::move(sol.x);
        out.trace.push(t_next, sol.iterations, sol.residual, detail::elapsed_ms(start));
    }
    out.u = hist[0];
    return out;
}

// ---------------------------------------------------------------------------
// SBDF2 for two coupled fields
// ---------------------------------------------------------------------------

struct FieldPair {
    Eigen::VectorXd u;
    Eigen::VectorXd v;
};

/// (t, u, v) -> (R_u, R_v), evaluated explicitly.
using Reaction = std::function<FieldPair(double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// u_t = delta_u L u + R_u(u, v),  v_t = delta_v L v + R_v(u, v)
struct ReactionDiffusionProblem {
    const CsrMatrix* op = nullptr;
    double delta_u = 1.0;
    double delta_v = 1.0;
    Reaction reaction; // empty: R = 0
    Eigen::VectorXd u0;
    Eigen::VectorXd v0;
};

struct PairResult {
    FieldPair state;
    StepTrace trace;
};

/// Called with (step, t, u, v) at step 0 and after every step.
using PairObserver = std::function<void(std::size_t, double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// SBDF2 with the two implicit matrices LU-factored once. The second level
/// comes from one semi-implicit Euler step.
inline PairResult sbdf2_integrate(const ReactionDiffusionProblem& prob, const IntegratorConfig& cfg,
                                  const PairObserver& observe = {})
{
    cfg.validate();
    if (!prob.op) throw InputError("sbdf2: operator missing");
    const auto dim = static_cast<Eigen::Index>(prob.op->dim);
    if (prob.u0.size() != dim || prob.v0.size() != dim) throw InputError("sbdf2: state length does not match operator");
    const double dt = cfg.dt;
    const std::size_t nsteps = cfg.steps();

    auto reaction = [&](double t, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
        if (prob.reaction) return prob.reaction(t, u, v);
        return FieldPair{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
    };

    const CsrMatrix euler_u = shifted(*prob.op, 1.0 / dt, -prob.delta_u);
    const CsrMatrix euler_v = shifted(*prob.op, 1.0 / dt, -prob.delta_v);
    const CsrMatrix bdf_u = shifted(*prob.op, 1.5 / dt, -prob.delta_u);
    const CsrMatrix bdf_v = shifted(*prob.op, 1.5 / dt, -prob.delta_v);
    std::unique_ptr<SparseLu> lu_u, lu_v;
    try {
        lu_u = std::make_unique<SparseLu>(bdf_u);
        lu_v = std::make_unique<SparseLu>(bdf_v);
    } catch (const std::exception& e) {
        throw IntegrationError(0, e.what());
    }

    auto rel_residual = [](const CsrMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
        const double bn = b.norm();
        const double rn = (b - a * x).norm();
        return bn == 0.0 ? rn : rn / bn;
    };

    PairResult out;
    FieldPair prev{prob.u0, prob.v0};
    if (observe) observe(0, 0.0, prev.u, prev.v);
    FieldPair r_prev = reaction(0.0, prev.u, prev.v);

    // start-up: one semi-implicit Euler step
    FieldPair cur;
    {
        const auto start = std::chrono::steady_clock::now();
        const Eigen::VectorXd bu = prev.u / dt + r_prev.u;
        const Eigen::VectorXd bv = prev.v / dt + r_prev.v;
        try {
            cur.u = SparseLu(euler_u).solve(bu);
            cur.v = SparseLu(euler_v).solve(bv);
        } catch (const std::exception& e) {
            throw IntegrationError(1, e.what());
        }
        if (!detail::finite_and_bounded(cur.u) || !detail::finite_and_bounded(cur.v)) {
            throw IntegrationError(1, "state is not finite");
        }
        const double res = std::max(rel_residual(euler_u, cur.u, bu), rel_residual(euler_v, cur.v, bv));
        out.trace.push(dt, 0, res, detail::elapsed_ms(start));
        if (observe) observe(1, dt, cur.u, cur.v);
    }

    for (std::size_t m = 1; m < nsteps; ++m) {
        const auto start = std::chrono::steady_clock::now();
        const double t = static_cast<double>(m) * dt;
        const FieldPair r_cur = reaction(t, cur.u, cur.v);
        const Eigen::VectorXd bu = (4.0 * cur.u - prev.u) / (2.0 * dt) + 2.0 * r_cur.u - r_prev.u;
        const Eigen::VectorXd bv = (4.0 * cur.v - prev.v) / (2.0 * dt) + 2.0 * r_cur.v - r_prev.v;
        FieldPair next{lu_u->solve(bu), lu_v->solve(bv)};
        if (!detail::finite_and_bounded(next.u) || !detail::finite_and_bounded(next.v)) {
            throw IntegrationError(m + 1, "state is not finite");
        }
        const double res = std::max(rel_residual(bdf_u, next.u, bu), rel_residual(bdf_v, next.v, bv));
        out.trace.push(t + dt, 0, res, detail::elapsed_ms(start));
        prev = std::move(cur);
        cur = std::move(next);
        r_prev = r_cur;
        if (observe) observe(m + 1, t + dt, cur.u, cur.v);
    }
    out.state = std::move(cur);
    return out;
}

/// max_i |u^m_i - u^{m-lag}_i| / (lag dt), fed one step at a time.
class SteadinessTracker {
public:
    explicit SteadinessTracker(double dt, std::size_t lag = 100) : dt_(dt), ring_(lag + 1)
    {
        if (lag == 0) throw std::invalid_argument("steadiness lag must be positive");
    }

    void push(std::size_t step, const Eigen::VectorXd& u)
    {
        const std::size_t lag = ring_.size() - 1;
        if (step >= lag && ring_[(step - lag) % ring_.size()].size() == u.size()) {
            value_ = (u - ring_[(step - lag) % ring_.size()]).cwiseAbs().maxCoeff() / (static_cast<double>(lag) * dt_);
            ready_ = true;
        }
        ring_[step % ring_.size()] = u;
    }

    bool ready() const noexcept { return ready_; }
    double value() const noexcept { return value_; }

private:
    double dt_;
    std::vector<Eigen::VectorXd> ring_;
    double value_ = 0.0;
    bool ready_ = false;
};

struct FieldStats {
    double max_abs = 0.0;
    double mean = 0.0;
    double stddev = 0.0; // population
    double l2 = 0.0;
};

inline FieldStats field_stats(const Eigen::VectorXd& u)
{
    FieldStats s;
    if (u.size() == 0) return s;
    s.max_abs = u.cwiseAbs().maxCoeff();
    s.mean = u.mean();
    s.stddev = std::sqrt((u.array() - s.mean).square().mean());
    s.l2 = u.norm();
    return s;
}

} // namespace rbffd
