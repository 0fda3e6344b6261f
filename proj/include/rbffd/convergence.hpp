#pragma once

#include "rbffd/errors.hpp"
#include "rbffd/geometry.hpp"
#include "rbffd/operator.hpp"
#include "rbffd/problems.hpp"
#include "rbffd/shape_param.hpp"
#include "rbffd/timestepping.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace rbffd {

struct ErrorNorms {
    double l2 = 0.0;
    double linf = 0.0;
};

/// Relative discrete l2 and l-infinity errors.
inline ErrorNorms relative_errors(const Eigen::VectorXd& approx, const Eigen::VectorXd& exact)
{
    if (approx.size() != exact.size()) throw std::invalid_argument("relative_errors: size mismatch");
    const Eigen::VectorXd d = approx - exact;
    return {d.norm() / exact.norm(), d.cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff()};
}

/// log(e_i / e_{i+1}) / log(sqrt(N_{i+1}) / sqrt(N_i))
inline double observed_order(double e_coarse, double e_fine, std::size_t n_coarse, std::size_t n_fine)
{
    return std::log(e_coarse / e_fine) / std::log(std::sqrt(double(n_fine)) / std::sqrt(double(n_coarse)));
}

struct ConvergenceRow {
    std::size_t n_nodes = 0;
    double l2 = std::numeric_limits<double>::quiet_NaN();
    double linf = std::numeric_limits<double>::quiet_NaN();
    double order_l2 = std::numeric_limits<double>::quiet_NaN();
    double order_linf = std::numeric_limits<double>::quiet_NaN();
    double kappa_target = 0.0;
    double mean_epsilon = 0.0;
    double median_iterations = 0.0;
    std::string failure; // empty on success

    double sqrt_n() const { return std::sqrt(double(n_nodes)); }
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;

    /// Sorts by N and fills the observed orders between consecutive rows.
    void finalize()
    {
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.n_nodes < b.n_nodes; });
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& c = rows[i - 1];
            auto& f = rows[i];
            f.order_l2 = observed_order(c.l2, f.l2, c.n_nodes, f.n_nodes);
            f.order_linf = observed_order(c.linf, f.linf, c.n_nodes, f.n_nodes);
        }
    }

    void save_csv(const std::filesystem::path& path) const
    {
        std::ofstream out(path);
        if (!out) throw InputError("cannot write " + path.string());
        write_csv(out);
    }

    void write_csv(std::ostream& out) const
    {
        out << "N,sqrtN,l2,linf,order_l2,order_linf\n";
        out.precision(10);
        for (const auto& r : rows) {
            out << r.n_nodes << ',' << r.sqrt_n() << ',' << r.l2 << ',' << r.linf << ',';
            if (std::isnan(r.order_l2)) {
                out << ",\n";
            } else {
                out << r.order_l2 << ',' << r.order_linf << '\n';
            }
        }
    }
};

/// How the shape parameters change across resolutions.
enum class KappaSchedule {
    growing, // per-stencil at kappa_start on the coarsest set, then hold the mean eps fixed
    fixed    // per-stencil at kappa_fixed on every set
};

struct StudyConfig {
    ProblemKind problem = ProblemKind::sphere_heat;
    std::vector<unsigned> resolutions; // icosahedral levels (sphere) or m (torus)
    std::size_t stencil = 17;
    KappaSchedule schedule = KappaSchedule::growing;
    double kappa_start = 1e5;
    double kappa_cap = 1e14;
    double kappa_fixed = 1e14;
    KernelFamily family = KernelFamily::imq;
    double dt = 1e-4;
    double t_final = 0.0; // 0: problem default
    std::uint64_t seed = default_problem_seed;
    double linear_tol = 1e-12;
    int max_linear_iters = 200;
};

inline NodeSet study_nodes(ProblemKind kind, unsigned resolution)
{
    return kind == ProblemKind::forced_torus ? torus_staggered_nodes(resolution) : icosahedral_sphere_nodes(resolution);
}

using StudyProgress = std::function<void(const ConvergenceRow&)>;

/// Assemble, integrate with BDF4, and measure errors at each resolution.
/// A failing resolution is recorded in its row and the study continues.
inline ConvergenceTable run_convergence_study(const StudyConfig& cfg, const StudyProgress& progress = {})
{
    if (cfg.resolutions.empty()) throw InputError("convergence study needs at least one resolution");
    std::vector<unsigned> res = cfg.resolutions;
    std::sort(res.begin(), res.end());

    ConvergenceTable table;
    double eps_bar = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        const NodeSet nodes = study_nodes(cfg.problem, res[i]);
        ConvergenceRow row;
        row.n_nodes = nodes.size();
        try {
            double kappa = cfg.kappa_fixed;
            if (cfg.schedule == KappaSchedule::growing) {
                if (i == 0 || eps_bar <= 0.0) {
                    kappa = cfg.kappa_start;
                } else {
                    const StencilSet st = build_stencils(nodes, cfg.stencil);
                    kappa = std::min(cfg.kappa_cap,
                                     std::exp(mean_log_kappa_for_epsilon(nodes, st, cfg.family, eps_bar)));
                }
            }
            row.kappa_target = kappa;
            PerStencilKappa strategy;
            strategy.kappa_target = kappa;
            AssemblyOptions opts;
            opts.family = cfg.family;
            const Assembly asmb = assemble_laplacian(nodes, cfg.stencil, strategy, opts);
            row.mean_epsilon = asmb.report.mean_epsilon();
            if (i == 0) eps_bar = row.mean_epsilon;

            const NodalProblem prob = make_nodal_problem(cfg.problem, nodes, cfg.seed);
            DiffusionProblem dp;
            dp.op = &asmb.op;
            dp.delta = prob.delta;
            dp.exact = prob.exact;
            dp.forcing = prob.forcing;
            IntegratorConfig ic;
            ic.dt = cfg.dt;
            ic.t_final = cfg.t_final > 0.0 ? cfg.t_final : default_final_time(cfg.problem);
            ic.linear_tol = cfg.linear_tol;
            ic.max_linear_iters = cfg.max_linear_iters;
            const IntegrationResult run = bdf4_integrate(dp, ic);
            const double t_end = static_cast<double>(ic.steps()) * ic.dt;
            const ErrorNorms e = relative_errors(run.u, prob.exact(t_end));
            row.l2 = e.l2;
            row.linf = e.linf;
            row.median_iterations = run.trace.median_iterations();
        } catch (const std::exception& e) {
            row.failure = e.what();
        }
        if (progress) progress(row);
        table.rows.push_back(std::move(row));
    }
    table.finalize();
    return table;
}

} // namespace rbffd
