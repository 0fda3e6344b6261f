#pragma once

#include "rbffd/errors.hpp"
#include "rbffd/geometry.hpp"
#include "rbffd/rbf_core.hpp"
#include "rbffd/shape_param.hpp"
#include "rbffd/sparse.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace rbffd {

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// One shape parameter per stencil, tuned to a global target condition number.
struct PerStencilKappa {
    double kappa_target = 1e12;
    bool heuristic_seed = true;  // seed from the cubic heuristic, else from cold_seed
    double cold_seed = 1.0;
    HeuristicModel model = HeuristicModel::default_table();
    OptimizerConfig optimizer{}; // kappa_target here is overridden
};

/// The same shape parameter on every stencil.
struct FixedEpsilon {
    double epsilon = 1.0;
};

using EpsilonStrategy = std::variant<PerStencilKappa, FixedEpsilon>;

struct AssemblyOptions {
    KernelFamily family = KernelFamily::imq;
    unsigned threads = 0; // 0: hardware concurrency
};

struct Assembly {
    CsrMatrix op;
    EpsilonReport report;
    StencilSet stencils;
    FillStats fill;
};

namespace detail {

/// Runs body(k) for k in [0, count) over worker threads; the failure with the
/// lowest index is rethrown.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body)
{
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));

    std::mutex mtx;
    std::size_t failed_at = std::numeric_limits<std::size_t>::max();
    std::exception_ptr failure;
    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            try {
                body(k);
            } catch (...) {
                std::lock_guard lock(mtx);
                if (k < failed_at) {
                    failed_at = k;
                    failure = std::current_exception();
                }
                return;
            }
        }
    };
    if (threads <= 1) {
        run(0, count);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (count + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk;
            const std::size_t e = std::min(count, b + chunk);
            if (b < e) pool.emplace_back(run, b, e);
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace detail

/// Global RBF-FD surface Laplacian: row k holds the weights of stencil k.
inline Assembly assemble_laplacian(const NodeSet& nodes, std::size_t n, const EpsilonStrategy& strategy,
                                   const AssemblyOptions& opts = {})
{
    validate(nodes);
    Assembly out;
    out.stencils = build_stencils(nodes, n);
    const std::size_t count = nodes.size();
    if (n >= 2) {
        out.fill = stencil_min_spacing(nodes, out.stencils);
    } else {
        out.fill.h_min_per_stencil.assign(count, std::numeric_limits<double>::infinity());
    }
    out.report.resize(count);
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(count);

    detail::parallel_for(count, opts.threads, [&](std::size_t k) {
        try {
            const auto idx = out.stencils.row(k);
            EpsilonResult eps;
            std::optional<double> known_kappa;
            if (const auto* ps = std::get_if<PerStencilKappa>(&strategy)) {
                OptimizerConfig cfg = ps->optimizer;
                cfg.kappa_target = ps->kappa_target;
                double seed = ps->cold_seed;
                if (ps->heuristic_seed && n >= 2) {
                    // far outside its fitted range the cubic can overflow
                    const double h = heuristic_epsilon(out.fill.h_min_per_stencil[k], ps->kappa_target, ps->model);
                    if (std::isfinite(h) && h >= cfg.epsilon_floor) seed = h;
                }
                const auto pts = gather(nodes.points, idx);
                eps = optimize_epsilon(pts, opts.family, cfg, seed);
                known_kappa = eps.achieved_kappa;
            } else {
                eps.epsilon = std::get<FixedEpsilon>(strategy).epsilon;
            }
            const Kernel kernel(opts.family, eps.epsilon);
            const WeightRow w = laplacian_weights(nodes, idx, kernel, known_kappa);
            if (!known_kappa) {
                eps.achieved_kappa = condition_number_sym(interpolation_matrix(gather(nodes.points, idx), kernel));
            }
            out.report.set(k, eps);
            auto& row = rows[k];
            row.reserve(n);
            for (std::size_t j = 0; j < n; ++j) row.emplace_back(w.neighbor_indices[j], w.weights[j]);
        } catch (const StencilError&) {
            throw;
        } catch (const std::exception& e) {
            throw StencilError(k, e.what());
        }
    });

    out.op = csr_from_rows(std::move(rows));
    return out;
}

// ---------------------------------------------------------------------------
// Spectral diagnostics
// ---------------------------------------------------------------------------

enum class SpectralMode { dense_exact, arnoldi_estimate };

struct SpectralEstimate {
    double abscissa = 0.0;         // max Re(lambda)
    double radius = 0.0;           // max |lambda| (estimate in Arnoldi mode)
    std::complex<double> rightmost{};
    SpectralMode mode = SpectralMode::dense_exact;
};

struct ArnoldiOptions {
    int subspace = 120;
    int restarts = 5;
    double acceptance = 1e-8; // accept a Ritz pair when |L y - lambda y| <= acceptance * radius * |y|
};

inline constexpr std::size_t dense_spectrum_limit = 4000;

namespace detail {

struct RitzPair {
    std::complex<double> value;
    Eigen::VectorXcd vector;
};

/// One Arnoldi cycle of dimension m; returns all Ritz pairs of H_m.
inline std::vector<RitzPair> arnoldi_cycle(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                                           const Eigen::VectorXd& start, int m)
{
    const Eigen::Index n = start.size();
    m = static_cast<int>(std::min<Eigen::Index>(m, n));
    Eigen::MatrixXd v(n, m + 1);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
    v.col(0) = start.normalized();
    int dim = m;
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd w = apply(v.col(j));
        const double wnorm = w.norm();
        // modified Gram-Schmidt, twice
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i <= j; ++i) {
                const double c = v.col(i).dot(w);
                h(i, j) += c;
                w -= c * v.col(i);
            }
        }
        h(j + 1, j) = w.norm();
        if (h(j + 1, j) <= 1e-13 * std::max(wnorm, 1e-300)) {
            dim = j + 1; // invariant subspace: Ritz values are exact
            break;
        }
        v.col(j + 1) = w / h(j + 1, j);
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(h.topLeftCorner(dim, dim));
    if (es.info() != Eigen::Success) throw SolverError("Arnoldi: Hessenberg eigensolve failed; use dense mode");
    std::vector<RitzPair> out;
    const Eigen::MatrixXcd basis = v.leftCols(dim).cast<std::complex<double>>();
    for (int i = 0; i < dim; ++i) out.push_back({es.eigenvalues()(i), basis * es.eigenvectors().col(i)});
    return out;
}

inline double true_residual(const CsrMatrix& op, const RitzPair& p, std::complex<double> lambda)
{
    const Eigen::VectorXd re = p.vector.real();
    const Eigen::VectorXd im = p.vector.imag();
    const Eigen::VectorXcd ly = (op * re).cast<std::complex<double>>() +
                                std::complex<double>(0, 1) * (op * im).cast<std::complex<double>>();
    return (ly - lambda * p.vector).norm() / p.vector.norm();
}

inline Eigen::VectorXd restart_vector(const RitzPair& p)
{
    Eigen::VectorXd v = p.vector.real() + p.vector.imag();
    if (v.norm() == 0.0) v = p.vector.real();
    return v;
}

} // namespace detail

/// Rightmost eigenvalue of the operator.
///
/// dense_exact: full nonsymmetric eigendecomposition (N <= 4000).
/// arnoldi_estimate: restarted Arnoldi on L (which finds the spectral radius
/// and large outliers) followed by restarted shift-invert Arnoldi just right
/// of that estimate (which resolves eigenvalues near the imaginary axis).
/// Only Ritz pairs with a small true residual are counted.
inline SpectralEstimate spectral_abscissa(const CsrMatrix& op, SpectralMode mode, const ArnoldiOptions& opt = {})
{
    SpectralEstimate est;
    est.mode = mode;
    if (mode == SpectralMode::dense_exact) {
        if (op.dim > dense_spectrum_limit) {
            throw ResourceError("dense spectrum limited to N <= " + std::to_string(dense_spectrum_limit));
        }
        Eigen::EigenSolver<Eigen::MatrixXd> es(op.to_dense(), false);
        if (es.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
        const auto& ev = es.eigenvalues();
        Eigen::Index best = 0;
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
            est.radius = std::max(est.radius, std::abs(ev(i)));
            if (ev(i).real() > ev(best).real()) best = i;
        }
        est.rightmost = ev(best);
        est.abscissa = ev(best).real();
        return est;
    }

    const auto n = static_cast<Eigen::Index>(op.dim);
    // deterministic, non-degenerate start vector
    Eigen::VectorXd start(n);
    for (Eigen::Index i = 0; i < n; ++i) start(i) = 1.0 + 0.5 * std::sin(1.0 + 0.7 * static_cast<double>(i));

    std::vector<std::complex<double>> accepted;
    auto plain = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(op * x); };

    // pass 1: plain Arnoldi
    double radius_any = 0.0;
    std::vector<detail::RitzPair> pairs;
    Eigen::VectorXd v0 = start;
    for (int r = 0; r <= opt.restarts; ++r) {
        pairs = detail::arnoldi_cycle(plain, v0, opt.subspace);
        const auto right = std::max_element(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
            return a.value.real() < b.value.real();
        });
        v0 = detail::restart_vector(*right);
    }
    for (const auto& p : pairs) radius_any = std::max(radius_any, std::abs(p.value));
    if (radius_any == 0.0) {
        est.radius = 0.0;
        est.abscissa = 0.0;
        return est;
    }
    for (const auto& p : pairs) {
        if (detail::true_residual(op, p, p.value) <= opt.acceptance * radius_any) {
            accepted.push_back(p.value);
            est.radius = std::max(est.radius, std::abs(p.value));
        }
    }
    if (est.radius == 0.0) est.radius = radius_any;

    // pass 2: shift-invert about sigma, slightly right of everything seen so far
    double right_plain = 0.0;
    for (const auto& z : accepted) right_plain = std::max(right_plain, z.real());
    const double sigma = right_plain + 1e-6 * est.radius;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(shifted(op, -sigma, 1.0).to_eigen());
    if (lu.info() == Eigen::Success) {
        auto inv = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(lu.solve(x)); };
        v0 = start;
        for (int r = 0; r <= opt.restarts; ++r) {
            pairs = detail::arnoldi_cycle(inv, v0, std::min(opt.subspace, 60));
            const auto big = std::max_element(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
                return std::abs(a.value) < std::abs(b.value);
            });
            v0 = detail::restart_vector(*big);
        }
        for (const auto& p : pairs) {
            if (p.value == std::complex<double>(0.0)) continue;
            const std::complex<double> lambda = sigma + 1.0 / p.value;
            if (detail::true_residual(op, p, lambda) <= opt.acceptance * est.radius) accepted.push_back(lambda);
        }
    }

    if (accepted.empty()) throw SolverError("Arnoldi estimate did not converge; use dense_exact mode");
    const auto best = std::max_element(accepted.begin(), accepted.end(),
                                       [](const auto& a, const auto& b) { return a.real() < b.real(); });
    est.rightmost = *best;
    est.abscissa = best->real();
    return est;
}

inline SpectralMode default_spectral_mode(std::size_t dim)
{
    return dim <= dense_spectrum_limit ? SpectralMode::dense_exact : SpectralMode::arnoldi_estimate;
}

struct OperatorDiagnostics {
    double density = 0.0;
    std::size_t bandwidth_before = 0;
    std::size_t bandwidth_after = 0;
    SpectralEstimate spectrum;
    double max_row_sum = 0.0; // max_i |sum_j L_ij|, relative to |L|_inf

    /// Left-half-plane check: abscissa <= tol * spectral radius.
    bool stable(double tol = 1e-8) const { return spectrum.abscissa <= tol * spectrum.radius; }
};

inline OperatorDiagnostics diagnose_operator(const CsrMatrix& op, std::optional<SpectralMode> mode = std::nullopt)
{
    OperatorDiagnostics d;
    d.density = op.density();
    d.bandwidth_before = bandwidth(op);
    d.bandwidth_after = bandwidth(permute(op, rcm_order(op)));
    d.spectrum = spectral_abscissa(op, mode.value_or(default_spectral_mode(op.dim)));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(op.dim));
    d.max_row_sum = (op * ones).cwiseAbs().maxCoeff() / op.norm_inf();
    return d;
}

} // namespace rbffd
