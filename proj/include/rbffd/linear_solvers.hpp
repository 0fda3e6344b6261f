#pragma once

#include "rbffd/errors.hpp"
#include "rbffd/sparse.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>

namespace rbffd {

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct BicgstabResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double residual = 0.0; // |b - A x| / |b|
};

/// Unpreconditioned BiCGSTAB. Converged when |b - A x| <= tol |b|; the
/// half-step is tested too, so A = I takes a single iteration.
inline BicgstabResult bicgstab(const LinearOperator& apply, const Eigen::VectorXd& b, const Eigen::VectorXd& x0,
                               double tol = 1e-12, int maxit = 200)
{
    if (x0.size() != b.size()) throw std::invalid_argument("bicgstab: x0 and b differ in length");
    if (!(tol > 0.0)) throw std::invalid_argument("bicgstab: tol must be positive");
    BicgstabResult res;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.x = Eigen::VectorXd::Zero(b.size());
        return res;
    }
    res.x = x0;
    Eigen::VectorXd r = b - apply(res.x);
    res.residual = r.norm() / bnorm;
    if (res.residual <= tol) return res;

    const double tiny = 1e-300;
    Eigen::VectorXd r_hat = r;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd v = p;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    int restarts = 0;

    while (res.iterations < maxit) {
        ++res.iterations;
        const double rho_new = r_hat.dot(r);
        if (std::abs(rho_new) < tiny || std::abs(rho_new) < 1e-30 * r_hat.norm() * r.norm()) {
            throw SolverError("bicgstab breakdown (rho ~ 0) at iteration " + std::to_string(res.iterations),
                              r.norm() / bnorm);
        }
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p = r + beta * (p - omega * v);
        v = apply(p);
        const double denom = r_hat.dot(v);
        if (std::abs(denom) < tiny) {
            throw SolverError("bicgstab breakdown (r_hat . v ~ 0)", r.norm() / bnorm);
        }
        alpha = rho / denom;
        Eigen::VectorXd s = r - alpha * v;

        auto confirm = [&](const Eigen::VectorXd& x_trial) {
            // recurrence residuals drift; accept only on the true residual
            const Eigen::VectorXd r_true = b - apply(x_trial);
            res.residual = r_true.norm() / bnorm;
            if (res.residual <= tol) {
                res.x = x_trial;
                return true;
            }
            return false;
        };

        if (s.norm() <= tol * bnorm) {
            if (confirm(res.x + alpha * p)) return res;
        }
        const Eigen::VectorXd t = apply(s);
        const double tt = t.squaredNorm();
        if (tt < tiny) throw SolverError("bicgstab breakdown (|t| ~ 0)", s.norm() / bnorm);
        omega = t.dot(s) / tt;
        res.x += alpha * p + omega * s;
        r = s - omega * t;
        res.residual = r.norm() / bnorm;
        if (res.residual <= tol) {
            if (confirm(res.x)) return res;
            // restart from the true residual
            if (++restarts > 5) break;
            r = b - apply(res.x);
            r_hat = r;
            p.setZero();
            v.setZero();
            rho = alpha = omega = 1.0;
            continue;
        }
        if (std::abs(omega) < tiny) throw SolverError("bicgstab breakdown (omega ~ 0)", res.residual);
    }
    throw SolverError("bicgstab did not converge in " + std::to_string(maxit) +
                          " iterations (relative residual " + std::to_string(res.residual) + ")",
                      res.residual);
}

inline BicgstabResult bicgstab(const CsrMatrix& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x0,
                               double tol = 1e-12, int maxit = 200)
{
    return bicgstab([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(a * x); }, b, x0, tol, maxit);
}

/// Sparse LU factors, computed once and reused for many right-hand sides.
class SparseLu {
public:
    explicit SparseLu(const CsrMatrix& a) : dim_(a.dim), lu_(std::make_unique<Solver>())
    {
        const Eigen::SparseMatrix<double> m = a.to_eigen();
        lu_->analyzePattern(m);
        lu_->factorize(m);
        if (lu_->info() != Eigen::Success) {
            throw SingularMatrixError("sparse LU: matrix is singular (" + lu_->lastErrorMessage() + ")",
                                      std::numeric_limits<double>::infinity());
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const
    {
        if (static_cast<std::size_t>(b.size()) != dim_) throw std::invalid_argument("SparseLu::solve: size mismatch");
        Eigen::VectorXd x = lu_->solve(b);
        if (lu_->info() != Eigen::Success) throw SolverError("sparse LU solve failed");
        return x;
    }

    std::size_t dim() const noexcept { return dim_; }

private:
    using Solver = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;
    std::size_t dim_;
    std::unique_ptr<Solver> lu_; // Eigen's SparseLU is neither copyable nor movable
};

inline SparseLu sparse_lu_factor(const CsrMatrix& a) { return SparseLu(a); }

inline Eigen::VectorXd sparse_lu_solve(const SparseLu& f, const Eigen::VectorXd& b) { return f.solve(b); }

} // namespace rbffd
