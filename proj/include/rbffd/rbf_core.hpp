#pragma once

#include "rbffd/errors.hpp"
#include "rbffd/geometry.hpp"
#include "rbffd/kernel.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace rbffd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tangent-plane projector P = I - n n^T at a point with unit normal n.
inline Eigen::Matrix3d projection_matrix(const Vec3& normal)
{
    if (std::abs(normal.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument("projection_matrix: normal is not unit length");
    }
    return Eigen::Matrix3d::Identity() - normal * normal.transpose();
}

/// (n+1)x(n+1) interpolation matrix with constant augmentation:
/// A(i,j) = phi(|x_i - x_j|), last row/column of ones, zero corner.
inline Matrix interpolation_matrix(std::span<const Vec3> pts, const Kernel& kernel)
{
    const auto n = static_cast<Eigen::Index>(pts.size());
    Matrix a(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = kernel_eval(kernel, 0.0);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = (pts[i] - pts[j]).norm();
            if (r == 0.0) {
                throw InputError("interpolation_matrix: duplicate points " + std::to_string(i) +
                                 " and " + std::to_string(j));
            }
            a(i, j) = a(j, i) = kernel_eval(kernel, r);
        }
        a(i, n) = a(n, i) = 1.0;
    }
    a(n, n) = 0.0;
    return a;
}

/// 2-norm condition number of a symmetric matrix, max|lambda| / min|lambda|.
/// Returns +infinity when the matrix is exactly singular.
inline double condition_number_sym(const Matrix& a)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    const Vector ev = es.eigenvalues().cwiseAbs();
    const double lo = ev.minCoeff();
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    return ev.maxCoeff() / lo;
}

/// Condition numbers above this are treated as numerically singular.
inline constexpr double singular_condition_threshold = 1.0 / std::numeric_limits<double>::epsilon();

/// Local matrices for one stencil.
struct LocalSystem {
    Matrix a;                 // (n+1)x(n+1)
    std::array<Matrix, 3> b;  // n x (n+1), projected-gradient right-hand sides
    std::array<Matrix, 3> g;  // n x n differentiation matrices
    Matrix laplacian;         // n x n
    double condition_number = 0.0;
};

/// RBF-FD weights for the surface Laplacian at a stencil centre.
struct WeightRow {
    std::size_t center_index = 0;
    std::vector<std::size_t> neighbor_indices;
    std::vector<double> weights;
};

/// B^c(i,j) = eta(r_ij) * p^c(x_i) . (x_i - x_j), last column zero.
inline std::array<Matrix, 3> projected_gradient_rhs(std::span<const Vec3> pts,
                                                    std::span<const Vec3> normals,
                                                    const Kernel& kernel)
{
    const auto n = static_cast<Eigen::Index>(pts.size());
    std::array<Matrix, 3> b;
    for (auto& m : b) m = Matrix::Zero(n, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Matrix3d p = projection_matrix(normals[i]);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue; // x_i - x_j = 0
            const Vec3 d = pts[i] - pts[j];
            const Vec3 pd = p * (kernel_eta(kernel, d.norm()) * d);
            for (int c = 0; c < 3; ++c) b[c](i, j) = pd[c];
        }
    }
    return b;
}

namespace detail {

inline void require_conditioning(double kappa)
{
    if (!(kappa <= singular_condition_threshold)) {
        throw SingularMatrixError("local interpolation matrix is numerically singular (condition number " +
                                      std::to_string(kappa) + ")",
                                  kappa);
    }
}

} // namespace detail

/// Surface differentiation matrices G^c = B^c A^{-1}, restricted to the first
/// n columns (data padded with a trailing zero). `known_condition` skips the
/// eigenvalue computation when the caller already has kappa(A).
inline LocalSystem surface_grad_matrices(std::span<const Vec3> pts, std::span<const Vec3> normals,
                                         const Kernel& kernel,
                                         std::optional<double> known_condition = std::nullopt)
{
    LocalSystem sys;
    const auto n = static_cast<Eigen::Index>(pts.size());
    sys.a = interpolation_matrix(pts, kernel);
    sys.condition_number = known_condition ? *known_condition : condition_number_sym(sys.a);
    detail::require_conditioning(sys.condition_number);
    sys.b = projected_gradient_rhs(pts, normals, kernel);

    // A is symmetric, so (B A^{-1})^T = A^{-1} B^T: one factorisation, three solves
    const Eigen::PartialPivLU<Matrix> lu(sys.a);
    for (int c = 0; c < 3; ++c) {
        const Matrix x = lu.solve(sys.b[c].transpose()); // (n+1) x n
        sys.g[c] = x.topRows(n).transpose();
    }
    return sys;
}

/// Local Laplacian L = Gx Gx + Gy Gy + Gz Gz; the weight row is its first row.
inline LocalSystem local_laplacian(std::span<const Vec3> pts, std::span<const Vec3> normals,
                                   const Kernel& kernel,
                                   std::optional<double> known_condition = std::nullopt)
{
    LocalSystem sys = surface_grad_matrices(pts, normals, kernel, known_condition);
    sys.laplacian = sys.g[0] * sys.g[0] + sys.g[1] * sys.g[1] + sys.g[2] * sys.g[2];
    return sys;
}

/// Weight row of the surface Laplacian for the stencil `idx` (idx[0] is the centre).
inline WeightRow laplacian_weights(const NodeSet& nodes, std::span<const std::size_t> idx,
                                   const Kernel& kernel,
                                   std::optional<double> known_condition = std::nullopt)
{
    const auto pts = gather(nodes.points, idx);
    const auto nrm = gather(nodes.normals, idx);
    const LocalSystem sys = surface_grad_matrices(pts, nrm, kernel, known_condition);
    // first row of sum_c G^c G^c without forming the full product
    Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(idx.size()));
    for (int c = 0; c < 3; ++c) w += sys.g[c].row(0) * sys.g[c];

    WeightRow row;
    row.center_index = idx[0];
    row.neighbor_indices.assign(idx.begin(), idx.end());
    row.weights.assign(w.data(), w.data() + w.size());
    return row;
}

} // namespace rbffd
