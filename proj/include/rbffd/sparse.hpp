#pragma once

#include "rbffd/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace rbffd {

/// Square compressed-sparse-row matrix.
struct CsrMatrix {
    std::size_t dim = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::size_t> col_idx;
    std::vector<double> values;

    std::size_t nnz() const noexcept { return values.size(); }

    std::size_t row_nnz(std::size_t i) const { return row_ptr[i + 1] - row_ptr[i]; }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const
    {
        for (std::size_t i = 0; i < dim; ++i) {
            double acc = 0.0;
            for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) acc += values[p] * x[col_idx[p]];
            y[i] = acc;
        }
    }

    Eigen::VectorXd operator*(const Eigen::VectorXd& x) const
    {
        Eigen::VectorXd y(x.size());
        multiply({x.data(), static_cast<std::size_t>(x.size())}, {y.data(), static_cast<std::size_t>(y.size())});
        return y;
    }

    Eigen::MatrixXd to_dense() const
    {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
                d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_idx[p])) += values[p];
            }
        }
        return d;
    }

    Eigen::SparseMatrix<double> to_eigen() const
    {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(nnz());
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
                t.emplace_back(static_cast<int>(i), static_cast<int>(col_idx[p]), values[p]);
            }
        }
        Eigen::SparseMatrix<double> s(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        s.setFromTriplets(t.begin(), t.end());
        return s;
    }

    double norm_inf() const
    {
        double best = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += std::abs(values[p]);
            best = std::max(best, s);
        }
        return best;
    }

    /// Fraction of stored entries, nnz / dim^2.
    double density() const
    {
        return dim == 0 ? 0.0 : static_cast<double>(nnz()) / (static_cast<double>(dim) * static_cast<double>(dim));
    }
};

/// Builds a CSR matrix from per-row (column, value) lists; each row is sorted
/// by column, duplicate columns are summed.
inline CsrMatrix csr_from_rows(std::vector<std::vector<std::pair<std::size_t, double>>> rows)
{
    CsrMatrix m;
    m.dim = rows.size();
    m.row_ptr.assign(1, 0);
    for (auto& r : rows) {
        std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t p = 0; p < r.size(); ++p) {
            if (p > 0 && r[p].first == r[p - 1].first) {
                m.values.back() += r[p].second;
                continue;
            }
            m.col_idx.push_back(r[p].first);
            m.values.push_back(r[p].second);
        }
        m.row_ptr.push_back(m.values.size());
    }
    return m;
}

/// a I + b M
inline CsrMatrix shifted(const CsrMatrix& m, double a, double b)
{
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(m.dim);
    for (std::size_t i = 0; i < m.dim; ++i) {
        rows[i].emplace_back(i, a);
        for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) rows[i].emplace_back(m.col_idx[p], b * m.values[p]);
    }
    return csr_from_rows(std::move(rows));
}

/// Max |i - j| over stored entries.
inline std::size_t bandwidth(const CsrMatrix& m)
{
    std::size_t bw = 0;
    for (std::size_t i = 0; i < m.dim; ++i) {
        for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) {
            const std::size_t j = m.col_idx[p];
            bw = std::max(bw, i > j ? i - j : j - i);
        }
    }
    return bw;
}

/// A permutation stored as new_to_old: row i of the permuted matrix is row
/// perm[i] of the original.
using Permutation = std::vector<std::size_t>;

inline bool is_permutation(const Permutation& p)
{
    std::vector<char> seen(p.size(), 0);
    for (auto v : p) {
        if (v >= p.size() || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

inline Permutation invert(const Permutation& new_to_old)
{
    Permutation old_to_new(new_to_old.size());
    for (std::size_t i = 0; i < new_to_old.size(); ++i) old_to_new[new_to_old[i]] = i;
    return old_to_new;
}

/// P A P^T for a new_to_old permutation.
inline CsrMatrix permute(const CsrMatrix& m, const Permutation& new_to_old)
{
    const Permutation old_to_new = invert(new_to_old);
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(m.dim);
    for (std::size_t i = 0; i < m.dim; ++i) {
        const std::size_t src = new_to_old[i];
        for (std::size_t p = m.row_ptr[src]; p < m.row_ptr[src + 1]; ++p) {
            rows[i].emplace_back(old_to_new[m.col_idx[p]], m.values[p]);
        }
    }
    return csr_from_rows(std::move(rows));
}

template <typename Vec>
Vec permute_vector(const Vec& v, const Permutation& new_to_old)
{
    Vec out(v.size());
    for (std::size_t i = 0; i < new_to_old.size(); ++i) out[i] = v[new_to_old[i]];
    return out;
}

/// Reverse Cuthill-McKee ordering on the pattern of A + A^T.
///
/// Each connected component starts from a pseudo-peripheral node (repeated
/// BFS from a minimum-degree node until the eccentricity stops growing);
/// neighbours are queued by ascending degree, ties by index.
inline Permutation rcm_order(const CsrMatrix& m)
{
    const std::size_t n = m.dim;
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) {
            const std::size_t j = m.col_idx[p];
            if (i == j) continue;
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    auto degree = [&](std::size_t v) { return adj[v].size(); };

    // BFS from `root` over unvisited nodes; returns (last level, depth)
    auto bfs_last_level = [&](std::size_t root, const std::vector<char>& done) {
        std::vector<std::size_t> frontier{root}, last;
        std::vector<char> seen(n, 0);
        seen[root] = 1;
        std::size_t depth = 0;
        while (!frontier.empty()) {
            last = frontier;
            std::vector<std::size_t> next;
            for (auto v : frontier) {
                for (auto w : adj[v]) {
                    if (!seen[w] && !done[w]) {
                        seen[w] = 1;
                        next.push_back(w);
                    }
                }
            }
            if (!next.empty()) ++depth;
            frontier = std::move(next);
        }
        return std::pair{last, depth};
    };

    std::vector<char> done(n, 0);
    Permutation order;
    order.reserve(n);
    std::vector<std::size_t> by_degree(n);
    std::iota(by_degree.begin(), by_degree.end(), std::size_t{0});
    std::stable_sort(by_degree.begin(), by_degree.end(),
                     [&](std::size_t a, std::size_t b) { return degree(a) < degree(b); });

    for (std::size_t seed : by_degree) {
        if (done[seed]) continue;
        std::size_t root = seed;
        auto [last, depth] = bfs_last_level(root, done);
        for (int sweep = 0; sweep < 8; ++sweep) {
            const std::size_t cand = *std::min_element(last.begin(), last.end(), [&](std::size_t a, std::size_t b) {
                return degree(a) < degree(b) || (degree(a) == degree(b) && a < b);
            });
            auto [cand_last, cand_depth] = bfs_last_level(cand, done);
            if (cand_depth <= depth) break;
            root = cand;
            last = std::move(cand_last);
            depth = cand_depth;
        }

        std::queue<std::size_t> q;
        q.push(root);
        done[root] = 1;
        while (!q.empty()) {
            const std::size_t v = q.front();
            q.pop();
            order.push_back(v);
            std::vector<std::size_t> nb;
            for (auto w : adj[v]) {
                if (!done[w]) {
                    done[w] = 1;
                    nb.push_back(w);
                }
            }
            std::sort(nb.begin(), nb.end(), [&](std::size_t a, std::size_t b) {
                return degree(a) < degree(b) || (degree(a) == degree(b) && a < b);
            });
            for (auto w : nb) q.push(w);
        }
    }
    std::reverse(order.begin(), order.end());
    return order;
}

// ---------------------------------------------------------------------------
// Matrix Market (coordinate, real, general)
// ---------------------------------------------------------------------------

inline void write_matrix_market(const CsrMatrix& m, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.dim << ' ' << m.dim << ' ' << m.nnz() << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < m.dim; ++i) {
        for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) {
            out << i + 1 << ' ' << m.col_idx[p] + 1 << ' ' << m.values[p] << '\n';
        }
    }
}

inline CsrMatrix read_matrix_market(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("%%MatrixMarket matrix coordinate real general", 0) != 0) {
        throw InputError("unsupported Matrix Market header: " + line);
    }
    while (std::getline(in, line) && !line.empty() && line[0] == '%') {
    }
    std::istringstream hdr(line);
    std::size_t rows = 0, cols = 0, nnz = 0;
    if (!(hdr >> rows >> cols >> nnz) || rows != cols) throw InputError("bad Matrix Market size line");
    std::vector<std::vector<std::pair<std::size_t, double>>> r(rows);
    for (std::size_t e = 0; e < nnz; ++e) {
        std::size_t i = 0, j = 0;
        double v = 0.0;
        if (!(in >> i >> j >> v) || i == 0 || j == 0 || i > rows || j > cols) {
            throw InputError("bad Matrix Market entry " + std::to_string(e));
        }
        r[i - 1].emplace_back(j - 1, v);
    }
    return csr_from_rows(std::move(r));
}

} // namespace rbffd
