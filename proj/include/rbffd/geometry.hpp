#pragma once

#include "rbffd/errors.hpp"
#include "rbffd/kdtree.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace rbffd {

using Vec3 = Eigen::Vector3d;

/// Surface sample points with unit outward normals.
struct NodeSet {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::string surface_label;

    std::size_t size() const noexcept { return points.size(); }
};

/// Throws InputError unless sizes match, N >= 1, normals are unit length
/// (within 1e-12) and all points are pairwise distinct.
inline void validate(const NodeSet& nodes)
{
    if (nodes.points.empty()) throw InputError("node set is empty");
    if (nodes.points.size() != nodes.normals.size()) {
        throw InputError("node set has " + std::to_string(nodes.points.size()) + " points but " +
                         std::to_string(nodes.normals.size()) + " normals");
    }
    for (std::size_t i = 0; i < nodes.normals.size(); ++i) {
        if (std::abs(nodes.normals[i].norm() - 1.0) > 1e-12) {
            throw InputError("normal " + std::to_string(i) + " is not unit length");
        }
    }
    std::vector<std::size_t> order(nodes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key = [&](std::size_t i) {
        const Vec3& p = nodes.points[i];
        return std::array<double, 3>{p.x(), p.y(), p.z()};
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (key(order[i]) == key(order[i - 1])) {
            const auto [a, b] = std::minmax(order[i - 1], order[i]);
            throw InputError("duplicate points at indices " + std::to_string(a) + " and " +
                             std::to_string(b));
        }
    }
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Icosahedral (geodesic) nodes on the unit sphere: the 12 icosahedron
/// vertices refined `level` times by edge-midpoint subdivision with
/// reprojection. N = 10 * 4^level + 2. Normals equal positions.
inline NodeSet icosahedral_sphere_nodes(unsigned level)
{
    if (level > 7) {
        throw ResourceError("icosahedral level " + std::to_string(level) + " exceeds the maximum of 7");
    }
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    for (auto& v : verts) v.normalize();
    std::vector<std::array<std::uint32_t, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };

    for (unsigned l = 0; l < level; ++l) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
        auto mid = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            verts.push_back((verts[a] + verts[b]).normalized());
            const auto id = static_cast<std::uint32_t>(verts.size() - 1);
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<std::array<std::uint32_t, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const auto ab = mid(f[0], f[1]);
            const auto bc = mid(f[1], f[2]);
            const auto ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    NodeSet out;
    out.surface_label = "sphere-icos-" + std::to_string(level);
    out.points = verts;
    out.normals = verts;
    return out;
}

/// Map from intrinsic torus angles to the torus (1 - sqrt(x^2+y^2))^2 + z^2 = 1/9.
inline Vec3 torus_point(double phi, double lambda)
{
    const double rho = 1.0 + std::cos(phi) / 3.0;
    return {rho * std::cos(lambda), rho * std::sin(lambda), std::sin(phi) / 3.0};
}

/// Unit outward normal of the torus from the gradient of its implicit form.
inline Vec3 torus_normal(const Vec3& p)
{
    const double rho = std::hypot(p.x(), p.y());
    const double g = -2.0 * (1.0 - rho) / rho;
    return Vec3(g * p.x(), g * p.y(), 2.0 * p.z()).normalized();
}

/// Staggered torus nodes: an m x 3m grid of angles on [-pi,pi)^2 together with
/// the same grid offset by (pi/m, pi/(3m)). N = 6 m^2.
inline NodeSet torus_staggered_nodes(unsigned m)
{
    if (m < 2) throw InputError("torus grid parameter m must be at least 2");
    constexpr double pi = std::numbers::pi;
    const unsigned m_lambda = 3 * m;
    const double dphi = 2.0 * pi / m;
    const double dlambda = 2.0 * pi / m_lambda;

    NodeSet out;
    out.surface_label = "torus-m" + std::to_string(m);
    out.points.reserve(6u * m * m);
    for (int pass = 0; pass < 2; ++pass) {
        const double phi0 = -pi + (pass == 1 ? pi / m : 0.0);
        const double lambda0 = -pi + (pass == 1 ? pi / m_lambda : 0.0);
        for (unsigned i = 0; i < m; ++i) {
            for (unsigned j = 0; j < m_lambda; ++j) {
                out.points.push_back(torus_point(phi0 + i * dphi, lambda0 + j * dlambda));
            }
        }
    }
    out.normals.reserve(out.points.size());
    for (const auto& p : out.points) out.normals.push_back(torus_normal(p));
    return out;
}

/// Biconcave red-blood-cell profile constants (unit maximal radius).
struct RbcProfile {
    double c0 = 0.207161;
    double c1 = 2.002558;
    double c2 = -1.122762;
};

/// Maps unit-sphere nodes onto the biconcave red-blood-cell surface
/// (x, y, z) -> (x, y, sign(z)/2 * sqrt(1 - rho^2) * (c0 + c1 rho^2 + c2 rho^4)).
/// Normals come from the tangent cross product of the spherical parametrisation.
inline NodeSet map_sphere_to_rbc(const NodeSet& sphere, const RbcProfile& prof = {})
{
    NodeSet out;
    out.surface_label = "rbc";
    out.points.reserve(sphere.size());
    out.normals.reserve(sphere.size());
    for (std::size_t i = 0; i < sphere.size(); ++i) {
        const Vec3& p = sphere.points[i];
        if (std::abs(p.norm() - 1.0) > 1e-10) {
            throw InputError("node " + std::to_string(i) + " is not on the unit sphere");
        }
        const double s = p.x() * p.x() + p.y() * p.y();
        const double q = prof.c0 + prof.c1 * s + prof.c2 * s * s;
        const double dq = prof.c1 + 2.0 * prof.c2 * s;
        // z = cos(theta) on the sphere, so sign(z) sqrt(1 - rho^2) is just z
        out.points.emplace_back(p.x(), p.y(), 0.5 * p.z() * q);
        const double radial = 0.5 * (q - 2.0 * p.z() * p.z() * dq);
        out.normals.push_back(Vec3(radial * p.x(), radial * p.y(), p.z()).normalized());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Point-cloud I/O
// ---------------------------------------------------------------------------

enum class CloudFormat { csv, ply };

namespace detail {

inline std::string format_double(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline Vec3 checked_normal(const Vec3& n, std::size_t record)
{
    const double len = n.norm();
    if (!std::isfinite(len) || len == 0.0) {
        throw InputError("record " + std::to_string(record) + ": missing or zero normal");
    }
    return n / len;
}

inline std::vector<double> parse_numbers(const std::string& line, char sep, std::size_t record)
{
    std::vector<double> vals;
    std::string field;
    std::istringstream is(line);
    auto push = [&](const std::string& f) {
        char* end = nullptr;
        const double v = std::strtod(f.c_str(), &end);
        if (end == f.c_str()) {
            throw InputError("record " + std::to_string(record) + ": cannot parse '" + f + "'");
        }
        vals.push_back(v);
    };
    if (sep == ',') {
        while (std::getline(is, field, ',')) push(field);
    } else {
        while (is >> field) push(field);
    }
    return vals;
}

inline NodeSet read_csv(std::istream& in)
{
    NodeSet out;
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty CSV file");
    std::size_t record = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto v = parse_numbers(line, ',', record);
        if (v.size() < 6) {
            throw InputError("record " + std::to_string(record) + ": expected x,y,z,nx,ny,nz");
        }
        out.points.emplace_back(v[0], v[1], v[2]);
        out.normals.push_back(checked_normal(Vec3(v[3], v[4], v[5]), record));
        ++record;
    }
    return out;
}

inline NodeSet read_ply(std::istream& in)
{
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw InputError("not a PLY file");
    std::size_t vertex_count = 0;
    bool in_vertex = false;
    std::vector<std::string> props;
    while (std::getline(in, line)) {
        std::istringstream is(line);
        std::string tok;
        is >> tok;
        if (tok == "format") {
            std::string fmt;
            is >> fmt;
            if (fmt != "ascii") throw InputError("only ASCII PLY is supported");
        } else if (tok == "element") {
            std::string name;
            std::size_t count = 0;
            is >> name >> count;
            in_vertex = name == "vertex";
            if (in_vertex) vertex_count = count;
        } else if (tok == "property" && in_vertex) {
            std::string type, name;
            is >> type >> name;
            props.push_back(name);
        } else if (tok == "end_header") {
            break;
        }
    }
    auto col = [&](const std::string& name) -> std::size_t {
        auto it = std::find(props.begin(), props.end(), name);
        if (it == props.end()) throw InputError("PLY vertex property '" + name + "' missing");
        return static_cast<std::size_t>(it - props.begin());
    };
    const std::array<std::size_t, 6> c = {col("x"), col("y"), col("z"), col("nx"), col("ny"), col("nz")};

    NodeSet out;
    for (std::size_t r = 0; r < vertex_count; ++r) {
        if (!std::getline(in, line)) throw InputError("PLY ends before all vertices were read");
        const auto v = parse_numbers(line, ' ', r);
        if (v.size() < props.size()) throw InputError("record " + std::to_string(r) + ": too few values");
        out.points.emplace_back(v[c[0]], v[c[1]], v[c[2]]);
        out.normals.push_back(checked_normal(Vec3(v[c[3]], v[c[4]], v[c[5]]), r));
    }
    return out;
}

} // namespace detail

/// Loads positions and normals; normals are rescaled to unit length.
inline NodeSet load_point_cloud(const std::filesystem::path& path, CloudFormat format)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    NodeSet out = format == CloudFormat::csv ? detail::read_csv(in) : detail::read_ply(in);
    out.surface_label = path.stem().string();
    validate(out);
    return out;
}

inline CloudFormat cloud_format_from_path(const std::filesystem::path& path)
{
    return path.extension() == ".ply" ? CloudFormat::ply : CloudFormat::csv;
}

inline void save_point_cloud(const NodeSet& nodes, const std::filesystem::path& path, CloudFormat format)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    auto row = [&](std::size_t i, const char* sep) {
        const Vec3& p = nodes.points[i];
        const Vec3& n = nodes.normals[i];
        out << detail::format_double(p.x()) << sep << detail::format_double(p.y()) << sep
            << detail::format_double(p.z()) << sep << detail::format_double(n.x()) << sep
            << detail::format_double(n.y()) << sep << detail::format_double(n.z()) << '\n';
    };
    if (format == CloudFormat::csv) {
        out << "x,y,z,nx,ny,nz\n";
        for (std::size_t i = 0; i < nodes.size(); ++i) row(i, ",");
    } else {
        out << "ply\nformat ascii 1.0\nelement vertex " << nodes.size() << '\n';
        for (const char* p : {"x", "y", "z", "nx", "ny", "nz"}) out << "property double " << p << '\n';
        out << "end_header\n";
        for (std::size_t i = 0; i < nodes.size(); ++i) row(i, " ");
    }
}

// ---------------------------------------------------------------------------
// Stencils
// ---------------------------------------------------------------------------

/// N rows of n node indices; row k starts with k followed by its n-1 nearest
/// neighbours in increasing distance.
class StencilSet {
public:
    StencilSet() = default;
    StencilSet(std::size_t n, std::vector<std::size_t> indices)
        : n_(n), indices_(std::move(indices))
    {
    }

    std::size_t stencil_size() const noexcept { return n_; }
    std::size_t count() const noexcept { return n_ == 0 ? 0 : indices_.size() / n_; }
    std::span<const std::size_t> row(std::size_t k) const
    {
        return {indices_.data() + k * n_, n_};
    }

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> indices_;
};

inline StencilSet build_stencils(const NodeSet& nodes, std::size_t n)
{
    if (n == 0) throw InputError("stencil size must be positive");
    if (n > nodes.size()) {
        throw InputError("stencil size " + std::to_string(n) + " exceeds node count " +
                         std::to_string(nodes.size()));
    }
    const KdTree tree(nodes.points);
    std::vector<std::size_t> idx;
    idx.reserve(nodes.size() * n);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        auto nn = tree.knn(nodes.points[k], n);
        // the centre is its own nearest neighbour (distance 0, distinct points)
        auto self = std::find(nn.begin(), nn.end(), k);
        if (self == nn.end()) {
            nn.back() = k;
            self = nn.end() - 1;
        }
        std::rotate(nn.begin(), self, self + 1);
        idx.insert(idx.end(), nn.begin(), nn.end());
    }
    return StencilSet(n, std::move(idx));
}

/// Minimum pairwise spacing within each stencil.
struct FillStats {
    std::vector<double> h_min_per_stencil;
    double global_min_spacing = 0.0;
};

inline double min_pairwise_distance(std::span<const Vec3> pts)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, (pts[i] - pts[j]).norm());
    }
    return best;
}

inline std::vector<Vec3> gather(std::span<const Vec3> all, std::span<const std::size_t> idx)
{
    std::vector<Vec3> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(all[i]);
    return out;
}

inline FillStats stencil_min_spacing(const NodeSet& nodes, const StencilSet& stencils)
{
    if (stencils.stencil_size() < 2) throw InputError("stencil of size 1 has no point pairs");
    FillStats out;
    out.h_min_per_stencil.reserve(stencils.count());
    out.global_min_spacing = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < stencils.count(); ++k) {
        const auto pts = gather(nodes.points, stencils.row(k));
        const double h = min_pairwise_distance(pts);
        out.h_min_per_stencil.push_back(h);
        out.global_min_spacing = std::min(out.global_min_spacing, h);
    }
    return out;
}

} // namespace rbffd
