#include "rbffd/geometry.hpp"
#include "rbffd/kdtree.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

using namespace rbffd;

namespace {

std::vector<std::size_t> brute_knn(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k)
{
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double da = (pts[a] - q).squaredNorm(), db = (pts[b] - q).squaredNorm();
        return da < db || (da == db && a < b);
    });
    idx.resize(k);
    return idx;
}

NodeSet flat_nodes(const std::vector<Vec3>& pts)
{
    NodeSet s;
    s.points = pts;
    s.normals.assign(pts.size(), Vec3(0, 0, 1));
    return s;
}

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("rbffd_test_" + name);
}

} // namespace

TEST(Icosahedral, NodeCountsPerLevel)
{
    for (unsigned level = 0; level <= 5; ++level) {
        EXPECT_EQ(icosahedral_sphere_nodes(level).size(), 10u * (1u << (2 * level)) + 2u) << "level " << level;
    }
    EXPECT_EQ(icosahedral_sphere_nodes(3).size(), 642u);
    EXPECT_EQ(icosahedral_sphere_nodes(4).size(), 2562u);
    EXPECT_EQ(icosahedral_sphere_nodes(5).size(), 10242u);
}

TEST(Icosahedral, PointsOnSphereWithRadialNormals)
{
    const auto s = icosahedral_sphere_nodes(3);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(s.points[i].norm(), 1.0, 1e-15);
        EXPECT_EQ(s.normals[i], s.points[i]);
    }
    EXPECT_NO_THROW(validate(s));
}

TEST(Icosahedral, LevelZeroIsTheIcosahedron)
{
    const auto s = icosahedral_sphere_nodes(0);
    // every vertex of the icosahedron has exactly 5 nearest neighbours at the edge length
    const double edge = min_pairwise_distance(s.points);
    for (const auto& p : s.points) {
        int close = 0;
        for (const auto& q : s.points) {
            if (std::abs((p - q).norm() - edge) < 1e-12) ++close;
        }
        EXPECT_EQ(close, 5);
    }
}

TEST(Icosahedral, SpacingHalvesPerLevel)
{
    double prev = min_pairwise_distance(icosahedral_sphere_nodes(1).points);
    for (unsigned level = 2; level <= 4; ++level) {
        const double h = min_pairwise_distance(icosahedral_sphere_nodes(level).points);
        EXPECT_GE(h / prev, 0.45);
        EXPECT_LE(h / prev, 0.55);
        prev = h;
    }
}

TEST(Icosahedral, TooDeepIsAResourceError) { EXPECT_THROW(icosahedral_sphere_nodes(8), ResourceError); }

TEST(Torus, NodeCounts)
{
    EXPECT_EQ(torus_staggered_nodes(10).size(), 600u);
    EXPECT_EQ(torus_staggered_nodes(20).size(), 2400u);
    EXPECT_EQ(torus_staggered_nodes(30).size(), 5400u);
    EXPECT_THROW(torus_staggered_nodes(1), InputError);
}

TEST(Torus, ParametrisationSpotValues)
{
    const double pi = std::numbers::pi;
    const Vec3 p = torus_point(-pi, -pi);
    EXPECT_NEAR(p.x(), -2.0 / 3.0, 1e-15);
    EXPECT_NEAR(p.y(), 0.0, 1e-15);
    EXPECT_NEAR(p.z(), 0.0, 1e-15);
    const Vec3 n = torus_normal(Vec3(4.0 / 3.0, 0, 0));
    EXPECT_NEAR((n - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(Torus, NodesSatisfyImplicitEquation)
{
    const auto s = torus_staggered_nodes(12);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Vec3& p = s.points[i];
        const double rho = std::hypot(p.x(), p.y());
        EXPECT_LE(std::abs((1 - rho) * (1 - rho) + p.z() * p.z() - 1.0 / 9.0), 1e-12);
        EXPECT_NEAR(s.normals[i].norm(), 1.0, 1e-14);
    }
    EXPECT_NO_THROW(validate(s));
}

TEST(Torus, NormalsAreOrthogonalToParametricTangents)
{
    const double h = 1e-6;
    for (double phi : {-2.5, -0.3, 0.0, 1.1, 2.9}) {
        for (double lam : {-3.0, -1.0, 0.4, 2.2}) {
            const Vec3 n = torus_normal(torus_point(phi, lam));
            const Vec3 tp = (torus_point(phi + h, lam) - torus_point(phi - h, lam)) / (2 * h);
            const Vec3 tl = (torus_point(phi, lam + h) - torus_point(phi, lam - h)) / (2 * h);
            EXPECT_LT(std::abs(n.dot(tp.normalized())), 1e-8);
            EXPECT_LT(std::abs(n.dot(tl.normalized())), 1e-8);
            // outward: away from the tube centre circle
            const Vec3 centre(std::cos(lam), std::sin(lam), 0.0);
            EXPECT_GT(n.dot(torus_point(phi, lam) - centre), 0.0);
        }
    }
}

TEST(Rbc, SpotValues)
{
    const RbcProfile prof;
    const auto sphere = flat_nodes({Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, -1, 0)});
    const auto rbc = map_sphere_to_rbc(sphere);
    EXPECT_NEAR((rbc.points[0] - Vec3(0, 0, prof.c0 / 2)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((rbc.points[1] - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((rbc.normals[0] - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((rbc.normals[1] - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(Rbc, PreservesCountAndAzimuth)
{
    const auto sphere = icosahedral_sphere_nodes(3);
    const auto rbc = map_sphere_to_rbc(sphere);
    ASSERT_EQ(rbc.size(), sphere.size());
    for (std::size_t i = 0; i < rbc.size(); ++i) {
        EXPECT_EQ(rbc.points[i].x(), sphere.points[i].x());
        EXPECT_EQ(rbc.points[i].y(), sphere.points[i].y());
    }
    EXPECT_NO_THROW(validate(rbc));
}

TEST(Rbc, NormalsOrthogonalToSurfaceTangents)
{
    // tangents by finite differences of the spherical parametrisation composed with the map
    const RbcProfile prof;
    auto surf = [&](double th, double ph) {
        const Vec3 s(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        const double r2 = s.x() * s.x() + s.y() * s.y();
        return Vec3(s.x(), s.y(), 0.5 * s.z() * (prof.c0 + prof.c1 * r2 + prof.c2 * r2 * r2));
    };
    const double h = 1e-6;
    for (double th : {0.2, 0.7, 1.3, 1.9, 2.8}) {
        for (double ph : {-2.0, 0.1, 1.7}) {
            const Vec3 s(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
            const auto m = map_sphere_to_rbc(flat_nodes({s}));
            const Vec3 t1 = (surf(th + h, ph) - surf(th - h, ph)).normalized();
            const Vec3 t2 = (surf(th, ph + h) - surf(th, ph - h)).normalized();
            EXPECT_LT(std::abs(m.normals[0].dot(t1)), 1e-7);
            EXPECT_LT(std::abs(m.normals[0].dot(t2)), 1e-7);
        }
    }
}

TEST(Rbc, OffSphereInputRejected)
{
    EXPECT_THROW(map_sphere_to_rbc(flat_nodes({Vec3(0, 0, 1.01)})), InputError);
}

TEST(Validate, RejectsBadNodeSets)
{
    NodeSet empty;
    EXPECT_THROW(validate(empty), InputError);
    auto dup = flat_nodes({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 0, 0)});
    try {
        validate(dup);
        FAIL() << "duplicate not detected";
    } catch (const InputError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find('0'), std::string::npos);
        EXPECT_NE(msg.find('2'), std::string::npos);
    }
    auto bad_normal = flat_nodes({Vec3(0, 0, 0)});
    bad_normal.normals[0] = Vec3(0, 0, 2);
    EXPECT_THROW(validate(bad_normal), InputError);
    auto mismatch = flat_nodes({Vec3(0, 0, 0)});
    mismatch.normals.push_back(Vec3(1, 0, 0));
    EXPECT_THROW(validate(mismatch), InputError);
}

TEST(PointCloud, CsvRoundTripIsBitExact)
{
    NodeSet s;
    s.points = {Vec3(0.1, -2.0 / 3.0, 1e-17), Vec3(1.0 / 7.0, 2, 3), Vec3(-5e10, 0.3, std::numbers::pi)};
    s.normals = {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0.6, 0.8, 0)};
    const auto path = temp_file("roundtrip.csv");
    save_point_cloud(s, path, CloudFormat::csv);
    const auto back = load_point_cloud(path, CloudFormat::csv);
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back.points[i], s.points[i]);
        EXPECT_NEAR((back.normals[i] - s.normals[i]).norm(), 0.0, 1e-15);
    }
    std::filesystem::remove(path);
}

TEST(PointCloud, PlyRoundTrip)
{
    const auto s = icosahedral_sphere_nodes(1);
    const auto path = temp_file("roundtrip.ply");
    save_point_cloud(s, path, CloudFormat::ply);
    EXPECT_EQ(cloud_format_from_path(path), CloudFormat::ply);
    const auto back = load_point_cloud(path, CloudFormat::ply);
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(back.points[i], s.points[i]);
    std::filesystem::remove(path);
}

TEST(PointCloud, NormalsAreRenormalised)
{
    const auto path = temp_file("scaled.csv");
    {
        std::ofstream out(path);
        out << "x,y,z,nx,ny,nz\n0,0,0,0,0,2\n1,0,0,0,3,4\n";
    }
    const auto s = load_point_cloud(path, CloudFormat::csv);
    EXPECT_NEAR((s.normals[0] - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((s.normals[1] - Vec3(0, 0.6, 0.8)).norm(), 0.0, 1e-15);
    std::filesystem::remove(path);
}

TEST(PointCloud, DegenerateOrMissingNormalRejected)
{
    const auto path = temp_file("zero.csv");
    {
        std::ofstream out(path);
        out << "x,y,z,nx,ny,nz\n0,0,0,0,0,1\n1,0,0,0,0,0\n";
    }
    try {
        load_point_cloud(path, CloudFormat::csv);
        FAIL() << "zero normal accepted";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find('1'), std::string::npos);
    }
    {
        std::ofstream out(path);
        out << "x,y,z,nx,ny,nz\n0,0,0,0,0\n";
    }
    EXPECT_THROW(load_point_cloud(path, CloudFormat::csv), InputError);
    {
        std::ofstream out(path);
        out << "x,y,z,nx,ny,nz\n0,0,0,0,0,1\n0,0,0,1,0,0\n";
    }
    EXPECT_THROW(load_point_cloud(path, CloudFormat::csv), InputError);
    std::filesystem::remove(path);
    EXPECT_THROW(load_point_cloud(temp_file("does_not_exist.csv"), CloudFormat::csv), InputError);
}

TEST(KdTree, MatchesBruteForce)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Vec3> pts(2000);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
    const KdTree tree(pts);
    for (int q = 0; q < 200; ++q) {
        const Vec3 query = q % 2 ? pts[q * 7] : Vec3(u(rng), u(rng), u(rng));
        for (std::size_t k : {1u, 5u, 31u}) EXPECT_EQ(tree.knn(query, k), brute_knn(pts, query, k));
    }
}

TEST(KdTree, MatchesBruteForceOnLatticeWithTies)
{
    // integer lattice: many exactly equidistant candidates
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            for (int k = 0; k < 8; ++k) pts.emplace_back(i, j, k);
    std::shuffle(pts.begin(), pts.end(), std::mt19937_64(3));
    for (std::size_t leaf : {1u, 4u, 16u}) {
        const KdTree tree(pts, leaf);
        for (std::size_t q = 0; q < pts.size(); q += 13) {
            EXPECT_EQ(tree.knn(pts[q], 19), brute_knn(pts, pts[q], 19));
            const Vec3 mid = pts[q] + Vec3(0.5, 0.5, 0.0);
            EXPECT_EQ(tree.knn(mid, 9), brute_knn(pts, mid, 9));
        }
    }
}

TEST(Stencils, SingletonsForNEqualsOne)
{
    const auto s = icosahedral_sphere_nodes(1);
    const auto st = build_stencils(s, 1);
    for (std::size_t k = 0; k < s.size(); ++k) {
        ASSERT_EQ(st.row(k).size(), 1u);
        EXPECT_EQ(st.row(k)[0], k);
    }
}

TEST(Stencils, UnitSquareCorners)
{
    const auto s = flat_nodes({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)});
    const auto st = build_stencils(s, 3);
    const auto r = st.row(0);
    EXPECT_EQ(std::vector<std::size_t>(r.begin(), r.end()), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Stencils, TieBrokenByLowerIndex)
{
    // nodes 1 and 2 are both at distance 1 from node 0
    const auto s = flat_nodes({Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(3, 3, 0)});
    const auto st = build_stencils(s, 2);
    EXPECT_EQ(st.row(0)[1], 1u);
}

TEST(Stencils, RowsSortedByDistanceAndCentreFirst)
{
    const auto s = icosahedral_sphere_nodes(3);
    const auto st = build_stencils(s, 17);
    EXPECT_EQ(st.count(), s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto r = st.row(k);
        EXPECT_EQ(r[0], k);
        std::vector<std::size_t> sorted(r.begin(), r.end());
        std::sort(sorted.begin(), sorted.end());
        EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
        for (std::size_t j = 1; j < r.size(); ++j) {
            EXPECT_LE((s.points[r[j - 1]] - s.points[k]).norm(), (s.points[r[j]] - s.points[k]).norm());
        }
        EXPECT_EQ(std::vector<std::size_t>(r.begin(), r.end()), brute_knn(s.points, s.points[k], 17));
    }
}

TEST(Stencils, SizeLimits)
{
    const auto s = icosahedral_sphere_nodes(0);
    EXPECT_THROW(build_stencils(s, 13), InputError);
    EXPECT_THROW(build_stencils(s, 0), InputError);
    EXPECT_NO_THROW(build_stencils(s, 12));
}

TEST(MinSpacing, SmallExamples)
{
    const std::vector<Vec3> two{Vec3(0, 0, 0), Vec3(1, 0, 0)};
    EXPECT_DOUBLE_EQ(min_pairwise_distance(two), 1.0);
    const std::vector<Vec3> line{Vec3(0, 0, 0), Vec3(0.5, 0, 0), Vec3(2, 0, 0)};
    EXPECT_DOUBLE_EQ(min_pairwise_distance(line), 0.5);
    const auto s = flat_nodes(line);
    EXPECT_THROW(stencil_min_spacing(s, build_stencils(s, 1)), InputError);
}

TEST(MinSpacing, MatchesBruteForceOnSphere)
{
    const auto s = icosahedral_sphere_nodes(3);
    const auto st = build_stencils(s, 17);
    const auto fill = stencil_min_spacing(s, st);
    double global = 1e300;
    for (std::size_t k = 0; k < st.count(); ++k) {
        double h = 1e300;
        const auto r = st.row(k);
        for (std::size_t i = 0; i < r.size(); ++i)
            for (std::size_t j = 0; j < r.size(); ++j)
                if (i != j) h = std::min(h, (s.points[r[i]] - s.points[r[j]]).norm());
        EXPECT_EQ(fill.h_min_per_stencil[k], h);
        EXPECT_GT(h, 0.0);
        global = std::min(global, h);
    }
    EXPECT_EQ(fill.global_min_spacing, global);
}
