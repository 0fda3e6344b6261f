#include "rbffd/geometry.hpp"
#include "rbffd/rbf_core.hpp"
#include "rbffd/shape_param.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace rbffd;

namespace {

std::vector<Vec3> sphere_stencil(unsigned level, std::size_t n, std::size_t k)
{
    const auto nodes = icosahedral_sphere_nodes(level);
    const auto st = build_stencils(nodes, n);
    return gather(nodes.points, st.row(k));
}

double kappa_at(const std::vector<Vec3>& pts, double eps)
{
    return condition_number_sym(interpolation_matrix(pts, Kernel(KernelFamily::imq, eps)));
}

double median(std::vector<int> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace

TEST(Heuristic, TableValues)
{
    const auto m = HeuristicModel::default_table();
    EXPECT_DOUBLE_EQ(m.log_epsilon(0.0, 0.0), 1.1472);
    EXPECT_NEAR(m.log_epsilon(1.0, 0.0), 1.35141012, 1e-14);
    EXPECT_EQ(m.coefficient(3, 0), 1.1012e-04);
    EXPECT_EQ(m.coefficient(0, 3), -7.9245e-05);
    EXPECT_EQ(m.coefficient(1, 1), 0.0011);
    EXPECT_THROW(m.coefficient(2, 2), std::out_of_range);
}

TEST(Heuristic, UsesNaturalLogOfKappaAndReciprocalSpacing)
{
    const auto m = HeuristicModel::default_table();
    const double h = 0.05, kt = 1e10;
    EXPECT_DOUBLE_EQ(heuristic_epsilon(h, kt), std::exp(m.log_epsilon(20.0, std::log(1e10))));
}

TEST(Heuristic, AlwaysPositive)
{
    for (double h = 1e-3; h <= 1.0; h *= 1.7) {
        for (double kt = 11.0; kt <= 1e20; kt *= 13.0) {
            const double e = heuristic_epsilon(h, kt);
            EXPECT_GT(e, 0.0);
            EXPECT_FALSE(std::isnan(e));
        }
    }
    EXPECT_THROW(heuristic_epsilon(0.0, 1e8), std::invalid_argument);
    EXPECT_THROW(heuristic_epsilon(0.1, 1.0), std::invalid_argument);
}

TEST(Heuristic, SaveLoadRoundTrip)
{
    const auto path = std::filesystem::temp_directory_path() / "rbffd_test_heuristic.txt";
    const auto m = HeuristicModel::default_table();
    m.save(path);
    const auto back = HeuristicModel::load(path);
    for (const auto& e : HeuristicModel::exponents()) EXPECT_EQ(back.coefficient(e[0], e[1]), m.coefficient(e[0], e[1]));
    {
        std::ofstream out(path);
        out << "1 0 0.5\n";
    }
    EXPECT_THROW(HeuristicModel::load(path), InputError);
    {
        std::ofstream out(path);
        out << "4 0 0.5\n";
    }
    EXPECT_THROW(HeuristicModel::load(path), InputError);
    std::filesystem::remove(path);
}

TEST(OptimizerConfig, Validation)
{
    OptimizerConfig c;
    EXPECT_NO_THROW(c.validate());
    c.kappa_target = 1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.abs_tol = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.bracket_growth = 1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Optimizer, SeedAtRootReturnsImmediately)
{
    const auto pts = sphere_stencil(3, 17, 5);
    OptimizerConfig cfg;
    cfg.kappa_target = kappa_at(pts, 2.5);
    const auto r = optimize_epsilon(pts, KernelFamily::imq, cfg, 2.5);
    EXPECT_EQ(r.epsilon, 2.5);
    EXPECT_EQ(r.bisection_steps, 0);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_FALSE(r.clamped);
}

TEST(Optimizer, UnreachableTargetIsClamped)
{
    const auto pts = sphere_stencil(3, 17, 0);
    OptimizerConfig cfg;
    cfg.kappa_target = 1e40;
    const auto r = optimize_epsilon(pts, KernelFamily::imq, cfg, 1.0);
    EXPECT_TRUE(r.clamped);
    EXPECT_GT(r.epsilon, 0.0);
}

TEST(Optimizer, MatchesGridSweep)
{
    const auto pts = sphere_stencil(3, 17, 100);
    OptimizerConfig cfg;
    cfg.kappa_target = 1e8;
    const auto r = optimize_epsilon(pts, KernelFamily::imq, cfg, 1.0);
    EXPECT_FALSE(r.clamped);
    EXPECT_LE(std::abs(std::log(r.achieved_kappa / 1e8)), std::log(1.1));

    // oracle: dense grid, pick the two neighbours straddling the target
    double below = 0.0, above = 0.0;
    for (double eps = 0.05; eps < 50.0; eps += 0.001) {
        const double k = kappa_at(pts, eps);
        if (k >= 1e8) {
            below = eps;
        } else {
            above = eps;
            break;
        }
    }
    ASSERT_GT(above, 0.0);
    EXPECT_GE(r.epsilon, below - cfg.abs_tol);
    EXPECT_LE(r.epsilon, above + cfg.abs_tol);
}

TEST(Optimizer, IndependentOfSeed)
{
    const auto pts = sphere_stencil(3, 17, 300);
    OptimizerConfig cfg;
    cfg.kappa_target = 1e10;
    const double ref = optimize_epsilon(pts, KernelFamily::imq, cfg, 1.0).epsilon;
    for (double seed : {0.01, 0.3, 3.0, 40.0, 500.0}) {
        const auto r = optimize_epsilon(pts, KernelFamily::imq, cfg, seed);
        EXPECT_NEAR(r.epsilon, ref, 2 * cfg.abs_tol) << "seed " << seed;
    }
}

TEST(Optimizer, IterationLimitCarriesBracket)
{
    const auto pts = sphere_stencil(3, 17, 0);
    OptimizerConfig cfg;
    cfg.kappa_target = 1e8;
    cfg.max_iterations = 3;
    try {
        optimize_epsilon(pts, KernelFamily::imq, cfg, 1e-2);
        FAIL() << "expected RootFindError";
    } catch (const RootFindError& e) {
        EXPECT_LE(e.bracket_lo(), e.bracket_hi());
    }
}

TEST(Optimizer, DuplicatePointsRejected)
{
    std::vector<Vec3> pts{Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0)};
    EXPECT_THROW(optimize_epsilon(pts, KernelFamily::imq, OptimizerConfig{}, 1.0), InputError);
}

TEST(Optimizer, ResidualMonotoneOnDecreasingGrid)
{
    for (std::size_t k : {0u, 17u, 400u}) {
        const auto pts = sphere_stencil(3, 17, k);
        double prev = -std::numeric_limits<double>::infinity();
        for (double eps = 10.0; eps >= 0.5; eps -= 0.125) {
            const double f = std::log(kappa_at(pts, eps) / 1e8);
            EXPECT_GE(f, prev - 1e-9) << "eps " << eps;
            prev = f;
        }
    }
}

TEST(Optimizer, HeuristicSeedDoesNotIncreaseMedianBisections)
{
    const auto nodes = icosahedral_sphere_nodes(3);
    const auto st = build_stencils(nodes, 17);
    const auto fill = stencil_min_spacing(nodes, st);
    OptimizerConfig cfg;
    cfg.kappa_target = 1e8;
    std::vector<int> warm, cold;
    for (std::size_t k = 0; k < 120; ++k) {
        const auto pts = gather(nodes.points, st.row(k * 5));
        warm.push_back(
            optimize_epsilon(pts, KernelFamily::imq, cfg, heuristic_epsilon(fill.h_min_per_stencil[k * 5], 1e8))
                .bisection_steps);
        cold.push_back(optimize_epsilon(pts, KernelFamily::imq, cfg, 1.0).bisection_steps);
    }
    EXPECT_LE(median(warm), median(cold));
}

TEST(EpsilonReport, Aggregates)
{
    EpsilonReport r;
    r.resize(3);
    r.set(0, {1.0, 10.0, 4, 2, 2, false});
    r.set(1, {2.0, 20.0, 5, 2, 3, true});
    r.set(2, {3.0, 30.0, 6, 2, 4, false});
    EXPECT_DOUBLE_EQ(r.mean_epsilon(), 2.0);
    EXPECT_EQ(r.clamped_count(), 1u);
    const auto path = std::filesystem::temp_directory_path() / "rbffd_test_report.txt";
    r.save(path);
    std::ifstream in(path);
    std::size_t k;
    double eps, kappa;
    int it, cl;
    in >> k >> eps >> kappa >> it >> cl;
    EXPECT_EQ(k, 0u);
    EXPECT_EQ(eps, 1.0);
    EXPECT_EQ(it, 4);
    EXPECT_EQ(cl, 0);
    std::filesystem::remove(path);
}

TEST(FitHeuristic, RecoversDefaultTable)
{
    const auto m = HeuristicModel::default_table();
    std::vector<HeuristicSample> samples;
    for (double h : {0.02, 0.04, 0.07, 0.1, 0.15, 0.25}) {
        for (double kt : {1e4, 1e6, 1e8, 1e10, 1e12, 1e14}) {
            samples.push_back({h, kt, std::exp(m.log_epsilon(1.0 / h, std::log(kt)))});
        }
    }
    const auto fit = fit_heuristic(samples);
    for (const auto& e : HeuristicModel::exponents()) {
        EXPECT_NEAR(fit.model.coefficient(e[0], e[1]), m.coefficient(e[0], e[1]), 1e-8) << e[0] << "," << e[1];
    }
    EXPECT_LT(fit.residual_norm, 1e-8);
}

TEST(FitHeuristic, ConstantData)
{
    std::vector<HeuristicSample> samples;
    for (double h : {0.02, 0.05, 0.1, 0.2}) {
        for (double kt : {1e4, 1e7, 1e10, 1e13}) samples.push_back({h, kt, std::exp(0.75)});
    }
    const auto fit = fit_heuristic(samples);
    for (const auto& e : HeuristicModel::exponents()) {
        const double expected = (e[0] == 0 && e[1] == 0) ? 0.75 : 0.0;
        EXPECT_NEAR(fit.model.coefficient(e[0], e[1]), expected, 1e-9);
    }
}

TEST(FitHeuristic, Preconditions)
{
    std::vector<HeuristicSample> few(5, {0.1, 1e8, 1.0});
    EXPECT_THROW(fit_heuristic(few), InputError);
    std::vector<HeuristicSample> one_target;
    for (int i = 0; i < 12; ++i) one_target.push_back({0.01 * (i + 1), 1e8, 1.0});
    EXPECT_THROW(fit_heuristic(one_target), InputError);
    // only two distinct spacings: the cubic in r is underdetermined
    std::vector<HeuristicSample> degenerate;
    for (double h : {0.1, 0.2})
        for (double kt : {1e4, 1e6, 1e8, 1e10, 1e12, 1e14}) degenerate.push_back({h, kt, 1.0});
    EXPECT_THROW(fit_heuristic(degenerate), InputError);
}

TEST(FitHeuristic, RefitGeneralisesToHeldOutStencils)
{
    std::vector<HeuristicSample> train, test;
    for (unsigned level : {3u, 4u, 5u}) {
        const auto nodes = icosahedral_sphere_nodes(level);
        const auto st = build_stencils(nodes, 17);
        const auto fill = stencil_min_spacing(nodes, st);
        const std::size_t stride = nodes.size() / 40;
        for (double kt : {1e4, 1e6, 1e8, 1e10, 1e12, 1e14}) {
            OptimizerConfig cfg;
            cfg.kappa_target = kt;
            for (std::size_t k = 0, c = 0; k < nodes.size(); k += stride, ++c) {
                const auto pts = gather(nodes.points, st.row(k));
                const auto r = optimize_epsilon(pts, KernelFamily::imq, cfg, heuristic_epsilon(fill.h_min_per_stencil[k], kt));
                if (r.clamped) continue;
                (c % 2 ? test : train).push_back({fill.h_min_per_stencil[k], kt, r.epsilon});
            }
        }
    }
    const auto fit = fit_heuristic(train);
    double ss = 0.0;
    for (const auto& s : test) {
        const double d = fit.model.log_epsilon(1.0 / s.h_min, std::log(s.kappa_target)) - std::log(s.epsilon);
        ss += d * d;
    }
    EXPECT_LE(std::sqrt(ss / static_cast<double>(test.size())), 0.15);
}
