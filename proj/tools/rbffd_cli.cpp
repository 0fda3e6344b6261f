// rbffd_cli: node generation, operator diagnostics, convergence studies,
// Turing simulations and heuristic refits.
//
// Every subcommand reads an optional key = value file (--config), then
// applies its flags and any --set key=value overrides, in that order.

#include "rbffd.hpp"

#include <CLI11.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef RBFFD_VERSION
#define RBFFD_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace rbffd;

namespace {

// ---------------------------------------------------------------------------
// Configuration plumbing
// ---------------------------------------------------------------------------

/// Flags of one subcommand, each mapped to a config key.
struct Command {
    CLI::App* app = nullptr;
    std::string config_path;
    std::vector<std::string> overrides;
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> flags;
    std::set<std::string> keys;

    void flag(const std::string& key, const std::string& help)
    {
        std::string name = "--" + key;
        std::replace(name.begin(), name.end(), '_', '-');
        flags[key] = app->add_option(name, flag_values[key], help);
        keys.insert(key);
    }

    KeyValueConfig resolve(const std::map<std::string, std::string>& defaults) const
    {
        KeyValueConfig cfg = config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(config_path);
        for (const auto& [key, opt] : flags) {
            if (opt->count() > 0) cfg.set(key, flag_values.at(key));
        }
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) throw InputError("--set expects key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        cfg.require_known(keys);
        for (const auto& [k, v] : defaults) {
            if (!cfg.has(k)) cfg.set(k, v);
        }
        return cfg;
    }
};

// Options bind to members of `c`, so it must stay where it is.
void init_command(Command& c, CLI::App& root, const std::string& name, const std::string& help)
{
    c.app = root.add_subcommand(name, help);
    c.app->add_option("-c,--config", c.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    c.app->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
    c.flag("out", "output directory");
}

std::vector<double> number_list(const KeyValueConfig& cfg, const std::string& key)
{
    std::vector<double> out;
    std::stringstream s(cfg.text(key));
    std::string item;
    while (std::getline(s, item, ',')) {
        KeyValueConfig one;
        one.set(key, item.substr(item.find_first_not_of(' ')));
        out.push_back(one.number(key));
    }
    if (out.empty()) throw InputError("config key '" + key + "' is an empty list");
    return out;
}

std::vector<unsigned> resolution_list(const KeyValueConfig& cfg, const std::string& key)
{
    std::vector<unsigned> out;
    for (double v : number_list(cfg, key)) {
        if (!(v >= 0.0) || v != std::floor(v)) throw InputError("config key '" + key + "' must list whole numbers");
        out.push_back(static_cast<unsigned>(v));
    }
    return out;
}

double positive(const KeyValueConfig& cfg, const std::string& key)
{
    const double v = cfg.number(key);
    if (!(v > 0.0)) throw InputError("config key '" + key + "' must be positive");
    return v;
}

std::string number_text(double v)
{
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

fs::path output_dir(const KeyValueConfig& cfg)
{
    const fs::path dir = cfg.text("out");
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

void write_manifest(const fs::path& dir, const std::string& command, const KeyValueConfig& cfg,
                    const std::vector<std::string>& argv)
{
    auto out = open_out(dir / "manifest.txt");
    const std::time_t now = std::time(nullptr);
    out << "# rbffd run manifest\n";
    out << "command = " << command << '\n';
    out << "argv =";
    for (const auto& a : argv) out << ' ' << a;
    out << '\n';
    out << "version = " << RBFFD_VERSION << '\n';
    out << "eigen = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n';
    out << "compiler = " << __VERSION__ << '\n';
    out << "created = " << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ") << '\n';
    out << "# effective configuration\n";
    cfg.write(out);
}

// ---------------------------------------------------------------------------
// Shared setup
// ---------------------------------------------------------------------------

void add_surface_flags(Command& c)
{
    c.flag("surface", "sphere | rbc | torus | cloud");
    c.flag("level", "icosahedral subdivision level (sphere, rbc)");
    c.flag("m", "torus grid parameter (N = 6 m^2)");
    c.flag("cloud", "point cloud file (.csv or .ply) for surface = cloud");
}

void add_strategy_flags(Command& c)
{
    c.flag("n", "stencil size");
    c.flag("kappa_target", "per-stencil target condition number");
    c.flag("epsilon", "fixed shape parameter (overrides kappa_target)");
    c.flag("kernel", "imq | gaussian | multiquadric");
    c.flag("seed_mode", "optimizer seed: heuristic | cold");
    c.flag("heuristic_model", "heuristic coefficient file from fit-heuristic");
    c.flag("threads", "assembly threads (0: all cores)");
}

NodeSet make_nodes(const KeyValueConfig& cfg)
{
    const std::string surface = cfg.text("surface");
    if (surface == "sphere") return icosahedral_sphere_nodes(static_cast<unsigned>(cfg.count("level")));
    if (surface == "rbc") return map_sphere_to_rbc(icosahedral_sphere_nodes(static_cast<unsigned>(cfg.count("level"))));
    if (surface == "torus") return torus_staggered_nodes(cfg.count("m"));
    if (surface == "cloud") {
        if (!cfg.has("cloud")) throw InputError("surface = cloud needs a cloud file");
        const fs::path path = cfg.text("cloud");
        if (!fs::exists(path)) throw InputError("point cloud " + path.string() + " does not exist");
        return load_point_cloud(path, cloud_format_from_path(path));
    }
    throw InputError("unknown surface '" + surface + "'");
}

EpsilonStrategy make_strategy(const KeyValueConfig& cfg)
{
    if (cfg.has("epsilon")) return FixedEpsilon{positive(cfg, "epsilon")};
    PerStencilKappa s;
    s.kappa_target = positive(cfg, "kappa_target");
    const std::string mode = cfg.text("seed_mode");
    if (mode != "heuristic" && mode != "cold") throw InputError("seed_mode must be heuristic or cold");
    s.heuristic_seed = mode == "heuristic";
    if (cfg.has("heuristic_model")) s.model = HeuristicModel::load(cfg.text("heuristic_model"));
    return s;
}

AssemblyOptions make_assembly_options(const KeyValueConfig& cfg)
{
    AssemblyOptions o;
    o.family = kernel_family_from_string(cfg.text("kernel"));
    o.threads = static_cast<unsigned>(cfg.count("threads"));
    return o;
}

const std::map<std::string, std::string> surface_defaults{{"surface", "sphere"}, {"level", "4"}, {"m", "20"}};
const std::map<std::string, std::string> strategy_defaults{
    {"n", "31"}, {"kappa_target", "1e12"}, {"kernel", "imq"}, {"seed_mode", "heuristic"}, {"threads", "0"}};

std::map<std::string, std::string> merged(std::initializer_list<std::map<std::string, std::string>> parts)
{
    std::map<std::string, std::string> out;
    for (const auto& p : parts) out.insert(p.begin(), p.end());
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void cmd_nodes(const KeyValueConfig& cfg)
{
    const NodeSet nodes = make_nodes(cfg);
    const std::string format = cfg.text("format");
    if (format != "csv" && format != "ply") throw InputError("format must be csv or ply");
    const fs::path path = output_dir(cfg) / ("nodes." + format);
    save_point_cloud(nodes, path, format == "ply" ? CloudFormat::ply : CloudFormat::csv);
    std::cout << "wrote " << nodes.size() << " nodes to " << path.string() << '\n';
}

void cmd_diagnose(const KeyValueConfig& cfg)
{
    const NodeSet nodes = make_nodes(cfg);
    const std::size_t n = cfg.count("n");
    const Assembly a = assemble_laplacian(nodes, n, make_strategy(cfg), make_assembly_options(cfg));

    const std::string spectrum = cfg.text("spectrum");
    std::optional<SpectralMode> mode;
    if (spectrum == "dense") {
        mode = SpectralMode::dense_exact;
    } else if (spectrum == "arnoldi") {
        mode = SpectralMode::arnoldi_estimate;
    } else if (spectrum != "auto") {
        throw InputError("spectrum must be auto, dense or arnoldi");
    }
    const OperatorDiagnostics d = diagnose_operator(a.op, mode);
    const double tol = positive(cfg, "stability_tol");
    const bool stable = d.stable(tol);

    const fs::path dir = output_dir(cfg);
    a.report.save(dir / "epsilon_report.txt");
    if (cfg.count("write_matrix") != 0) write_matrix_market(a.op, dir / "operator.mtx");

    const auto [eps_min, eps_max] = std::minmax_element(a.report.epsilon.begin(), a.report.epsilon.end());
    auto out = open_out(dir / "diagnose.txt");
    out << "surface = " << (nodes.surface_label.empty() ? cfg.text("surface") : nodes.surface_label) << '\n';
    out << "N = " << nodes.size() << '\n';
    out << "n = " << n << '\n';
    out << "nnz = " << a.op.nnz() << '\n';
    out << "density = " << d.density << '\n';
    out << "density_fraction = " << n << '/' << nodes.size() << '\n';
    out << "bandwidth_before_rcm = " << d.bandwidth_before << '\n';
    out << "bandwidth_after_rcm = " << d.bandwidth_after << '\n';
    out << "mean_epsilon = " << a.report.mean_epsilon() << '\n';
    out << "min_epsilon = " << *eps_min << '\n';
    out << "max_epsilon = " << *eps_max << '\n';
    out << "clamped_stencils = " << a.report.clamped_count() << '\n';
    out << "global_min_spacing = " << a.fill.global_min_spacing << '\n';
    out << "max_row_sum = " << d.max_row_sum << '\n';
    out << "spectral_mode = " << (d.spectrum.mode == SpectralMode::dense_exact ? "dense" : "arnoldi") << '\n';
    out << "spectral_abscissa = " << d.spectrum.abscissa << '\n';
    out << "spectral_radius = " << d.spectrum.radius << '\n';
    out << "rightmost_eigenvalue = " << d.spectrum.rightmost.real() << ' ' << d.spectrum.rightmost.imag() << '\n';
    out << "stability_tol = " << tol << '\n';
    out << "left_half_plane = " << (stable ? "pass" : "fail") << '\n';

    std::cout << "N=" << nodes.size() << " n=" << n << " density=" << d.density << " mean_eps=" << a.report.mean_epsilon()
              << " abscissa=" << d.spectrum.abscissa << " radius=" << d.spectrum.radius
              << " left_half_plane=" << (stable ? "pass" : "fail") << '\n';
}

int cmd_converge(const KeyValueConfig& cfg)
{
    StudyConfig sc;
    sc.problem = problem_kind_from_string(cfg.text("problem"));
    sc.resolutions = resolution_list(cfg, "resolutions");
    sc.stencil = cfg.count("n");
    const std::string schedule = cfg.text("schedule");
    if (schedule == "growing") {
        sc.schedule = KappaSchedule::growing;
    } else if (schedule == "fixed") {
        sc.schedule = KappaSchedule::fixed;
    } else {
        throw InputError("schedule must be growing or fixed");
    }
    sc.kappa_start = positive(cfg, "kappa_start");
    sc.kappa_cap = positive(cfg, "kappa_cap");
    sc.kappa_fixed = positive(cfg, "kappa_fixed");
    sc.family = kernel_family_from_string(cfg.text("kernel"));
    sc.dt = positive(cfg, "dt");
    sc.t_final = cfg.has("t_final") ? positive(cfg, "t_final") : default_final_time(sc.problem);
    sc.seed = cfg.count("seed");
    sc.linear_tol = positive(cfg, "linear_tol");
    sc.max_linear_iters = static_cast<int>(cfg.count("max_linear_iters"));

    const fs::path dir = output_dir(cfg);
    const ConvergenceTable t = run_convergence_study(sc, [](const ConvergenceRow& r) {
        std::cerr << "N=" << r.n_nodes;
        if (r.failure.empty()) {
            std::cerr << " l2=" << r.l2 << " linf=" << r.linf << " kappa_T=" << r.kappa_target
                      << " mean_eps=" << r.mean_epsilon << " median_iters=" << r.median_iterations << '\n';
        } else {
            std::cerr << " failed: " << r.failure << '\n';
        }
    });
    t.save_csv(dir / "convergence.csv");

    auto diag = open_out(dir / "convergence_details.csv");
    diag << "N,kappa_target,mean_epsilon,median_iterations,failure\n";
    std::size_t failed = 0;
    for (const auto& r : t.rows) {
        diag << r.n_nodes << ',' << r.kappa_target << ',' << r.mean_epsilon << ',' << r.median_iterations << ",\""
             << r.failure << "\"\n";
        if (!r.failure.empty()) ++failed;
    }
    t.write_csv(std::cout);
    if (failed == t.rows.size()) throw SolverError("every resolution failed; see convergence_details.csv", 0.0);
    return 0;
}

void write_snapshot(const fs::path& dir, std::size_t step, double t, const NodeSet& nodes, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& v)
{
    std::ostringstream stem;
    stem << "snapshot_" << std::setw(7) << std::setfill('0') << step;
    {
        auto csv = open_out(dir / (stem.str() + ".csv"));
        csv << "x,y,z,u,v\n";
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const Vec3& p = nodes.points[i];
            csv << p.x() << ',' << p.y() << ',' << p.z() << ',' << u(k) << ',' << v(k) << '\n';
        }
    }
    auto vtk = open_out(dir / (stem.str() + ".vtk"));
    vtk << "# vtk DataFile Version 3.0\n";
    vtk << "rbffd turing step " << step << " t " << t << '\n';
    vtk << "ASCII\nDATASET POLYDATA\n";
    vtk << "POINTS " << nodes.size() << " double\n";
    for (const auto& p : nodes.points) vtk << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    vtk << "VERTICES " << nodes.size() << ' ' << 2 * nodes.size() << '\n';
    for (std::size_t i = 0; i < nodes.size(); ++i) vtk << "1 " << i << '\n';
    vtk << "POINT_DATA " << nodes.size() << '\n';
    for (const auto& [name, field] : {std::pair<const char*, const Eigen::VectorXd*>{"u", &u}, {"v", &v}}) {
        vtk << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (Eigen::Index i = 0; i < field->size(); ++i) vtk << (*field)(i) << '\n';
    }
}

int cmd_turing(const KeyValueConfig& cfg)
{
    TuringPreset pre = cfg.has("preset_file") ? turing_preset_from_config(KeyValueConfig::load(cfg.text("preset_file")))
                                              : turing_preset(cfg.text("preset"));
    if (cfg.has("n")) pre.stencil = cfg.count("n");
    if (cfg.has("kappa_target")) pre.kappa_target = positive(cfg, "kappa_target");
    if (cfg.has("dt")) pre.dt = positive(cfg, "dt");
    if (cfg.has("t_final")) pre.params.final_time = positive(cfg, "t_final");
    pre.params.validate();

    const NodeSet nodes = make_nodes(cfg);
    KeyValueConfig asm_cfg = cfg;
    asm_cfg.set("n", std::to_string(pre.stencil));
    asm_cfg.set("kappa_target", number_text(pre.kappa_target));
    const Assembly a = assemble_laplacian(nodes, pre.stencil, make_strategy(asm_cfg), make_assembly_options(cfg));

    const std::size_t seed = cfg.count("seed");
    const std::string initial = cfg.text("initial");
    FieldPair init;
    if (initial == "random") {
        init = turing_initial_state(nodes.size(), seed, positive(cfg, "amplitude"));
    } else if (initial == "constant") {
        const auto dim = static_cast<Eigen::Index>(nodes.size());
        init = {Eigen::VectorXd::Constant(dim, cfg.number("initial_u")),
                Eigen::VectorXd::Constant(dim, cfg.number("initial_v"))};
    } else {
        throw InputError("initial must be random or constant");
    }
    const std::string reaction = cfg.text("reaction");
    if (reaction != "on" && reaction != "off") throw InputError("reaction must be on or off");

    ReactionDiffusionProblem p;
    p.op = &a.op;
    p.delta_u = pre.params.delta_u;
    p.delta_v = pre.params.delta_v;
    if (reaction == "on") p.reaction = turing_reaction_field(pre.params);
    p.u0 = init.u;
    p.v0 = init.v;

    IntegratorConfig ic;
    ic.scheme = Scheme::sbdf2_lu;
    ic.dt = pre.dt;
    ic.t_final = pre.params.final_time;
    ic.validate();
    const std::size_t every = cfg.count("snapshot_every");
    if (every == 0) throw InputError("snapshot_every must be positive");
    const std::size_t nsteps = ic.steps();

    const fs::path dir = output_dir(cfg);
    SteadinessTracker steady(ic.dt);
    FieldPair last{init.u, init.v};
    std::size_t last_step = 0;
    double last_t = 0.0, max_abs_u = 0.0;
    std::string failure;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        sbdf2_integrate(p, ic, [&](std::size_t m, double t, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
            steady.push(m, u);
            max_abs_u = std::max(max_abs_u, u.cwiseAbs().maxCoeff());
            last.u = u;
            last.v = v;
            last_step = m;
            last_t = t;
            if (m % every == 0 || m == nsteps) write_snapshot(dir, m, t, nodes, u, v);
        });
    } catch (const IntegrationError& e) {
        failure = e.what();
        write_snapshot(dir, last_step, last_t, nodes, last.u, last.v);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const FieldStats su = field_stats(last.u), sv = field_stats(last.v);
    auto out = open_out(dir / "summary.txt");
    out << "preset = " << pre.name << '\n';
    out << "N = " << nodes.size() << '\n';
    out << "n = " << pre.stencil << '\n';
    out << "kappa_target = " << pre.kappa_target << '\n';
    out << "mean_epsilon = " << a.report.mean_epsilon() << '\n';
    out << "dt = " << ic.dt << '\n';
    out << "steps = " << last_step << " of " << nsteps << '\n';
    out << "t = " << last_t << '\n';
    out << "status = " << (failure.empty() ? "completed" : "failed: " + failure) << '\n';
    out << "max_abs_u_over_run = " << max_abs_u << '\n';
    out << "u_max_abs = " << su.max_abs << "\nu_mean = " << su.mean << "\nu_std = " << su.stddev << "\nu_l2 = " << su.l2
        << '\n';
    out << "v_max_abs = " << sv.max_abs << "\nv_mean = " << sv.mean << "\nv_std = " << sv.stddev << "\nv_l2 = " << sv.l2
        << '\n';
    out << "steadiness = ";
    if (steady.ready()) {
        out << steady.value() << '\n';
    } else {
        out << "n/a\n";
    }
    out << "integration_seconds = " << wall << '\n';

    std::cout << pre.name << " N=" << nodes.size() << " t=" << last_t << " max|u|=" << su.max_abs << " std(u)=" << su.stddev
              << " steadiness=" << (steady.ready() ? number_text(steady.value()) : "n/a") << '\n';
    if (!failure.empty()) throw std::runtime_error(failure + " (last good snapshot kept)");
    return 0;
}

void cmd_fit_heuristic(const KeyValueConfig& cfg)
{
    const std::vector<unsigned> levels = resolution_list(cfg, "levels");
    const std::vector<double> kappas = number_list(cfg, "kappas");
    const std::size_t n = cfg.count("n");
    const std::size_t per_level = cfg.count("samples_per_level");
    if (per_level == 0) throw InputError("samples_per_level must be positive");
    const KernelFamily family = kernel_family_from_string(cfg.text("kernel"));

    const fs::path dir = output_dir(cfg);
    std::vector<HeuristicSample> samples;
    auto csv = open_out(dir / "heuristic_samples.csv");
    csv << "level,stencil,h_min,kappa_target,epsilon\n";
    for (unsigned level : levels) {
        const NodeSet nodes = icosahedral_sphere_nodes(level);
        const StencilSet st = build_stencils(nodes, n);
        const FillStats fill = stencil_min_spacing(nodes, st);
        const std::size_t stride = std::max<std::size_t>(1, nodes.size() / per_level);
        for (double kt : kappas) {
            OptimizerConfig oc;
            oc.kappa_target = kt;
            for (std::size_t k = 0; k < nodes.size(); k += stride) {
                const auto pts = gather(nodes.points, st.row(k));
                const double h = fill.h_min_per_stencil[k];
                const double seed = heuristic_epsilon(h, kt);
                const EpsilonResult r =
                    optimize_epsilon(pts, family, oc, std::isfinite(seed) && seed > 0.0 ? seed : 1.0);
                if (r.clamped) continue; // the target was not reached
                samples.push_back({h, kt, r.epsilon});
                csv << level << ',' << k << ',' << h << ',' << kt << ',' << r.epsilon << '\n';
            }
        }
    }
    const HeuristicFit fit = fit_heuristic(samples);
    fit.model.save(dir / "heuristic_model.txt");
    std::cout << "fitted " << samples.size() << " samples, residual norm " << fit.residual_norm << ", model written to "
              << (dir / "heuristic_model.txt").string() << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"RBF-FD Laplace-Beltrami tools"};
    app.require_subcommand(1);
    app.set_version_flag("--version", RBFFD_VERSION);

    Command nodes;
    init_command(nodes, app, "nodes", "generate or convert a node set");
    add_surface_flags(nodes);
    nodes.flag("format", "csv | ply");

    Command diagnose;
    init_command(diagnose, app, "diagnose", "assemble the operator and report its diagnostics");
    add_surface_flags(diagnose);
    add_strategy_flags(diagnose);
    diagnose.flag("spectrum", "auto | dense | arnoldi");
    diagnose.flag("stability_tol", "left-half-plane tolerance relative to the spectral radius");
    diagnose.flag("write_matrix", "1: also write operator.mtx");

    Command converge;
    init_command(converge, app, "converge", "convergence study against an exact solution");
    converge.flag("problem", "sphere_heat | forced_sphere | forced_torus | forced_sphere_gaussian");
    converge.flag("resolutions", "comma list of icosahedral levels (sphere) or m (torus)");
    converge.flag("n", "stencil size");
    converge.flag("schedule", "growing | fixed");
    converge.flag("kappa_start", "growing schedule: target on the coarsest set");
    converge.flag("kappa_cap", "growing schedule: upper bound on the target");
    converge.flag("kappa_fixed", "fixed schedule: target on every set");
    converge.flag("kernel", "imq | gaussian | multiquadric");
    converge.flag("dt", "time step");
    converge.flag("t_final", "final time (default per problem)");
    converge.flag("seed", "seed for the manufactured solution");
    converge.flag("linear_tol", "BiCGSTAB relative tolerance");
    converge.flag("max_linear_iters", "BiCGSTAB iteration cap");

    Command turing;
    init_command(turing, app, "turing", "Turing reaction-diffusion simulation");
    add_surface_flags(turing);
    add_strategy_flags(turing);
    turing.flag("preset", "published preset, e.g. RBC/spots");
    turing.flag("preset_file", "preset as a key = value file");
    turing.flag("dt", "time step (overrides the preset)");
    turing.flag("t_final", "final time (overrides the preset)");
    turing.flag("seed", "seed for the random initial state");
    turing.flag("initial", "random | constant");
    turing.flag("amplitude", "random initial state range [-a, a]");
    turing.flag("initial_u", "constant initial u");
    turing.flag("initial_v", "constant initial v");
    turing.flag("reaction", "on | off");
    turing.flag("snapshot_every", "steps between snapshots");

    Command fit;
    init_command(fit, app, "fit-heuristic", "refit the shape-parameter heuristic on sphere stencils");
    fit.flag("levels", "comma list of icosahedral levels");
    fit.flag("kappas", "comma list of target condition numbers");
    fit.flag("n", "stencil size");
    fit.flag("samples_per_level", "stencils sampled per level");
    fit.flag("kernel", "imq | gaussian | multiquadric");

    CLI11_PARSE(app, argc, argv);
    const std::vector<std::string> args(argv, argv + argc);

    try {
        const auto surf_strat = merged({surface_defaults, strategy_defaults});
        if (nodes.app->parsed()) {
            const auto cfg = nodes.resolve(merged({{{"out", "."}, {"format", "csv"}}, surface_defaults}));
            cmd_nodes(cfg);
            write_manifest(output_dir(cfg), "nodes", cfg, args);
        } else if (diagnose.app->parsed()) {
            const auto cfg = diagnose.resolve(merged(
                {{{"out", "."}, {"spectrum", "auto"}, {"stability_tol", "1e-8"}, {"write_matrix", "0"}}, surf_strat}));
            write_manifest(output_dir(cfg), "diagnose", cfg, args);
            cmd_diagnose(cfg);
        } else if (converge.app->parsed()) {
            const auto cfg = converge.resolve({{"out", "."},
                                               {"problem", "sphere_heat"},
                                               {"resolutions", "3,4,5"},
                                               {"n", "17"},
                                               {"schedule", "growing"},
                                               {"kappa_start", "1e5"},
                                               {"kappa_cap", "1e14"},
                                               {"kappa_fixed", "1e14"},
                                               {"kernel", "imq"},
                                               {"dt", "1e-4"},
                                               {"seed", std::to_string(default_problem_seed)},
                                               {"linear_tol", "1e-12"},
                                               {"max_linear_iters", "200"}});
            write_manifest(output_dir(cfg), "converge", cfg, args);
            return cmd_converge(cfg);
        } else if (turing.app->parsed()) {
            auto defaults = merged({{{"out", "."},
                                     {"preset", "RBC/spots"},
                                     {"seed", std::to_string(default_problem_seed)},
                                     {"initial", "random"},
                                     {"amplitude", "0.5"},
                                     {"initial_u", "0"},
                                     {"initial_v", "0"},
                                     {"reaction", "on"},
                                     {"snapshot_every", "1000"}},
                                    surface_defaults});
            for (const char* k : {"kernel", "seed_mode", "threads"}) defaults[k] = strategy_defaults.at(k);
            const auto cfg = turing.resolve(defaults);
            write_manifest(output_dir(cfg), "turing", cfg, args);
            return cmd_turing(cfg);
        } else if (fit.app->parsed()) {
            const auto cfg = fit.resolve({{"out", "."},
                                          {"levels", "3,4,5"},
                                          {"kappas", "1e4,1e6,1e8,1e10,1e12,1e14"},
                                          {"n", "17"},
                                          {"samples_per_level", "40"},
                                          {"kernel", "imq"}});
            write_manifest(output_dir(cfg), "fit-heuristic", cfg, args);
            cmd_fit_heuristic(cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
