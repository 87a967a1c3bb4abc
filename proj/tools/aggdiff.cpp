// aggdiff — command-line front door for the radial aggregation-diffusion
// toolkit. Subcommands expose the library modules one by one and emit CSV
// data plus a JSON manifest (config echo, versions, timings) per run, so
// experiments are reproducible from a config file alone: identical config and
// seed give byte-identical CSV output. Exit codes: 0 success, 1 verification
// failure (e.g. inequality violations where none are allowed), 2 usage or
// configuration error.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aggdiff/convexity.hpp"
#include "aggdiff/density.hpp"
#include "aggdiff/energy.hpp"
#include "aggdiff/evolve.hpp"
#include "aggdiff/io.hpp"
#include "aggdiff/kernel.hpp"
#include "aggdiff/potential.hpp"
#include "aggdiff/specfun.hpp"
#include "aggdiff/steady.hpp"
#include "aggdiff/transport.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

static constexpr const char* kToolVersion = "1.0.0";

// Config or input problems exit with 2; failed numerical verification
// (violations found where forbidden, non-convergence) exits with 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VerificationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// run configuration: [params], [grid], [tolerances], [run] sections
// ---------------------------------------------------------------------------

struct RunConfig {
    aggdiff::ModelParams params;
    int J = 256;
    double r_max = 2.0;
    std::map<std::string, double> tolerances;
    std::uint64_t seed = 0;
    std::string output_dir;
    bool m_critical = false;  // config asked for m = m_c

    double tol(const std::string& name, double dflt) const {
        const auto it = tolerances.find(name);
        return it == tolerances.end() ? dflt : it->second;
    }

    void validate() const {
        if (J < 16) throw ConfigError("config: J must be >= 16");
        if (!(r_max > 0.0)) throw ConfigError("config: r_max must be > 0");
        for (const auto& [name, value] : tolerances)
            if (!(value > 0.0))
                throw ConfigError("config: tolerance '" + name +
                                  "' must be strictly positive");
    }
};

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (trim(v.substr(used)).empty()) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError(where + ": not a number: '" + v + "'");
}

long long parse_int(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (trim(v.substr(used)).empty()) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError(where + ": not an integer: '" + v + "'");
}

}  // namespace

// key = value with [sections]; '#' and ';' start comments. Unknown keys are
// rejected with file/line context so typos cannot silently change a run.
RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    RunConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line.erase(cut);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "params" && section != "grid" &&
                section != "tolerances" && section != "run")
                throw ConfigError(where + ": unknown section [" + section +
                                  "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(where + ": empty key or value");
        const std::string ctx = where + " (key '" + key + "')";
        if (section == "params") {
            if (key == "N")
                cfg.params.N = (int)parse_int(value, ctx);
            else if (key == "k")
                cfg.params.k = parse_double(value, ctx);
            else if (key == "m") {
                if (value == "m_c")
                    cfg.m_critical = true;
                else
                    cfg.params.m = parse_double(value, ctx);
            } else if (key == "chi")
                cfg.params.chi = (int)parse_int(value, ctx);
            else if (key == "M")
                cfg.params.M = parse_double(value, ctx);
            else
                throw ConfigError(ctx + ": unknown key in [params]");
        } else if (section == "grid") {
            if (key == "J")
                cfg.J = (int)parse_int(value, ctx);
            else if (key == "r_max")
                cfg.r_max = parse_double(value, ctx);
            else
                throw ConfigError(ctx + ": unknown key in [grid]");
        } else if (section == "tolerances") {
            cfg.tolerances[key] = parse_double(value, ctx);
        } else if (section == "run") {
            if (key == "seed")
                cfg.seed = (std::uint64_t)parse_int(value, ctx);
            else if (key == "output_dir")
                cfg.output_dir = value;
            else
                throw ConfigError(ctx + ": unknown key in [run]");
        } else {
            throw ConfigError(where + ": key '" + key +
                              "' outside of any section");
        }
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// small utilities
// ---------------------------------------------------------------------------

using Clock = std::chrono::steady_clock;

static double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Fixed-size worker pool; every index writes only its own output slot, so
// results are identical for any thread count.
static void parallel_for(int n, int threads,
                         const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve((std::size_t)threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> guard(err_mutex);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

struct ToolContext {
    RunConfig cfg;
    fs::path outdir;
    int threads = 1;
    Clock::time_point start = Clock::now();

    json manifest(const std::string& subcommand) const {
        json j;
        j["tool"] = "aggdiff";
        j["subcommand"] = subcommand;
        j["version"] = {{"aggdiff", kToolVersion},
                        {"compiler", __VERSION__},
                        {"cxx", (long)__cplusplus}};
        j["config"] = {
            {"params",
             {{"N", cfg.params.N},
              {"k", cfg.params.k},
              {"m", cfg.params.m},
              {"chi", cfg.params.chi},
              {"M", cfg.params.M}}},
            {"grid", {{"J", cfg.J}, {"r_max", cfg.r_max}}},
            {"tolerances", cfg.tolerances},
            {"seed", cfg.seed},
            {"output_dir", outdir.string()},
            {"threads", threads}};
        return j;
    }

    void write_manifest(const std::string& subcommand, json j) const {
        j["timings_s"]["total"] = seconds_since(start);
        const fs::path path = outdir / (subcommand + "_manifest.json");
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot open " + path.string());
        out << j.dump(2) << '\n';
    }

    std::ofstream open_csv(const std::string& name) const {
        const fs::path path = outdir / name;
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot open " + path.string());
        return out;
    }
};

// initial profiles laid out on the configured grid [0, r_max]
static aggdiff::RadialDensity make_initial(const RunConfig& cfg,
                                           const std::string& kind,
                                           double radius) {
    using namespace aggdiff;
    if (!(radius > 0.0) || radius > cfg.r_max)
        throw ConfigError("initial radius must lie in (0, r_max]");
    if (kind == "tent")
        return tent_profile(cfg.params.N, cfg.params.M, radius, cfg.J,
                            cfg.r_max);
    if (kind != "ball")
        throw ConfigError("unknown initial profile '" + kind +
                          "' (expected ball or tent)");
    auto faces = uniform_faces(cfg.r_max, cfg.J);
    std::vector<double> vals((std::size_t)cfg.J, 0.0);
    const double N = cfg.params.N;
    for (int j = 0; j < cfg.J; ++j) {
        if (faces[j + 1] <= radius) {
            vals[j] = 1.0;
        } else if (faces[j] < radius) {
            const double lo = std::pow(faces[j], N);
            const double hi = std::pow(faces[j + 1], N);
            vals[j] = (std::pow(radius, N) - lo) / (hi - lo);
        }
    }
    RadialDensity rho(cfg.params.N, std::move(faces), std::move(vals));
    rho.normalize_mass(cfg.params.M);
    return rho;
}

static json breakdown_json(const aggdiff::EnergyBreakdown& e) {
    return {{"entropy", e.entropy},
            {"interaction", e.interaction},
            {"confinement", e.confinement},
            {"total", e.total}};
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

struct HypArgs {
    double a = 0.0, b = 0.0, c = 1.0;
    std::vector<double> z;
    double z_min = 0.0, z_max = 0.9;
    int z_count = 0;
};

static int run_hyp(const ToolContext& ctx, const HypArgs& args) {
    std::vector<double> zs = args.z;
    if (args.z_count > 0) {
        for (int i = 0; i < args.z_count; ++i)
            zs.push_back(args.z_count == 1
                             ? args.z_min
                             : args.z_min + (args.z_max - args.z_min) * i /
                                                (args.z_count - 1));
    }
    if (zs.empty()) throw ConfigError("hyp: no evaluation points (--z or --z-count)");
    std::vector<double> vals(zs.size());
    parallel_for((int)zs.size(), ctx.threads, [&](int i) {
        vals[(std::size_t)i] =
            aggdiff::hyp2f1(args.a, args.b, args.c, zs[(std::size_t)i]);
    });
    for (const double v : vals) std::cout << aggdiff::format_g17(v) << '\n';

    json man = ctx.manifest("hyp");
    man["options"] = {{"a", args.a}, {"b", args.b}, {"c", args.c}, {"z", zs}};
    man["outputs"] = json::array();
    man["summary"] = {{"values", vals}};
    ctx.write_manifest("hyp", std::move(man));
    return 0;
}

struct ThetaArgs {
    double s_min = 0.0, s_max = 0.999;
    int s_count = 201;
};

static int run_theta(const ToolContext& ctx, const ThetaArgs& args) {
    using namespace aggdiff;
    ctx.cfg.params.validate();
    if (!(args.s_min >= 0.0) || !(args.s_max <= 1.0) ||
        !(args.s_min <= args.s_max) || args.s_count < 1)
        throw ConfigError("theta: need 0 <= s-min <= s-max <= 1, s-count >= 1");
    std::vector<double> s((std::size_t)args.s_count), th(s.size()),
        thp(s.size());
    for (int i = 0; i < args.s_count; ++i)
        s[(std::size_t)i] =
            args.s_count == 1 ? args.s_min
                              : args.s_min + (args.s_max - args.s_min) * i /
                                                 (args.s_count - 1);
    parallel_for(args.s_count, ctx.threads, [&](int i) {
        th[(std::size_t)i] = theta(ctx.cfg.params, s[(std::size_t)i]);
        thp[(std::size_t)i] = theta_prime(ctx.cfg.params, s[(std::size_t)i]);
    });
    auto out = ctx.open_csv("theta.csv");
    out << "s,theta,theta_prime\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << format_g17(s[i]) << ',' << format_g17(th[i]) << ','
            << format_g17(thp[i]) << '\n';

    json man = ctx.manifest("theta");
    man["options"] = {{"s_min", args.s_min},
                      {"s_max", args.s_max},
                      {"s_count", args.s_count}};
    man["outputs"] = {"theta.csv"};
    ctx.write_manifest("theta", std::move(man));
    return 0;
}

static int run_potential(const ToolContext& ctx, const std::string& density_path) {
    using namespace aggdiff;
    ctx.cfg.params.validate();
    const RadialDensity rho = read_density_csv(density_path, ctx.cfg.params.N);
    const ConvolutionOperator op(ctx.cfg.params, rho.faces(),
                                 /*with_interaction=*/false);
    const std::vector<double> S = op.potential(rho.values());
    auto out = ctx.open_csv("potential.csv");
    out << "r,S\n";
    for (int j = 0; j < rho.cells(); ++j)
        out << format_g17(rho.center(j)) << ',' << format_g17(S[(std::size_t)j])
            << '\n';

    json man = ctx.manifest("potential");
    man["options"] = {{"density", density_path}};
    man["outputs"] = {"potential.csv"};
    man["summary"] = {{"cells", rho.cells()}, {"mass", rho.mass()}};
    ctx.write_manifest("potential", std::move(man));
    return 0;
}

static int run_energy(const ToolContext& ctx, const std::string& density_path) {
    using namespace aggdiff;
    ctx.cfg.params.validate();
    const RadialDensity rho = read_density_csv(density_path, ctx.cfg.params.N);
    const EnergyBreakdown e = evaluate(rho, ctx.cfg.params);
    {
        const fs::path path = ctx.outdir / "energy.json";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open " + path.string());
        out << breakdown_json(e).dump(2) << '\n';
    }
    std::cout << breakdown_json(e).dump(2) << '\n';

    json man = ctx.manifest("energy");
    man["options"] = {{"density", density_path}};
    man["outputs"] = {"energy.json"};
    man["summary"] = breakdown_json(e);
    man["summary"]["mass"] = rho.mass();
    ctx.write_manifest("energy", std::move(man));
    return 0;
}

struct SteadyArgs {
    std::string init = "ball";
    double init_radius = -1.0;  // negative: pick r_max/2
    double tol = -1.0;          // negative: tolerances["steady"] or 1e-11
    int max_iter = 400;
};

static int run_steady(const ToolContext& ctx, const SteadyArgs& args) {
    using namespace aggdiff;
    const RunConfig& cfg = ctx.cfg;
    cfg.params.validate();
    const double radius =
        args.init_radius > 0.0 ? args.init_radius : cfg.r_max / 2.0;
    const double tol = args.tol > 0.0 ? args.tol : cfg.tol("steady", 1e-11);
    const RadialDensity init = make_initial(cfg, args.init, radius);

    const Clock::time_point t0 = Clock::now();
    const ConvolutionOperator op(cfg.params, init.faces(),
                                 /*with_interaction=*/true);
    const double t_op = seconds_since(t0);
    const SteadyState ss = solve(op, init, tol, args.max_iter);
    const EnergyBreakdown e = evaluate(ss.density, op);
    const double char_res = characterization_residual(ss, cfg.params);
    const double el_var = el_variance(ss.density, op);
    const double virial =
        virial_identity_residual(ss.density, cfg.params, e.interaction);
    const double identity = stationary_energy_identity(ss.density, cfg.params);

    write_density_csv((ctx.outdir / "steady.csv").string(), ss.density);
    json diag = {{"lagrange_constant", ss.lagrange_constant},
                 {"support_radius", ss.support_radius},
                 {"iterations", ss.iterations},
                 {"fixed_point_residual", ss.residual},
                 {"characterization_residual", char_res},
                 {"el_variance", el_var},
                 {"virial_residual", virial},
                 {"stationary_identity", identity},
                 {"energy", breakdown_json(e)}};
    {
        const fs::path path = ctx.outdir / "steady.json";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open " + path.string());
        out << diag.dump(2) << '\n';
    }
    std::cout << "steady: C=" << ss.lagrange_constant
              << " R=" << ss.support_radius << " iterations=" << ss.iterations
              << " residual=" << ss.residual << '\n';

    json man = ctx.manifest("steady");
    man["options"] = {{"init", args.init},
                      {"init_radius", radius},
                      {"tol", tol},
                      {"max_iter", args.max_iter}};
    man["outputs"] = {"steady.csv", "steady.json"};
    man["timings_s"]["operator_build"] = t_op;
    man["summary"] = diag;
    ctx.write_manifest("steady", std::move(man));
    return 0;
}

static int run_transport(const ToolContext& ctx, const std::string& source_path,
                         const std::string& target_path) {
    using namespace aggdiff;
    ctx.cfg.params.validate();
    const RadialDensity source =
        read_density_csv(source_path, ctx.cfg.params.N);
    const RadialDensity target =
        read_density_csv(target_path, ctx.cfg.params.N);
    const TransportMap map = build_map(source, target);
    const double defect = pushforward_defect(map, source, target);
    const JensenGaps gaps = jensen_gap(map, ctx.cfg.params);

    auto out = ctx.open_csv("map.csv");
    out << "a,psi_prime,phi\n";
    const int P = map.intervals();
    for (int p = 0; p < P; ++p)
        out << format_g17(map.nodes[(std::size_t)p]) << ','
            << format_g17(map.psi_prime[(std::size_t)p]) << ','
            << format_g17(map.phi[(std::size_t)p]) << '\n';
    // closing node row; the interval value column repeats the last interval
    out << format_g17(map.nodes[(std::size_t)P]) << ','
        << format_g17(map.psi_prime[(std::size_t)P]) << ','
        << format_g17(map.phi[(std::size_t)P - 1]) << '\n';

    json gapj = {{"pushforward_defect", defect},
                 {"jensen",
                  {{"single", gaps.single},
                   {"pair", gaps.pair},
                   {"confinement", gaps.confinement}}},
                 {"intervals", P}};
    {
        const fs::path path = ctx.outdir / "gap.json";
        std::ofstream jout(path);
        if (!jout) throw std::runtime_error("cannot open " + path.string());
        jout << gapj.dump(2) << '\n';
    }
    std::cout << "transport: intervals=" << P << " defect=" << defect << '\n';

    json man = ctx.manifest("transport");
    man["options"] = {{"source", source_path}, {"target", target_path}};
    man["outputs"] = {"map.csv", "gap.json"};
    man["summary"] = gapj;
    ctx.write_manifest("transport", std::move(man));
    return 0;
}

struct ScanArgs {
    int resolution = 200;
    int t_count = 200;
    double tol = -1.0;  // negative: tolerances["scan"] or 1e-9
    std::vector<double> tangents = {0.2, 0.4, 0.6, 0.8};
    bool allow_violations = false;
};

static int run_convexity_scan(const ToolContext& ctx, const ScanArgs& args) {
    using namespace aggdiff;
    const ModelParams& p = ctx.cfg.params;
    p.validate();
    const double tol = args.tol > 0.0 ? args.tol : ctx.cfg.tol("scan", 1e-9);
    if (args.t_count < 2 || args.resolution < 2)
        throw ConfigError("convexity-scan: need t-count, resolution >= 2");

    // curve family: theta(t)/k against its tangents at the requested contact
    // points, on a t-grid strictly inside (0, 1)
    std::vector<std::pair<double, double>> ab;
    ab.reserve(args.tangents.size());
    for (const double c : args.tangents) ab.push_back(alpha_beta(p, c));
    std::vector<double> ts((std::size_t)args.t_count);
    for (int i = 0; i < args.t_count; ++i)
        ts[(std::size_t)i] = (i + 1.0) / (args.t_count + 1.0);
    std::vector<double> lhs(ts.size());
    parallel_for(args.t_count, ctx.threads, [&](int i) {
        lhs[(std::size_t)i] = theta(p, ts[(std::size_t)i]) / p.k;
    });

    auto out = ctx.open_csv("scan.csv");
    out << "t,theta_over_k";
    for (const double c : args.tangents) {
        char label[32];
        std::snprintf(label, sizeof label, "%g", c);
        out << ",tangent_c" << label;
    }
    out << '\n';
    for (std::size_t i = 0; i < ts.size(); ++i) {
        out << format_g17(ts[i]) << ',' << format_g17(lhs[i]);
        for (std::size_t j = 0; j < ab.size(); ++j) {
            const double powt = std::pow(1.0 - std::pow(ts[i], (double)p.N),
                                         p.k / (double)p.N);
            out << ',' << format_g17(ab[j].first + ab[j].second * powt);
        }
        out << '\n';
    }

    const ScanReport rep = scan(p, args.resolution, tol);
    json worst = json::array();
    for (std::size_t i = 0; i < rep.violations.size() && i < 10; ++i)
        worst.push_back({{"t", rep.violations[i].t},
                         {"c", rep.violations[i].c},
                         {"residual", rep.violations[i].residual}});
    json summary = {{"N", p.N},
                    {"k", p.k},
                    {"resolution", args.resolution},
                    {"tol", tol},
                    {"violations", (long)rep.violations.size()},
                    {"min_residual", rep.min_residual},
                    {"exclusion_band", rep.exclusion_band},
                    {"worst", worst}};
    {
        const fs::path path = ctx.outdir / "scan_summary.json";
        std::ofstream jout(path);
        if (!jout) throw std::runtime_error("cannot open " + path.string());
        jout << summary.dump(2) << '\n';
    }
    std::cout << "convexity-scan: N=" << p.N << " k=" << p.k
              << " violations=" << rep.violations.size()
              << " min_residual=" << rep.min_residual << '\n';

    json man = ctx.manifest("convexity-scan");
    man["options"] = {{"resolution", args.resolution},
                      {"t_count", args.t_count},
                      {"tol", tol},
                      {"tangents", args.tangents},
                      {"allow_violations", args.allow_violations}};
    man["outputs"] = {"scan.csv", "scan_summary.json"};
    man["summary"] = summary;
    ctx.write_manifest("convexity-scan", std::move(man));

    if (!rep.violations.empty() && !args.allow_violations)
        throw VerificationFailure(
            "convexity-scan: " + std::to_string(rep.violations.size()) +
            " violations (worst residual " +
            std::to_string(rep.min_residual) + ")");
    return 0;
}

struct FuzzArgs {
    int trials = 200;
    double rel_tol = 1e-6;
    double abs_tol = 1e-8;
    int pushforward = 0;
    double pushforward_tol = 1e-5;
};

static int run_fuzz(const ToolContext& ctx, const FuzzArgs& args) {
    using namespace aggdiff;
    const RunConfig& cfg = ctx.cfg;
    cfg.params.validate();
    if (args.trials < 1) throw ConfigError("inequality-fuzz: trials >= 1");

    const auto faces = uniform_faces(cfg.r_max, cfg.J);
    const ConvolutionOperator op(cfg.params, faces, /*with_interaction=*/true);
    const RadialDensity init = make_initial(cfg, "ball", cfg.r_max / 2.0);
    const SteadyState ss = solve(op, init, cfg.tol("steady", 1e-11), 400);
    const double f_bar = evaluate(ss.density, op).total;
    const double tol = args.rel_tol * std::abs(f_bar) + args.abs_tol;

    std::vector<double> energy((std::size_t)args.trials);
    parallel_for(args.trials, ctx.threads, [&](int i) {
        const RadialDensity rho = random_decreasing(
            cfg.seed + (std::uint64_t)i, cfg.params, cfg.J, cfg.r_max);
        energy[(std::size_t)i] = evaluate(rho, op).total;
    });

    double min_gap = std::numeric_limits<double>::infinity();
    int argmin = 0;
    long violations = 0;
    auto out = ctx.open_csv("fuzz.csv");
    out << "trial,seed,energy,gap\n";
    for (int i = 0; i < args.trials; ++i) {
        const double gap = energy[(std::size_t)i] - f_bar;
        if (gap < min_gap) {
            min_gap = gap;
            argmin = i;
        }
        if (gap < -tol) ++violations;
        out << i << ',' << (cfg.seed + (std::uint64_t)i) << ','
            << format_g17(energy[(std::size_t)i]) << ',' << format_g17(gap)
            << '\n';
    }

    // optional transport cross-check: energy along the push-forward path
    // from the minimizer against the direct evaluation
    double worst_pf = 0.0;
    for (int i = 0; i < std::min(args.pushforward, args.trials); ++i) {
        const RadialDensity rho = random_decreasing(
            cfg.seed + (std::uint64_t)i, cfg.params, cfg.J, cfg.r_max);
        const TransportMap map = build_map(ss.density, rho);
        const EnergyBreakdown pf = pushforward_energy(map, ss.density, cfg.params);
        worst_pf = std::max(worst_pf,
                            std::abs(pf.total - energy[(std::size_t)i]) /
                                std::abs(energy[(std::size_t)i]));
    }

    json summary = {{"trials", args.trials},
                    {"f_bar", f_bar},
                    {"min_gap", min_gap},
                    {"argmin_trial", argmin},
                    {"tol", tol},
                    {"violations", violations},
                    {"pushforward_checked", std::min(args.pushforward, args.trials)},
                    {"pushforward_worst_rel", worst_pf}};
    {
        const fs::path path = ctx.outdir / "fuzz.json";
        std::ofstream jout(path);
        if (!jout) throw std::runtime_error("cannot open " + path.string());
        jout << summary.dump(2) << '\n';
    }
    std::cout << "inequality-fuzz: trials=" << args.trials
              << " min(F[rho]-F[rho_bar])=" << min_gap << " tol=" << tol
              << (violations == 0 ? " OK" : " VIOLATED") << '\n';

    json man = ctx.manifest("inequality-fuzz");
    man["options"] = {{"trials", args.trials},
                      {"rel_tol", args.rel_tol},
                      {"abs_tol", args.abs_tol},
                      {"pushforward", args.pushforward}};
    man["outputs"] = {"fuzz.csv", "fuzz.json"};
    man["summary"] = summary;
    ctx.write_manifest("inequality-fuzz", std::move(man));

    if (violations > 0)
        throw VerificationFailure(
            "inequality-fuzz: " + std::to_string(violations) +
            " trials below the energy of the steady state (min gap " +
            std::to_string(min_gap) + ")");
    if (args.pushforward > 0 && worst_pf > args.pushforward_tol)
        throw VerificationFailure(
            "inequality-fuzz: push-forward energy mismatch " +
            std::to_string(worst_pf));
    return 0;
}

struct SimulateArgs {
    double t_max = 1.0;
    double stall_tol = -1.0;  // negative: tolerances["stall"] or 1e-5
    double cfl = 0.4;
    int refresh_every = 1;
    int snapshots = 5;
    long max_steps = 5000000;
    std::string init = "ball";
    double init_radius = -1.0;  // negative: pick 0.4 r_max
};

static int run_simulate(const ToolContext& ctx, const SimulateArgs& args) {
    using namespace aggdiff;
    const RunConfig& cfg = ctx.cfg;
    cfg.params.validate();
    if (!(args.t_max > 0.0)) throw ConfigError("simulate: t-max must be > 0");
    if (args.snapshots < 1 || args.refresh_every < 1 || !(args.cfl > 0.0))
        throw ConfigError(
            "simulate: need snapshots >= 1, refresh-every >= 1, cfl > 0");
    const double stall_tol =
        args.stall_tol > 0.0 ? args.stall_tol : cfg.tol("stall", 1e-5);
    const double radius =
        args.init_radius > 0.0 ? args.init_radius : 0.4 * cfg.r_max;
    const RadialDensity init = make_initial(cfg, args.init, radius);

    const Clock::time_point t0 = Clock::now();
    const ConvolutionOperator op(cfg.params, init.faces(),
                                 /*with_interaction=*/true);
    const double t_op = seconds_since(t0);

    const int J = init.cells();
    const auto& faces = init.faces();
    std::vector<double> cellvol((std::size_t)J);
    for (int j = 0; j < J; ++j) cellvol[j] = init.cell_volume(j);
    const double M0 = init.mass();

    auto snapshot_name = [](int i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "snapshot_%03d.csv", i);
        return std::string(buf);
    };
    std::vector<std::string> outputs;
    auto dump = [&](const std::string& name, const std::vector<double>& vals) {
        write_density_csv((ctx.outdir / name).string(),
                          RadialDensity(cfg.params.N, faces, vals));
        outputs.push_back(name);
    };

    std::vector<double> rho = init.values();
    dump(snapshot_name(0), rho);

    auto energy_of = [&](const std::vector<double>& vals) {
        return evaluate(RadialDensity(cfg.params.N, faces, vals), op).total;
    };
    auto ecsv = ctx.open_csv("energy_history.csv");
    outputs.push_back("energy_history.csv");
    ecsv << "t,F\n";
    double F = energy_of(rho);
    const double F0 = F;
    ecsv << format_g17(0.0) << ',' << format_g17(F) << '\n';

    double time = 0.0, dt = 0.0, worst_uptick = 0.0;
    long steps = 0;
    int written = 0;
    bool stalled = false;
    std::vector<double> S, prev;
    while (time < args.t_max && steps < args.max_steps) {
        if (steps % args.refresh_every == 0) S = op.potential(rho);
        prev = rho;
        dt = detail::fv_step(rho, S, cfg.params, faces, args.cfl,
                             args.t_max - time);
        time += dt;
        ++steps;
        const double Fn = energy_of(rho);
        worst_uptick = std::max(worst_uptick, Fn - F);
        F = Fn;
        ecsv << format_g17(time) << ',' << format_g17(F) << '\n';
        while (written < args.snapshots &&
               time >= args.t_max * (written + 1) / args.snapshots -
                           1e-12 * args.t_max) {
            dump(snapshot_name(written + 1), rho);
            ++written;
        }
        double l1 = 0.0;
        for (int j = 0; j < J; ++j)
            l1 += std::abs(rho[j] - prev[j]) * cellvol[j];
        if (l1 / (dt * M0) < stall_tol) {
            stalled = true;
            break;
        }
    }
    // a stalled run ends early; complete the series with the settled state
    for (int i = written; i < args.snapshots; ++i)
        dump(snapshot_name(i + 1), rho);

    const RadialDensity final_density(cfg.params.N, faces, rho);
    write_density_csv((ctx.outdir / "final.csv").string(), final_density);
    outputs.push_back("final.csv");

    json summary = {{"steps", steps},
                    {"final_time", time},
                    {"final_dt", dt},
                    {"stalled", stalled},
                    {"mass_initial", M0},
                    {"mass_final", final_density.mass()},
                    {"energy_initial", F0},
                    {"energy_final", F},
                    {"worst_energy_uptick", worst_uptick}};
    std::cout << "simulate: steps=" << steps << " t=" << time
              << (stalled ? " (stalled)" : "") << " F=" << F << '\n';

    json man = ctx.manifest("simulate");
    man["options"] = {{"t_max", args.t_max},
                      {"stall_tol", stall_tol},
                      {"cfl", args.cfl},
                      {"refresh_every", args.refresh_every},
                      {"snapshots", args.snapshots},
                      {"init", args.init},
                      {"init_radius", radius}};
    man["outputs"] = outputs;
    man["timings_s"]["operator_build"] = t_op;
    man["summary"] = summary;
    ctx.write_manifest("simulate", std::move(man));
    return 0;
}

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    // the config file is located before regular flag parsing so that any
    // explicit flag can override a file value
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        const std::string s = argv[i];
        if ((s == "--config" || s == "-c") && i + 1 < argc)
            config_path = argv[i + 1];
        else if (s.rfind("--config=", 0) == 0)
            config_path = s.substr(9);
    }

    ToolContext ctx;
    try {
        if (!config_path.empty()) ctx.cfg = load_config(config_path);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    }

    CLI::App app{
        "aggdiff — radial aggregation-diffusion toolkit:\n"
        "steady states, free-energy inequalities, transport maps, and\n"
        "finite-volume evolution for power-law attraction kernels"};
    app.require_subcommand(1);

    std::string config_dummy;
    app.add_option("--config,-c", config_dummy,
                   "configuration file (key = value with [params], [grid], "
                   "[tolerances], [run] sections)");
    app.add_option("--output-dir", ctx.cfg.output_dir,
                   "output directory (default: $AGGDIFF_OUTPUT_DIR or .)");
    app.add_option("--threads", ctx.threads, "worker pool size")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", ctx.cfg.seed, "base seed for randomized runs");
    app.add_option("--N", ctx.cfg.params.N, "space dimension");
    app.add_option("--k", ctx.cfg.params.k, "attraction exponent, in (-N, 0)");
    auto* m_opt = app.add_option("--m", ctx.cfg.params.m, "diffusion exponent");
    bool m_critical_flag = false;
    app.add_flag("--m-critical", m_critical_flag, "set m = m_c = 1 - k/N");
    app.add_option("--chi", ctx.cfg.params.chi, "confinement switch (0 or 1)")
        ->check(CLI::Range(0, 1));
    app.add_option("--M", ctx.cfg.params.M, "total mass");
    app.add_option("--J", ctx.cfg.J, "number of radial cells");
    app.add_option("--r-max", ctx.cfg.r_max, "outer grid radius");

    HypArgs hyp_args;
    auto* sub_hyp = app.add_subcommand(
        "hyp", "evaluate the Gauss hypergeometric function, one value per line");
    sub_hyp->fallthrough();
    sub_hyp->add_option("--a", hyp_args.a, "first upper parameter")->required();
    sub_hyp->add_option("--b", hyp_args.b, "second upper parameter")->required();
    sub_hyp->add_option("--c", hyp_args.c, "lower parameter")->required();
    sub_hyp->add_option("--z", hyp_args.z, "evaluation points in (-1, 1]");
    sub_hyp->add_option("--z-min", hyp_args.z_min, "grid start");
    sub_hyp->add_option("--z-max", hyp_args.z_max, "grid end");
    sub_hyp->add_option("--z-count", hyp_args.z_count, "grid size");

    ThetaArgs theta_args;
    auto* sub_theta = app.add_subcommand(
        "theta", "tabulate the spherical kernel average and its derivative");
    sub_theta->fallthrough();
    sub_theta->add_option("--s-min", theta_args.s_min, "grid start");
    sub_theta->add_option("--s-max", theta_args.s_max, "grid end");
    sub_theta->add_option("--s-count", theta_args.s_count, "grid size");

    std::string density_path, source_path, target_path;
    auto* sub_potential = app.add_subcommand(
        "potential", "attraction potential of a density read from CSV");
    sub_potential->fallthrough();
    sub_potential->add_option("--density", density_path, "density CSV (r,rho)")
        ->required()
        ->check(CLI::ExistingFile);

    auto* sub_energy = app.add_subcommand(
        "energy", "free-energy breakdown of a density read from CSV");
    sub_energy->fallthrough();
    sub_energy->add_option("--density", density_path, "density CSV (r,rho)")
        ->required()
        ->check(CLI::ExistingFile);

    SteadyArgs steady_args;
    auto* sub_steady =
        app.add_subcommand("steady", "solve for the radial steady state");
    sub_steady->fallthrough();
    sub_steady->add_option("--init", steady_args.init,
                           "initial profile: ball or tent");
    sub_steady->add_option("--init-radius", steady_args.init_radius,
                           "initial profile radius (default r_max/2)");
    sub_steady->add_option("--tol", steady_args.tol,
                           "fixed-point tolerance (default 1e-11)");
    sub_steady->add_option("--max-iter", steady_args.max_iter,
                           "iteration budget");

    auto* sub_transport = app.add_subcommand(
        "transport",
        "monotone transport map between two densities, with Jensen gaps");
    sub_transport->fallthrough();
    sub_transport->add_option("--source", source_path, "source density CSV")
        ->required()
        ->check(CLI::ExistingFile);
    sub_transport->add_option("--target", target_path, "target density CSV")
        ->required()
        ->check(CLI::ExistingFile);

    ScanArgs scan_args;
    auto* sub_scan = app.add_subcommand(
        "convexity-scan",
        "tangent-line comparison scan for the kernel average");
    sub_scan->fallthrough();
    sub_scan->add_option("--resolution", scan_args.resolution,
                         "scan grid resolution per axis");
    sub_scan->add_option("--t-count", scan_args.t_count, "CSV t-grid size");
    sub_scan->add_option("--tol", scan_args.tol,
                         "violation tolerance (default 1e-9)");
    sub_scan->add_option("--tangent-c", scan_args.tangents,
                         "tangent contact points for the CSV curves");
    sub_scan->add_flag("--allow-violations", scan_args.allow_violations,
                       "report violations without failing");

    FuzzArgs fuzz_args;
    auto* sub_fuzz = app.add_subcommand(
        "inequality-fuzz",
        "random densities against the steady state's free energy");
    sub_fuzz->fallthrough();
    sub_fuzz->add_option("--trials", fuzz_args.trials, "number of densities");
    sub_fuzz->add_option("--rel-tol", fuzz_args.rel_tol,
                         "relative slack on |F[rho_bar]|");
    sub_fuzz->add_option("--abs-tol", fuzz_args.abs_tol, "absolute slack");
    sub_fuzz->add_option("--pushforward", fuzz_args.pushforward,
                         "also cross-check this many trials via transport");
    sub_fuzz->add_option("--pushforward-tol", fuzz_args.pushforward_tol,
                         "relative tolerance for the cross-check");

    SimulateArgs sim_args;
    auto* sub_simulate = app.add_subcommand(
        "simulate", "explicit finite-volume evolution with snapshots");
    sub_simulate->fallthrough();
    sub_simulate->add_option("--t-max", sim_args.t_max, "time horizon");
    sub_simulate->add_option("--stall-tol", sim_args.stall_tol,
                             "relative L1 rate treated as settled");
    sub_simulate->add_option("--cfl", sim_args.cfl, "CFL safety factor");
    sub_simulate->add_option("--refresh-every", sim_args.refresh_every,
                             "steps between potential refreshes");
    sub_simulate->add_option("--snapshots", sim_args.snapshots,
                             "number of trajectory snapshots");
    sub_simulate->add_option("--max-steps", sim_args.max_steps, "step budget");
    sub_simulate->add_option("--init", sim_args.init,
                             "initial profile: ball or tent");
    sub_simulate->add_option("--init-radius", sim_args.init_radius,
                             "initial profile radius (default 0.4 r_max)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
            return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (m_critical_flag || (ctx.cfg.m_critical && m_opt->count() == 0))
            ctx.cfg.params.m = ctx.cfg.params.m_c();
        ctx.cfg.validate();

        std::string outdir = ctx.cfg.output_dir;
        if (outdir.empty()) {
            const char* env = std::getenv("AGGDIFF_OUTPUT_DIR");
            outdir = (env && *env) ? env : ".";
        }
        ctx.outdir = outdir;
        fs::create_directories(ctx.outdir);

        if (sub_hyp->parsed()) return run_hyp(ctx, hyp_args);
        if (sub_theta->parsed()) return run_theta(ctx, theta_args);
        if (sub_potential->parsed()) return run_potential(ctx, density_path);
        if (sub_energy->parsed()) return run_energy(ctx, density_path);
        if (sub_steady->parsed()) return run_steady(ctx, steady_args);
        if (sub_transport->parsed())
            return run_transport(ctx, source_path, target_path);
        if (sub_scan->parsed()) return run_convexity_scan(ctx, scan_args);
        if (sub_fuzz->parsed()) return run_fuzz(ctx, fuzz_args);
        if (sub_simulate->parsed()) return run_simulate(ctx, sim_args);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const ConfigError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    } catch (const VerificationFailure& ex) {
        std::cerr << "verification failure: " << ex.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    } catch (const std::domain_error& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "failure: " << ex.what() << '\n';
        return 1;
    }
}
