#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mmflow/euclidean.hpp"
#include "mmflow/io.hpp"
#include "mmflow/kahler_space.hpp"

namespace mmflow {

// Flat key/value config with [section] headers, '#' comments, and
// unknown-key rejection.
struct ParsedConfig {
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::string raw_text;  // hashed into every artifact header
};

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline ParsedConfig parse_config_text(const std::string& text) {
    ParsedConfig cfg;
    cfg.raw_text = text;
    std::stringstream ss(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(lineno) + ": empty section");
            cfg.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside a section");
        if (key.empty() || val.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        cfg.sections[section][key] = val;
    }
    return cfg;
}

inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"experiment", {"kind", "seed", "out"}},
        {"background", {"type", "n", "omega", "ricci"}},
        {"data", {"amplitude", "modes", "count", "quads", "file", "constant"}},
        {"numerics",
         {"mt", "tau", "t", "steps", "n-schedule", "dt", "t-end", "levels", "samples", "eps",
          "eps-h"}},
        {"tolerances", {"tol-ineq", "tol-metric", "tol-newton"}},
    };
    return schema;
}

inline void validate_schema(const ParsedConfig& cfg) {
    const auto& schema = config_schema();
    for (const auto& [section, kv] : cfg.sections) {
        const auto it = schema.find(section);
        if (it == schema.end()) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : kv)
            if (!it->second.count(key))
                throw ConfigError("config: unknown key '" + key + "' in section [" + section + "]");
    }
}

// Typed view over a parsed config, with kind-specific completeness checks
// done before any compute.
struct ExperimentConfig {
    std::string kind;
    std::uint64_t seed = 1;
    std::string out;

    std::string bg_type = "flat";
    int n = 128;
    double omega0 = 1.0;
    double ricci = 0.0;

    double amplitude = 1e-2;
    int modes = 3;
    int count = 200;
    int quads = 0;
    std::string data_file;

    int mt = 64;
    double tau = 0.0;
    double t = 0.0;
    int steps = 0;
    std::vector<int> n_schedule;
    double dt = 0.0;
    double t_end = 0.0;
    int levels = 0;
    int samples = 9;
    double eps = 0.0;
    double eps_h = 0.02;

    ToleranceConfig tol;

    std::string config_hash;

    static ExperimentConfig from_text(const std::string& text) {
        const auto parsed = parse_config_text(text);
        validate_schema(parsed);
        ExperimentConfig c;
        c.config_hash = hash_hex(parsed.raw_text);

        auto get = [&](const std::string& sec, const std::string& key) -> const std::string* {
            const auto s = parsed.sections.find(sec);
            if (s == parsed.sections.end()) return nullptr;
            const auto k = s->second.find(key);
            return k == s->second.end() ? nullptr : &k->second;
        };
        auto as_double = [&](const std::string* v, double dflt) {
            return v ? std::stod(*v) : dflt;
        };
        auto as_int = [&](const std::string* v, int dflt) { return v ? std::stoi(*v) : dflt; };

        const auto* kind = get("experiment", "kind");
        if (!kind) throw ConfigError("config: [experiment] kind is required");
        c.kind = *kind;
        static const std::set<std::string> kinds = {"geodesic", "flow",  "resolvent", "npc-check",
                                                    "mayer",    "compare", "euclid-oracle"};
        if (!kinds.count(c.kind)) throw ConfigError("config: unknown kind '" + c.kind + "'");

        if (const auto* s = get("experiment", "seed")) c.seed = std::stoull(*s);
        if (const auto* o = get("experiment", "out")) c.out = *o;

        c.bg_type = get("background", "type") ? *get("background", "type") : "flat";
        if (c.bg_type != "flat" && c.bg_type != "constant-ricci")
            throw ConfigError("config: background type must be flat or constant-ricci");
        c.n = as_int(get("background", "n"), 128);
        c.omega0 = as_double(get("background", "omega"), 1.0);
        c.ricci = as_double(get("background", "ricci"), 0.0);
        if (c.bg_type == "constant-ricci" && !get("background", "ricci"))
            throw ConfigError("config: constant-ricci background requires 'ricci'");

        c.amplitude = as_double(get("data", "amplitude"), 1e-2);
        c.modes = as_int(get("data", "modes"), 3);
        c.count = as_int(get("data", "count"), 200);
        c.quads = as_int(get("data", "quads"), 0);
        if (const auto* f = get("data", "file")) c.data_file = *f;

        c.mt = as_int(get("numerics", "mt"), 64);
        c.tau = as_double(get("numerics", "tau"), 0.0);
        c.t = as_double(get("numerics", "t"), 0.0);
        c.steps = as_int(get("numerics", "steps"), 0);
        c.dt = as_double(get("numerics", "dt"), 0.0);
        c.t_end = as_double(get("numerics", "t-end"), 0.0);
        c.levels = as_int(get("numerics", "levels"), 0);
        c.samples = as_int(get("numerics", "samples"), 9);
        c.eps = as_double(get("numerics", "eps"), 0.0);
        c.eps_h = as_double(get("numerics", "eps-h"), 0.02);
        if (const auto* sch = get("numerics", "n-schedule")) {
            std::stringstream sss(*sch);
            std::string tok;
            while (std::getline(sss, tok, ',')) c.n_schedule.push_back(std::stoi(trim(tok)));
        }

        c.tol.tol_ineq = as_double(get("tolerances", "tol-ineq"), 1e-6);
        c.tol.tol_metric = as_double(get("tolerances", "tol-metric"), 1e-8);
        c.tol.tol_newton = as_double(get("tolerances", "tol-newton"), 1e-10);
        c.tol.validate();

        c.check_completeness();
        return c;
    }

    static ExperimentConfig from_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError("config: cannot open '" + path + "'");
        std::stringstream buf;
        buf << is.rdbuf();
        return from_text(buf.str());
    }

    void check_completeness() const {
        auto need = [&](bool ok, const std::string& what) {
            if (!ok) throw ConfigError("config: kind '" + kind + "' requires " + what);
        };
        if (!data_file.empty() && !std::filesystem::exists(data_file))
            throw ConfigError("config: referenced file '" + data_file + "' does not exist");
        if (kind == "flow") {
            need(tau > 0.0, "numerics tau > 0");
            need(steps >= 1, "numerics steps >= 1");
        } else if (kind == "resolvent") {
            need(tau > 0.0, "numerics tau > 0");
        } else if (kind == "mayer") {
            need(t > 0.0, "numerics t > 0");
        } else if (kind == "compare") {
            need(t_end > 0.0, "numerics t-end > 0");
            need(levels >= 2, "numerics levels >= 2");
        } else if (kind == "npc-check") {
            need(count >= 1, "data count >= 1");
            need(samples >= 2, "numerics samples >= 2");
        } else if (kind == "geodesic") {
            need(mt >= 8, "numerics mt >= 8");
        }
    }

    SurfaceBackground background() const {
        if (bg_type == "flat") return SurfaceBackground::flat(n, omega0);
        return SurfaceBackground::constant_ricci(n, ricci, omega0);
    }

    Potential initial_data(const SurfaceBackground& bg, Rng& rng) const {
        if (!data_file.empty()) {
            std::ifstream is(data_file);
            auto p = read_potential_csv(is);
            if (p.size() != bg.n)
                throw ConfigError("config: data file grid size does not match background");
            return p;
        }
        std::vector<double> amps(std::max(1, modes), 0.0);
        for (int k = 0; k < std::max(1, modes); ++k) amps[k] = amplitude / ((k + 1) * (k + 1));
        (void)rng;
        return cosine_potential(bg.n, amps);
    }
};

struct Failure {
    std::string artifact;
    std::string property;
    double value = 0.0;
    double bound = 0.0;
};

struct RunResult {
    int exit_code = 0;
    std::vector<Failure> failures;
    std::vector<std::string> artifacts;
};

struct RunOptions {
    std::string outdir = "out";
    bool strict = false;       // tolerance multiplier 0.1
    bool seed_override = false;
    std::uint64_t seed = 0;
};

namespace detail {

struct ArtifactWriter {
    const ExperimentConfig& cfg;
    const RunOptions& opts;
    RunResult& result;
    std::uint64_t seed;

    MetaHeader base_meta(const std::string& property) const {
        MetaHeader m;
        m.set("config_hash", cfg.config_hash);
        m.set("kind", cfg.kind);
        m.set("seed", fmt(seed));
        m.set("property", property);
        return m;
    }

    // status + assertion bookkeeping folded into the header
    void finish(MetaHeader& meta, const std::string& artifact, const std::string& property,
                double value, double bound, bool pass_is_leq = true) {
        const bool ok = pass_is_leq ? (value <= bound) : (value >= bound);
        meta.set("residual", value);
        meta.set("bound", bound);
        meta.set("status", ok ? "pass" : "fail");
        if (!ok) result.failures.push_back({artifact, property, value, bound});
    }

    std::filesystem::path path(const std::string& name) const {
        return std::filesystem::path(opts.outdir) / name;
    }
};

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    RunResult result;
    const std::uint64_t seed = opts.seed_override ? opts.seed : cfg.seed;
    const double strict_mult = opts.strict ? 0.1 : 1.0;
    const double tol_ineq = cfg.tol.tol_ineq * strict_mult;

    std::filesystem::create_directories(opts.outdir);
    detail::ArtifactWriter w{cfg, opts, result, seed};
    Rng rng(seed);

    auto emit = [&](const std::string& name, auto&& body) {
        std::ofstream os(w.path(name));
        if (!os) throw Error("run: cannot write artifact '" + name + "'");
        body(os);
        result.artifacts.push_back(name);
    };

    if (cfg.kind == "npc-check") {
        const auto bg = cfg.background();
        const KahlerSpace space(bg, cfg.tol, GeodesicConfig{cfg.mt, cfg.eps_h, cfg.tol.tol_newton});
        std::vector<double> residuals;
        for (int i = 0; i < cfg.count; ++i) {
            const auto a = space.random_point(rng, cfg.amplitude);
            const auto b = space.random_point(rng, cfg.amplitude);
            const auto c = space.random_point(rng, cfg.amplitude);
            residuals.push_back(check_npc_triangle(space, a, b, c, cfg.samples));
        }
        double worst = -1e300;
        for (double r : residuals) worst = std::max(worst, r);
        emit("npc_residuals.csv", [&](std::ostream& os) {
            auto meta = w.base_meta("npc-triangle");
            w.finish(meta, "npc_residuals.csv", "npc-triangle", worst, tol_ineq);
            meta.write(os);
            os << "triangle,residual\n";
            for (std::size_t i = 0; i < residuals.size(); ++i)
                os << i << "," << fmt(residuals[i]) << "\n";
        });
        if (cfg.quads > 0) {
            std::vector<double> quad_res;
            for (int i = 0; i < cfg.quads; ++i) {
                const auto x0 = space.random_point(rng, cfg.amplitude);
                const auto x1 = space.random_point(rng, cfg.amplitude);
                const auto y0 = space.random_point(rng, cfg.amplitude);
                const auto y1 = space.random_point(rng, cfg.amplitude);
                quad_res.push_back(check_quadrilateral(space, x0, x1, y0, y1, cfg.samples));
            }
            double worst_q = -1e300;
            for (double r : quad_res) worst_q = std::max(worst_q, r);
            emit("quad_residuals.csv", [&](std::ostream& os) {
                auto meta = w.base_meta("quadrilateral-comparison");
                w.finish(meta, "quad_residuals.csv", "quadrilateral-comparison", worst_q, tol_ineq);
                meta.write(os);
                os << "quadrilateral,residual\n";
                for (std::size_t i = 0; i < quad_res.size(); ++i)
                    os << i << "," << fmt(quad_res[i]) << "\n";
            });
        }
    } else if (cfg.kind == "euclid-oracle") {
        const auto f = QuadraticFunctional::scalar(1.0);
        const double t = cfg.t > 0.0 ? cfg.t : 1.0;
        std::vector<int> sched = cfg.n_schedule;
        if (sched.empty()) sched = {2, 4, 8, 16, 32, 64, 128, 256};
        const double exact = std::exp(-t);
        std::vector<double> ns, errs;
        for (int n : sched) {
            const auto y = euclid_mayer_iterate(f, {1.0}, t, n);
            ns.push_back(n);
            errs.push_back(std::abs(y[0] - exact));
        }
        const double order = -fitted_order(ns, errs);
        emit("mayer_errors.csv", [&](std::ostream& os) {
            auto meta = w.base_meta("mayer-convergence");
            meta.set("order", order);
            meta.set("final_error", errs.back());
            const double bound = 2e-3 * strict_mult;
            const bool ok = order >= 0.9 && errs.back() <= bound;
            meta.set("status", ok ? "pass" : "fail");
            meta.set("residual", errs.back());
            meta.set("bound", bound);
            if (!ok)
                result.failures.push_back({"mayer_errors.csv", "mayer-convergence", errs.back(),
                                           bound});
            meta.write(os);
            os << "n,error\n";
            for (std::size_t i = 0; i < ns.size(); ++i)
                os << static_cast<int>(ns[i]) << "," << fmt(errs[i]) << "\n";
        });
    } else if (cfg.kind == "geodesic") {
        const auto bg = cfg.background();
        const GeodesicConfig geo{cfg.mt, cfg.eps_h, cfg.tol.tol_newton};
        const auto phi1_raw = cfg.initial_data(bg, rng);
        const auto phi1 = mean_normalize(bg, phi1_raw);
        const auto phi0 = Potential::zero(bg.n);
        GeodesicPath path;
        double bound;
        if (cfg.eps > 0.0) {
            path = geodesic_epsilon(bg, phi0, phi1, cfg.eps, geo);
            bound = cfg.tol.tol_newton * 10.0;
        } else {
            path = geodesic_legendre(bg, phi0, phi1, cfg.mt);
            bound = 1e-7 * strict_mult;
        }
        emit("path.csv", [&](std::ostream& os) {
            auto meta = w.base_meta(cfg.eps > 0.0 ? "epsilon-geodesic" : "exact-geodesic");
            if (cfg.eps > 0.0) meta.set("drift_over_eps", path.e_drift() / cfg.eps);
            w.finish(meta, "path.csv", "geodesic-residual", path.residual, bound);
            write_geodesic_csv(os, path, std::move(meta));
        });
    } else if (cfg.kind == "flow" || cfg.kind == "resolvent" || cfg.kind == "mayer" ||
               cfg.kind == "compare") {
        const auto bg = cfg.background();
        const KahlerSpace space(bg, cfg.tol, GeodesicConfig{cfg.mt, cfg.eps_h, cfg.tol.tol_newton});
        const auto phi0 = mean_normalize(bg, cfg.initial_data(bg, rng));
        ResolventConfig rc;
        rc.seed = seed;
        if (cfg.kind == "flow") {
            const auto trace = discrete_flow(space, phi0, cfg.tau, cfg.steps, rc);
            const auto check = validate_trace(space, trace);
            emit("trace.csv", [&](std::ostream& os) {
                auto meta = w.base_meta("discrete-flow");
                meta.set("nu_increase", check.worst_nu_increase);
                meta.set("charge_drift", check.charge_drift);
                meta.set("distance_control_margin", check.distance_control_margin);
                const double worst =
                    std::max({check.worst_nu_increase, check.charge_drift / 1e-9 * tol_ineq,
                              -check.distance_control_margin});
                w.finish(meta, "trace.csv", "discrete-flow", worst, tol_ineq);
                write_trace_csv(os, trace, std::move(meta));
            });
        } else if (cfg.kind == "resolvent") {
            ResolventConfig probe_rc = rc;
            probe_rc.tau = cfg.tau;
            probe_rc.probe_count = 50;
            probe_rc.certify_unique = true;
            const auto res = resolvent(space, phi0, probe_rc);
            emit("resolvent.csv", [&](std::ostream& os) {
                auto meta = w.base_meta("resolvent");
                meta.set("certified", res.certified ? "true" : "false");
                meta.set("probe_margin", res.probe_margin);
                meta.set("unique_certified", res.unique_certified ? "true" : "false");
                w.finish(meta, "resolvent.csv", "resolvent-optimality",
                         res.certified ? -res.probe_margin : 1.0, tol_ineq);
                meta.write(os);
                os << "tau,step_distance,mu,grad_norm,el_residual,iterations\n";
                os << fmt(cfg.tau) << "," << fmt(res.step_distance) << "," << fmt(res.objective)
                   << "," << fmt(res.grad_norm) << "," << fmt(res.el_residual) << ","
                   << res.iterations << "\n";
            });
        } else if (cfg.kind == "mayer") {
            std::vector<int> sched = cfg.n_schedule;
            if (sched.empty()) sched = {2, 4, 8, 16, 32, 64, 128, 256};
            const auto entries = mayer_limit(space, phi0, cfg.t, sched, rc);
            const double nu0 = space.functional(phi0);
            double worst = -1e300;
            bool decreasing = true;
            for (std::size_t i = 0; i < entries.size(); ++i) {
                worst = std::max(worst, entries[i].functional - nu0);
                if (i >= 2 &&
                    entries[i].distance_to_previous >
                        entries[i - 1].distance_to_previous + tol_ineq)
                    decreasing = false;
            }
            emit("mayer.csv", [&](std::ostream& os) {
                auto meta = w.base_meta("mayer-iterates");
                meta.set("successive_distances_decreasing", decreasing ? "true" : "false");
                w.finish(meta, "mayer.csv", "mayer-iterates",
                         decreasing ? worst : std::max(worst, 1.0), tol_ineq);
                meta.write(os);
                os << "n,nu,distance_to_previous\n";
                for (const auto& e : entries)
                    os << e.n << "," << fmt(e.functional) << "," << fmt(e.distance_to_previous)
                       << "\n";
            });
        } else {  // compare
            std::vector<double> schedule;
            for (int l = 1; l <= cfg.levels; ++l)
                schedule.push_back(cfg.t_end / std::pow(2.0, l));
            PDEConfig pc;
            pc.t_end = cfg.t_end;
            pc.dt = cfg.dt > 0.0 ? cfg.dt : cfg.t_end * 1e-4;
            const auto table = compare_discrete_to_smooth(space, phi0, cfg.t_end, schedule, rc, pc);
            emit("convergence.csv", [&](std::ostream& os) {
                auto meta = w.base_meta("discrete-to-smooth");
                const bool ok = table.monotone && table.order >= 0.9;
                meta.set("status", ok ? "pass" : "fail");
                meta.set("residual", table.rows.back().sup_error);
                meta.set("bound", table.rows.front().sup_error);
                if (!ok)
                    result.failures.push_back({"convergence.csv", "discrete-to-smooth",
                                               table.order, 0.9});
                write_convergence_csv(os, table, std::move(meta));
            });
            // the reference trajectory itself, for plotting
            PDEConfig traj_cfg = pc;
            traj_cfg.record_every =
                std::max(1, static_cast<int>(std::llround(cfg.t_end / pc.dt)) / 64);
            const auto traj = integrate_calabi(bg, phi0, traj_cfg);
            emit("trajectory.csv", [&](std::ostream& os) {
                auto meta = w.base_meta("reference-trajectory");
                double worst_increase = -1e300;
                for (std::size_t i = 1; i < traj.nu.size(); ++i)
                    worst_increase = std::max(worst_increase, traj.nu[i] - traj.nu[i - 1]);
                w.finish(meta, "trajectory.csv", "reference-trajectory", worst_increase, 1e-8);
                write_trajectory_csv(os, traj, std::move(meta));
            });
        }
    }

    if (!result.failures.empty()) {
        std::ofstream os(w.path("failures.csv"));
        os << "artifact,property,value,bound\n";
        for (const auto& f : result.failures)
            os << f.artifact << "," << f.property << "," << fmt(f.value) << "," << fmt(f.bound)
               << "\n";
        result.artifacts.push_back("failures.csv");
        result.exit_code = 1;
    }
    return result;
}

// One-page summary of an artifact directory: per entry, the property name,
// pass/fail status and residual.
inline std::string report_directory(const std::string& dir) {
    std::ostringstream out;
    if (!std::filesystem::exists(dir)) throw ConfigError("report: no such directory '" + dir + "'");
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".csv") files.push_back(entry.path().filename().string());
    std::sort(files.begin(), files.end());
    out << "artifact report: " << dir << "\n";
    if (files.empty()) {
        out << "no artifacts\n";
        return out.str();
    }
    int pass = 0, fail = 0, other = 0;
    for (const auto& name : files) {
        if (name == "failures.csv") continue;
        std::ifstream is(std::filesystem::path(dir) / name);
        if (!is) {
            out << "  " << name << ": unreadable\n";
            ++other;
            continue;
        }
        std::string first_data;
        const auto meta = MetaHeader::read(is, &first_data);
        const auto property = meta.count("property") ? meta.at("property") : "";
        const auto status = meta.count("status") ? meta.at("status") : "";
        if (property.empty() || status.empty()) {
            out << "  " << name << ": corrupt (missing property/status header)\n";
            ++other;
            continue;
        }
        out << "  " << name << ": " << property << " " << status;
        if (meta.count("residual")) out << " (residual " << meta.at("residual");
        if (meta.count("bound")) out << ", bound " << meta.at("bound");
        if (meta.count("residual")) out << ")";
        out << "\n";
        (status == "pass" ? pass : fail)++;
    }
    out << files.size() << " artifact(s): " << pass << " pass, " << fail << " fail";
    if (other) out << ", " << other << " unreadable/corrupt";
    out << "\n";
    return out.str();
}

}  // namespace mmflow
