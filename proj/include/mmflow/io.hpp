#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mmflow/calabi_pde.hpp"
#include "mmflow/geodesic.hpp"
#include "mmflow/mm.hpp"
#include "mmflow/surface.hpp"

namespace mmflow {

// Shortest round-trippable decimal form; all artifact numbers go through
// here so reruns are byte-identical.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(std::uint64_t v) { return std::to_string(v); }

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hash_hex(const std::string& s) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
    return buf;
}

// '#'-prefixed metadata header lines; insertion order preserved.
class MetaHeader {
  public:
    void set(const std::string& key, const std::string& value) {
        entries_.emplace_back(key, value);
    }
    void set(const std::string& key, double value) { set(key, fmt(value)); }

    void write(std::ostream& os) const {
        for (const auto& [k, v] : entries_) os << "# " << k << " = " << v << "\n";
    }

    static std::map<std::string, std::string> read(std::istream& is, std::string* first_data_line) {
        std::map<std::string, std::string> out;
        std::string line;
        while (std::getline(is, line)) {
            if (line.rfind("# ", 0) == 0) {
                const auto eq = line.find(" = ");
                if (eq != std::string::npos)
                    out[line.substr(2, eq - 2)] = line.substr(eq + 3);
            } else {
                if (first_data_line) *first_data_line = line;
                break;
            }
        }
        return out;
    }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

inline void write_potential_csv(std::ostream& os, const SurfaceBackground& bg, const Potential& p,
                                MetaHeader meta = {}) {
    meta.set("n", fmt(bg.n));
    meta.set("background", bg.id);
    meta.write(os);
    for (int k = 0; k < p.size(); ++k) os << (k ? "," : "") << fmt(p[k]);
    os << "\n";
}

inline Potential read_potential_csv(std::istream& is) {
    std::string data;
    MetaHeader::read(is, &data);
    if (data.empty()) throw ConfigError("read_potential_csv: no data row");
    std::vector<double> v;
    std::stringstream ss(data);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    return Potential(std::move(v));
}

inline std::string json_number_list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt(v[i]);
    }
    return s + "]";
}

inline void write_geodesic_csv(std::ostream& os, const GeodesicPath& path, MetaHeader meta = {}) {
    meta.set("epsilon", path.epsilon);
    meta.set("residual", path.residual);
    meta.set("e_drift", path.e_drift());
    meta.set("energy", json_number_list(path.energy));
    meta.write(os);
    os << "t";
    for (int k = 0; k < path.slices.front().size(); ++k) os << ",x" << k;
    os << "\n";
    const int mt = path.time_slices();
    for (int m = 0; m <= mt; ++m) {
        os << fmt(static_cast<double>(m) / mt);
        for (int k = 0; k < path.slices[m].size(); ++k) os << "," << fmt(path.slices[m][k]);
        os << "\n";
    }
}

inline void write_trace_csv(std::ostream& os, const DiscreteFlowTrace<Potential>& trace,
                            MetaHeader meta = {}) {
    meta.set("tau", trace.tau);
    meta.set("steps", fmt(trace.steps()));
    meta.set("all_certified", trace.all_certified ? "true" : "false");
    meta.write(os);
    os << "j,t,nu,charge,step_distance,mu,el_residual,certified\n";
    for (std::size_t j = 0; j < trace.iterates.size(); ++j) {
        os << j << "," << fmt(trace.times[j]) << "," << fmt(trace.functional[j]) << ","
           << fmt(trace.charge[j]);
        if (j < trace.step_dist.size())
            os << "," << fmt(trace.step_dist[j]) << "," << fmt(trace.objective[j]) << ","
               << fmt(trace.el_residual[j]) << "," << (trace.certified[j] ? 1 : 0);
        else
            os << ",,,,";
        os << "\n";
    }
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceTable& table,
                                  MetaHeader meta = {}) {
    meta.set("order", table.order);
    meta.set("monotone", table.monotone ? "true" : "false");
    meta.write(os);
    os << "tau,steps,sup_error,coherence\n";
    for (const auto& r : table.rows)
        os << fmt(r.tau) << "," << r.steps << "," << fmt(r.sup_error) << "," << fmt(r.coherence)
           << "\n";
}

inline void write_trajectory_csv(std::ostream& os, const CalabiTrajectory& traj,
                                 MetaHeader meta = {}) {
    meta.set("modes_kept", fmt(traj.modes_kept));
    meta.set("c4_monitor", traj.c4_monitor);
    meta.write(os);
    os << "t";
    for (int k = 1; k <= traj.modes_kept; ++k) os << ",amp" << k;
    os << ",nu,calabi\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        os << fmt(traj.times[i]);
        for (double a : traj.mode_amplitudes[i]) os << "," << fmt(a);
        os << "," << fmt(traj.nu[i]) << "," << fmt(traj.calabi[i]) << "\n";
    }
}

// Flat JSON-style key/value text, fixed key order.
inline std::string functional_report_json(const FunctionalReport& r) {
    std::string s = "{";
    s += "\"I\": " + fmt(r.i);
    s += ", \"J\": " + fmt(r.j);
    s += ", \"I_A\": " + fmt(r.i_a);
    s += ", \"J_A\": " + fmt(r.j_a);
    s += ", \"nu\": " + fmt(r.nu);
    s += ", \"calabi_energy\": " + fmt(r.calabi);
    s += ", \"log_volume_integral\": " + fmt(r.log_volume_integral);
    s += ", \"mean_normalized\": ";
    s += r.mean_normalized ? "true" : "false";
    return s + "}";
}

inline std::string property_report_json(const PropertyReport& r) {
    std::string s = "{";
    bool first = true;
    for (const auto& e : r.entries()) {
        if (!first) s += ", ";
        first = false;
        s += "\"" + e.name + "\": {\"value\": " + fmt(e.value) + ", \"bound\": " + fmt(e.bound) +
             ", \"pass\": " + (e.pass ? "true" : "false") + "}";
    }
    return s + "}";
}

}  // namespace mmflow
