#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "fracheat/asymptotics.hpp"
#include "fracheat/grid.hpp"

namespace fracheat {

// Everything a run depends on, resolved before any computation and written
// next to the outputs so every artifact is reproducible from its sidecar.
struct RunConfig {
    KernelSpec kernel;
    double alpha = 0.5;
    double tolerance = 1e-10;
    RegimeThresholds thresholds;
    std::uint64_t seed = 20240817;
    int threads = 1;
    std::string out_dir = ".";

    void validate() const {
        kernel.validate();
        if (!(alpha > 0.0) || !(alpha < 1.0))
            fail_validation("alpha-out-of-range", "alpha must lie in (0,1)");
        if (!(tolerance > 0.0)) fail_validation("bad-tolerance", "tolerance must be positive");
        if (threads < 1) fail_validation("bad-threads", "threads must be >= 1");
    }
};

inline void to_json(nlohmann::json& j, const KernelSpec& s) {
    j = {{"d", s.d}, {"p", s.p}, {"b", s.b}, {"R", s.R}, {"h", s.h}, {"shape", s.shape}};
}

inline void from_json(const nlohmann::json& j, KernelSpec& s) {
    s.d = j.value("d", s.d);
    s.p = j.value("p", s.p);
    s.b = j.value("b", s.b);
    s.R = j.value("R", s.R);
    s.h = j.value("h", s.h);
    s.shape = j.value("shape", s.shape);
}

inline void to_json(nlohmann::json& j, const RegimeThresholds& t) {
    j = {{"x0_steps", t.x0_steps}, {"rho0", t.rho0}};
}

inline void from_json(const nlohmann::json& j, RegimeThresholds& t) {
    t.x0_steps = j.value("x0_steps", t.x0_steps);
    t.rho0 = j.value("rho0", t.rho0);
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = {{"kernel", c.kernel},     {"alpha", c.alpha},   {"tolerance", c.tolerance},
         {"thresholds", c.thresholds}, {"seed", c.seed}, {"threads", c.threads},
         {"out_dir", c.out_dir}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
    if (j.contains("kernel")) j.at("kernel").get_to(c.kernel);
    c.alpha = j.value("alpha", c.alpha);
    c.tolerance = j.value("tolerance", c.tolerance);
    if (j.contains("thresholds")) j.at("thresholds").get_to(c.thresholds);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.out_dir = j.value("out_dir", c.out_dir);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_validation("io-error", "cannot open config " + path);
    nlohmann::json j;
    in >> j;
    RunConfig c = j.get<RunConfig>();
    c.validate();
    return c;
}

inline void write_resolved_config(const RunConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("io-error", "cannot write " + path);
    out << nlohmann::json(c).dump(2) << "\n";
}

}  // namespace fracheat
