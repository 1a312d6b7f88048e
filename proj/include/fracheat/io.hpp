#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fracheat/grid.hpp"

namespace fracheat {

static_assert(std::endian::native == std::endian::little,
              "grid serialization assumes a little-endian host");

inline constexpr char grid_magic[4] = {'F', 'H', 'G', '1'};

// Flat little-endian layout: magic, u32 dim, u32 log flag, f64 spacing,
// i64 half-extent per axis, f64 mass, then values row-major.
inline void write_grid_binary(const DensityGrid& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("io-error", "cannot open " + path + " for writing");
    out.write(grid_magic, 4);
    std::uint32_t d = static_cast<std::uint32_t>(g.dim());
    std::uint32_t logf = g.log_domain() ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(&logf), 4);
    double h = g.spacing();
    out.write(reinterpret_cast<const char*>(&h), 8);
    for (int i = 0; i < g.dim(); ++i) {
        std::int64_t half = g.half_extent()[i];
        out.write(reinterpret_cast<const char*>(&half), 8);
    }
    double mass = g.mass();
    out.write(reinterpret_cast<const char*>(&mass), 8);
    out.write(reinterpret_cast<const char*>(g.values().data()),
              static_cast<std::streamsize>(g.size() * sizeof(double)));
    if (!out) fail("io-error", "short write to " + path);
}

inline DensityGrid read_grid_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("io-error", "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, grid_magic, 4) != 0) fail("io-error", "bad magic in " + path);
    std::uint32_t d = 0, logf = 0;
    in.read(reinterpret_cast<char*>(&d), 4);
    in.read(reinterpret_cast<char*>(&logf), 4);
    double h = 0;
    in.read(reinterpret_cast<char*>(&h), 8);
    Idx3 half{};
    for (std::uint32_t i = 0; i < d; ++i) {
        std::int64_t hv = 0;
        in.read(reinterpret_cast<char*>(&hv), 8);
        half[i] = static_cast<int>(hv);
    }
    double mass = 0;
    in.read(reinterpret_cast<char*>(&mass), 8);
    DensityGrid g(static_cast<int>(d), h, half, logf != 0);
    in.read(reinterpret_cast<char*>(g.values().data()),
            static_cast<std::streamsize>(g.size() * sizeof(double)));
    if (!in) fail("io-error", "truncated grid file " + path);
    g.set_mass(mass);
    return g;
}

inline nlohmann::json grid_metadata(const DensityGrid& g) {
    nlohmann::json j;
    j["dim"] = g.dim();
    j["spacing"] = g.spacing();
    j["log_domain"] = g.log_domain();
    j["mass"] = g.mass();
    j["half_extent"] = std::vector<int>(g.half_extent().begin(),
                                        g.half_extent().begin() + g.dim());
    j["values"] = g.size();
    return j;
}

inline void write_grid_sidecar(const DensityGrid& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("io-error", "cannot open " + path);
    out << grid_metadata(g).dump(2) << "\n";
}

// d = 1 export, columns x,value.
inline void write_grid_csv(const DensityGrid& g, const std::string& path) {
    if (g.dim() != 1) fail_validation("dimension-out-of-range", "CSV export is d = 1 only");
    std::ofstream out(path);
    if (!out) fail("io-error", "cannot open " + path);
    out << "x,value\n";
    out.precision(17);
    g.for_each([&](const Idx3& xi, double v) {
        out << xi[0] * g.spacing() << "," << v << "\n";
    });
}

}  // namespace fracheat
