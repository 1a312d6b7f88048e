#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace fracheat {

inline constexpr const char* version_string = "0.1.0";

// All recoverable failures carry a short machine-readable code next to the
// human-readable message.  The CLI maps these to exit status 1 (computation)
// or 2 (validation) based on the `validation` flag.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, bool validation = false)
        : std::runtime_error(message), code_(std::move(code)), validation_(validation) {}

    const std::string& code() const noexcept { return code_; }
    bool is_validation() const noexcept { return validation_; }

private:
    std::string code_;
    bool validation_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw Error(code, message, false);
}

[[noreturn]] inline void fail_validation(const std::string& code, const std::string& message) {
    throw Error(code, message, true);
}

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();
inline constexpr double pi = 3.14159265358979323846;

// Fixed-capacity vector for spatial coordinates, d <= 3.  Unused entries are
// zero so most code can ignore the dimension.
using Vec3 = std::array<double, 3>;
using Idx3 = std::array<int, 3>;

inline double dot(int d, const Vec3& a, const Vec3& b) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
}

inline double norm(int d, const Vec3& a) { return std::sqrt(dot(d, a, a)); }

// Symmetric d x d matrix, d <= 3, dense row-major storage.
struct SymMat {
    int d = 1;
    std::array<double, 9> m{};

    double& at(int i, int j) { return m[static_cast<size_t>(i) * 3 + j]; }
    double at(int i, int j) const { return m[static_cast<size_t>(i) * 3 + j]; }

    static SymMat identity(int d) {
        SymMat s;
        s.d = d;
        for (int i = 0; i < d; ++i) s.at(i, i) = 1.0;
        return s;
    }

    static SymMat scaled_identity(int d, double v) {
        SymMat s = identity(d);
        for (int i = 0; i < d; ++i) s.at(i, i) = v;
        return s;
    }

    double det() const {
        if (d == 1) return at(0, 0);
        if (d == 2) return at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
        return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1))
             - at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0))
             + at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
    }

    SymMat inverse() const {
        double dt = det();
        if (dt == 0.0 || !std::isfinite(dt)) fail("singular-matrix", "singular matrix in SymMat::inverse");
        SymMat r;
        r.d = d;
        if (d == 1) {
            r.at(0, 0) = 1.0 / dt;
        } else if (d == 2) {
            r.at(0, 0) = at(1, 1) / dt;
            r.at(1, 1) = at(0, 0) / dt;
            r.at(0, 1) = -at(0, 1) / dt;
            r.at(1, 0) = -at(1, 0) / dt;
        } else {
            auto cof = [&](int i, int j) {
                int i1 = (i + 1) % 3, i2 = (i + 2) % 3, j1 = (j + 1) % 3, j2 = (j + 2) % 3;
                return at(i1, j1) * at(i2, j2) - at(i1, j2) * at(i2, j1);
            };
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) r.at(i, j) = cof(j, i) / dt;
        }
        return r;
    }

    // (M^{-1} v, v)
    double inv_quad(const Vec3& v) const {
        SymMat inv = inverse();
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) s += inv.at(i, j) * v[i] * v[j];
        return s;
    }

    // Solve M x = b via the explicit inverse (d <= 3, well conditioned here).
    Vec3 solve(const Vec3& b) const {
        SymMat inv = inverse();
        Vec3 x{};
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += inv.at(i, j) * b[j];
            x[i] = s;
        }
        return x;
    }
};

// Compensated (Kahan) accumulator for long mass/moment sums.
struct KahanSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double x) {
        double y = x - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

}  // namespace fracheat
