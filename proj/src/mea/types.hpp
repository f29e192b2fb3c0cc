#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace mea {

struct Point {
    double x1 = 0.0;
    double x2 = 0.0;
};

/// Value of a scalar field together with its first and second partial
/// derivatives in the plan coordinates.
struct Jet {
    double f = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
    double f11 = 0.0;
    double f12 = 0.0;
    double f22 = 0.0;

    bool finite() const {
        return std::isfinite(f) && std::isfinite(f1) && std::isfinite(f2) && std::isfinite(f11) &&
               std::isfinite(f12) && std::isfinite(f22);
    }
};

inline Jet operator+(const Jet& a, const Jet& b) {
    return {a.f + b.f, a.f1 + b.f1, a.f2 + b.f2, a.f11 + b.f11, a.f12 + b.f12, a.f22 + b.f22};
}

inline Jet operator*(double s, const Jet& a) {
    return {s * a.f, s * a.f1, s * a.f2, s * a.f11, s * a.f12, s * a.f22};
}

/// Jet of the product of two fields.
inline Jet product(const Jet& a, const Jet& b) {
    return {a.f * b.f,
            a.f1 * b.f + a.f * b.f1,
            a.f2 * b.f + a.f * b.f2,
            a.f11 * b.f + 2.0 * a.f1 * b.f1 + a.f * b.f11,
            a.f12 * b.f + a.f1 * b.f2 + a.f2 * b.f1 + a.f * b.f12,
            a.f22 * b.f + 2.0 * a.f2 * b.f2 + a.f * b.f22};
}

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration, parameters or domain.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Non-finite or exploding values during evaluation or training.
class DivergenceError : public Error {
  public:
    using Error::Error;
};

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits, so streams are
/// identical across standard library implementations.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace mea
