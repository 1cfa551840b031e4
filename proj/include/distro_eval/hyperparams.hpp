#pragma once

// Box-shaped hyperparameter spaces, a normalized [0,1]^d coordinate system
// over them, and uniform / epsilon-ball samplers in that system.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "distro_eval/rng.hpp"

namespace distro_eval {

enum class Scale { linear, log };
enum class Kind { continuous, integer };

struct Dim {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    Scale scale = Scale::linear;
    Kind kind = Kind::continuous;

    bool operator==(const Dim&) const = default;
};

/// name -> value. Integer dims hold integral reals.
struct HyperParamPoint {
    std::map<std::string, double> values;

    double at(const std::string& name) const
    {
        const auto it = values.find(name);
        if (it == values.end()) {
            throw std::out_of_range("hyperparameter '" + name + "' missing from point");
        }
        return it->second;
    }

    bool operator==(const HyperParamPoint&) const = default;
};

class HyperParamSpace {
public:
    HyperParamSpace() = default;

    explicit HyperParamSpace(std::vector<Dim> dims) : dims_(std::move(dims))
    {
        std::set<std::string> names;
        for (const Dim& d : dims_) {
            if (!names.insert(d.name).second) {
                throw std::invalid_argument("duplicate dimension name '" + d.name + "'");
            }
            if (!(d.lo < d.hi) || !std::isfinite(d.lo) || !std::isfinite(d.hi)) {
                throw std::invalid_argument("dimension '" + d.name + "' needs finite lo < hi");
            }
            if (d.scale == Scale::log && !(d.lo > 0.0)) {
                throw std::invalid_argument("log-scaled dimension '" + d.name + "' needs lo > 0");
            }
            if (d.kind == Kind::integer) {
                if (d.hi - d.lo < 1.0) {
                    throw std::invalid_argument("integer dimension '" + d.name + "' needs hi - lo >= 1");
                }
                if (std::floor(d.lo) != d.lo || std::floor(d.hi) != d.hi) {
                    throw std::invalid_argument("integer dimension '" + d.name + "' needs integral bounds");
                }
            }
        }
    }

    const std::vector<Dim>& dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return dims_.size(); }

    const Dim& dim(const std::string& name) const
    {
        for (const Dim& d : dims_) {
            if (d.name == name) {
                return d;
            }
        }
        throw std::out_of_range("unknown dimension '" + name + "'");
    }

    /// Throws std::invalid_argument describing the first violation.
    void validate(const HyperParamPoint& point) const
    {
        if (point.values.size() != dims_.size()) {
            throw std::invalid_argument("point has " + std::to_string(point.values.size()) +
                                        " values, space has " + std::to_string(dims_.size()) +
                                        " dims");
        }
        for (const Dim& d : dims_) {
            const auto it = point.values.find(d.name);
            if (it == point.values.end()) {
                throw std::invalid_argument("point is missing dimension '" + d.name + "'");
            }
            const double v = it->second;
            if (!(v >= d.lo && v <= d.hi)) {
                throw std::invalid_argument("value " + std::to_string(v) + " for '" + d.name +
                                            "' outside [" + std::to_string(d.lo) + ", " +
                                            std::to_string(d.hi) + "]");
            }
            if (d.kind == Kind::integer && std::floor(v) != v) {
                throw std::invalid_argument("integer dimension '" + d.name + "' holds non-integral value");
            }
        }
    }

    bool contains(const HyperParamPoint& point) const
    {
        try {
            validate(point);
            return true;
        } catch (const std::invalid_argument&) {
            return false;
        }
    }

    bool operator==(const HyperParamSpace&) const = default;

private:
    std::vector<Dim> dims_;
};

inline double normalize_value(const Dim& d, double v)
{
    if (!(v >= d.lo && v <= d.hi)) {
        throw std::invalid_argument("value for '" + d.name + "' outside its bounds");
    }
    if (d.scale == Scale::log) {
        return (std::log(v) - std::log(d.lo)) / (std::log(d.hi) - std::log(d.lo));
    }
    return (v - d.lo) / (d.hi - d.lo);
}

/// Rounds to the nearest integer; exact halves go toward lo.
inline double round_toward_lo(double v, double lo)
{
    const double offset = v - lo;
    const double whole = std::floor(offset);
    return lo + (offset - whole > 0.5 ? whole + 1.0 : whole);
}

inline double denormalize_value(const Dim& d, double u)
{
    u = std::clamp(u, 0.0, 1.0);
    double v = d.scale == Scale::log
                   ? std::exp(std::log(d.lo) + u * (std::log(d.hi) - std::log(d.lo)))
                   : d.lo + u * (d.hi - d.lo);
    v = std::clamp(v, d.lo, d.hi);
    if (d.kind == Kind::integer) {
        v = std::clamp(round_toward_lo(v, d.lo), d.lo, d.hi);
    }
    return v;
}

inline std::vector<double> normalize(const HyperParamSpace& space, const HyperParamPoint& point)
{
    std::vector<double> unit;
    unit.reserve(space.size());
    for (const Dim& d : space.dims()) {
        unit.push_back(normalize_value(d, point.at(d.name)));
    }
    return unit;
}

inline HyperParamPoint denormalize(const HyperParamSpace& space, const std::vector<double>& unit)
{
    if (unit.size() != space.size()) {
        throw std::invalid_argument("normalized vector has wrong dimension");
    }
    HyperParamPoint p;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const Dim& d = space.dims()[i];
        p.values[d.name] = denormalize_value(d, unit[i]);
    }
    return p;
}

inline std::vector<HyperParamPoint> sample_uniform(const HyperParamSpace& space, std::size_t n, Rng& rng)
{
    if (n == 0) {
        throw std::invalid_argument("sample_uniform needs n >= 1");
    }
    std::vector<HyperParamPoint> out;
    out.reserve(n);
    std::vector<double> unit(space.size());
    for (std::size_t k = 0; k < n; ++k) {
        for (double& u : unit) {
            u = rng.uniform();
        }
        out.push_back(denormalize(space, unit));
    }
    return out;
}

/// Normalized coordinates drawn uniformly from the L-infinity ball of radius
/// epsilon around the center, before clipping to the unit box.
inline std::vector<std::vector<double>> sample_epsilon_ball_unclipped(const HyperParamSpace& space,
                                                                      const HyperParamPoint& center,
                                                                      double epsilon, std::size_t n,
                                                                      Rng& rng)
{
    if (!(epsilon > 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("epsilon must lie in (0, 1]");
    }
    if (n == 0) {
        throw std::invalid_argument("sample_epsilon_ball needs n >= 1");
    }
    space.validate(center);
    const std::vector<double> c = normalize(space, center);
    std::vector<std::vector<double>> out(n, std::vector<double>(space.size()));
    for (auto& unit : out) {
        for (std::size_t i = 0; i < unit.size(); ++i) {
            unit[i] = c[i] + epsilon * (2.0 * rng.uniform() - 1.0);
        }
    }
    return out;
}

inline std::vector<HyperParamPoint> sample_epsilon_ball(const HyperParamSpace& space,
                                                        const HyperParamPoint& center, double epsilon,
                                                        std::size_t n, Rng& rng)
{
    std::vector<HyperParamPoint> out;
    out.reserve(n);
    for (auto& unit : sample_epsilon_ball_unclipped(space, center, epsilon, n, rng)) {
        for (double& u : unit) {
            u = std::clamp(u, 0.0, 1.0);
        }
        out.push_back(denormalize(space, unit));
    }
    return out;
}

}  // namespace distro_eval
