#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "osmt/errors.hpp"
#include "osmt/grid.hpp"
#include "osmt/rng.hpp"

namespace osmt {

inline double conjugate_exponent(double p) { return p / (p - 1.0); }

/// A strictly positive grid function together with its Lebesgue exponent p and
/// the dual weight sigma with cell values w_k^(-1/(p-1)).
class Weight {
public:
    Weight(GridFunction base, double p) : base_(std::move(base)), p_(p), dual_(make_dual()) {}

    const DyadicGrid& grid() const { return base_.grid(); }
    const GridFunction& base() const { return base_; }
    const GridFunction& dual_function() const { return *dual_; }
    double exponent() const { return p_; }

    double mass(IntervalId id) const { return base_.integral(id); }
    double dual_mass(IntervalId id) const { return dual_->integral(id); }

private:
    std::optional<GridFunction> make_dual() {
        if (!(p_ > 1.0) || !std::isfinite(p_))
            throw std::domain_error("weight exponent p must lie in (1, inf)");
        std::vector<double> d(static_cast<std::size_t>(base_.size()));
        const double e = -1.0 / (p_ - 1.0);
        for (std::int64_t i = 0; i < base_.size(); ++i) {
            if (!(base_[i] > 0.0))
                throw std::domain_error("weight must be strictly positive (cell " +
                                        std::to_string(i) + ")");
            d[static_cast<std::size_t>(i)] = std::pow(base_[i], e);
        }
        return GridFunction(base_.grid(), std::move(d));
    }

    GridFunction base_;
    double p_;
    std::optional<GridFunction> dual_;  // deferred-constructible, never empty
};

/// sigma = w^(1-p') as a Weight with the conjugate exponent; dual of the dual
/// recovers w.
inline Weight dual_weight(const Weight& w) {
    return Weight(w.dual_function(), conjugate_exponent(w.exponent()));
}

// ---------------------------------------------------------------------------
// weight families for experiments

enum class WeightKind { constant, step, power, one_sided_power, cascade };
enum class Orientation { decreasing, increasing };

struct WeightFamilySpec {
    WeightKind kind = WeightKind::constant;
    double alpha = 0.0;                              // power-type exponent
    Orientation orientation = Orientation::decreasing;
    double theta = 0.0;                              // cascade amplitude in [0,1)
    std::uint64_t seed = 0;
    int depth = 8;
};

namespace detail {

// exact cell means of x^alpha (or of the mirrored/shifted variant)
inline std::vector<double> power_cell_means(int depth, double alpha, bool mirrored,
                                            double origin = 0.0, double span = 1.0) {
    const std::int64_t n = std::int64_t{1} << depth;
    const double h = std::ldexp(1.0, -depth);
    std::vector<double> v(static_cast<std::size_t>(n), 1.0);
    auto primitive = [&](double t) { return std::pow(t, alpha + 1.0) / (alpha + 1.0); };
    for (std::int64_t i = 0; i < n; ++i) {
        double a = i * h, b = (i + 1) * h;
        if (mirrored) std::swap(a, b), a = 1.0 - a, b = 1.0 - b;
        if (b <= origin || a >= origin + span) continue;  // outside the power piece
        double lo = (a - origin) / span, hi = (b - origin) / span;
        v[static_cast<std::size_t>(i)] = span * (primitive(hi) - primitive(lo)) / (b - a);
    }
    return v;
}

}  // namespace detail

inline Weight generate_weight(const WeightFamilySpec& spec, double p = 2.0) {
    DyadicGrid grid(spec.depth);
    const std::int64_t n = grid.cell_count();
    const bool inc = spec.orientation == Orientation::increasing;
    std::vector<double> v;
    switch (spec.kind) {
        case WeightKind::constant:
            v.assign(static_cast<std::size_t>(n), 1.0);
            break;
        case WeightKind::step: {
            // jump of size 2^alpha at the midpoint; elevated on the left for
            // the decreasing orientation
            v.assign(static_cast<std::size_t>(n), 1.0);
            const double hi = std::exp2(spec.alpha);
            for (std::int64_t i = 0; i < n / 2; ++i)
                v[static_cast<std::size_t>(inc ? n / 2 + i : i)] = hi;
            break;
        }
        case WeightKind::power:
            if (spec.alpha <= -1.0)
                throw std::domain_error("power weight needs alpha > -1 for integrability");
            v = detail::power_cell_means(spec.depth, spec.alpha, inc);
            break;
        case WeightKind::one_sided_power:
            // power piece on one half only, constant 1 on the other; the
            // singular endpoint is the midpoint
            if (spec.alpha <= -1.0)
                throw std::domain_error("one-sided power weight needs alpha > -1");
            v = detail::power_cell_means(spec.depth, spec.alpha, inc, 0.5, 0.5);
            break;
        case WeightKind::cascade: {
            if (!(spec.theta >= 0.0 && spec.theta < 1.0))
                throw std::domain_error("cascade amplitude must lie in [0,1)");
            RngStream rng(spec.seed);
            std::vector<double> level{1.0};
            for (int l = 0; l < spec.depth; ++l) {
                std::vector<double> next(level.size() * 2);
                for (std::size_t k = 0; k < level.size(); ++k) {
                    const bool plus_left = rng.coin();
                    next[2 * k] = level[k] * (plus_left ? 1.0 + spec.theta : 1.0 - spec.theta);
                    next[2 * k + 1] = level[k] * (plus_left ? 1.0 - spec.theta : 1.0 + spec.theta);
                }
                level = std::move(next);
            }
            v = std::move(level);
            break;
        }
    }
    return Weight(GridFunction(grid, std::move(v)), p);
}

// ---------------------------------------------------------------------------
// text form: space-separated key=value tokens, e.g.
//   kind=power alpha=-0.5 orientation=decreasing depth=10 seed=42

inline std::string to_string(WeightKind k) {
    switch (k) {
        case WeightKind::constant: return "constant";
        case WeightKind::step: return "step";
        case WeightKind::power: return "power";
        case WeightKind::one_sided_power: return "one_sided_power";
        case WeightKind::cascade: return "cascade";
    }
    return "?";
}

inline std::string to_string(const WeightFamilySpec& s) {
    std::ostringstream os;
    os << "kind=" << to_string(s.kind) << " alpha=" << format_double(s.alpha) << " orientation="
       << (s.orientation == Orientation::increasing ? "increasing" : "decreasing")
       << " theta=" << format_double(s.theta) << " seed=" << s.seed << " depth=" << s.depth;
    return os.str();
}

inline void apply_spec_key(WeightFamilySpec& spec, std::string_view key, std::string_view value) {
    auto parse_double = [&](std::string_view v) {
        double x = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc{} || p != v.data() + v.size())
            throw ConfigError("bad numeric value '" + std::string(v) + "' for key '" +
                              std::string(key) + "'");
        return x;
    };
    if (key == "kind") {
        if (value == "constant") spec.kind = WeightKind::constant;
        else if (value == "step") spec.kind = WeightKind::step;
        else if (value == "power") spec.kind = WeightKind::power;
        else if (value == "one_sided_power") spec.kind = WeightKind::one_sided_power;
        else if (value == "cascade") spec.kind = WeightKind::cascade;
        else throw ConfigError("unknown weight kind '" + std::string(value) + "'");
    } else if (key == "alpha") {
        spec.alpha = parse_double(value);
    } else if (key == "orientation") {
        if (value == "decreasing") spec.orientation = Orientation::decreasing;
        else if (value == "increasing") spec.orientation = Orientation::increasing;
        else throw ConfigError("unknown orientation '" + std::string(value) + "'");
    } else if (key == "theta") {
        spec.theta = parse_double(value);
    } else if (key == "seed") {
        spec.seed = static_cast<std::uint64_t>(parse_double(value));
    } else if (key == "depth") {
        spec.depth = static_cast<int>(parse_double(value));
    } else {
        throw ConfigError("unknown weight spec key '" + std::string(key) + "'");
    }
}

inline WeightFamilySpec parse_weight_spec(std::string_view text) {
    WeightFamilySpec spec;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && text[pos] == ' ') ++pos;
        if (pos >= text.size()) break;
        std::size_t end = text.find(' ', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view tok = text.substr(pos, end - pos);
        pos = end;
        std::size_t eq = tok.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("weight spec token '" + std::string(tok) + "' is not key=value");
        apply_spec_key(spec, tok.substr(0, eq), tok.substr(eq + 1));
    }
    return spec;
}

}  // namespace osmt
