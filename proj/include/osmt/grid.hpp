#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

namespace osmt {

/// Address of one dyadic interval [k*2^-l, (k+1)*2^-l) inside [0,1).
struct IntervalId {
    int level = 0;
    std::int64_t index = 0;

    friend bool operator==(const IntervalId&, const IntervalId&) = default;

    double width() const { return std::ldexp(1.0, -level); }
    double left() const { return static_cast<double>(index) * width(); }
    double right() const { return static_cast<double>(index + 1) * width(); }

    IntervalId left_half() const { return {level + 1, 2 * index}; }
    IntervalId right_half() const { return {level + 1, 2 * index + 1}; }
    IntervalId parent() const {
        if (level == 0) throw std::out_of_range("root interval has no parent");
        return {level - 1, index >> 1};
    }
    bool is_left_child() const { return level > 0 && (index & 1) == 0; }
    bool is_right_child() const { return level > 0 && (index & 1) == 1; }

    /// Dense level-major id: 2^level - 1 + index.
    std::int64_t flat() const { return ((std::int64_t{1} << level) - 1) + index; }

    std::string str() const {
        return "(" + std::to_string(level) + "," + std::to_string(index) + ")";
    }
};

/// Containment as sets (dyadic intervals are nested or disjoint).
inline bool contains(IntervalId outer, IntervalId inner) {
    if (outer.level > inner.level) return false;
    return (inner.index >> (inner.level - outer.level)) == outer.index;
}

inline bool strictly_contains(IntervalId outer, IntervalId inner) {
    return outer.level < inner.level && contains(outer, inner);
}

/// The finite dyadic tree on [0,1): levels 0..depth, 2^depth cells of width 2^-depth.
class DyadicGrid {
public:
    explicit DyadicGrid(int depth) : depth_(depth) {
        if (depth < 2 || depth > 26)
            throw std::invalid_argument("grid depth must be in [2, 26], got " +
                                        std::to_string(depth));
    }

    int depth() const { return depth_; }
    std::int64_t cell_count() const { return std::int64_t{1} << depth_; }
    double cell_width() const { return std::ldexp(1.0, -depth_); }

    bool contains(IntervalId id) const {
        return id.level >= 0 && id.level <= depth_ && id.index >= 0 &&
               id.index < (std::int64_t{1} << id.level);
    }

    void require(IntervalId id) const {
        if (!contains(id))
            throw std::out_of_range("interval " + id.str() + " not addressable at depth " +
                                    std::to_string(depth_));
    }

    std::int64_t cell_begin(IntervalId id) const { return id.index << (depth_ - id.level); }
    std::int64_t cell_end(IntervalId id) const { return (id.index + 1) << (depth_ - id.level); }

    IntervalId cell(std::int64_t i) const { return {depth_, i}; }

    /// Ancestor of cell i at the given level.
    IntervalId ancestor_of_cell(std::int64_t i, int level) const {
        return {level, i >> (depth_ - level)};
    }

    friend bool operator==(const DyadicGrid&, const DyadicGrid&) = default;

private:
    int depth_;
};

/// All intervals with level <= max_level, level-major then index-minor.
inline std::vector<IntervalId> enumerate_intervals(const DyadicGrid& grid, int max_level) {
    if (max_level < 0 || max_level > grid.depth())
        throw std::out_of_range("max_level out of range");
    std::vector<IntervalId> out;
    out.reserve((std::size_t{2} << max_level) - 1);
    for (int l = 0; l <= max_level; ++l)
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) out.push_back({l, k});
    return out;
}

/// Piecewise-constant real data on the finest cells, with prefix sums for O(1)
/// interval integrals. Immutable after construction.
class GridFunction {
public:
    GridFunction(DyadicGrid grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (std::ssize(values_) != grid_.cell_count())
            throw std::invalid_argument("value count does not match grid cell count");
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite cell value");
        build_prefix();
    }

    static GridFunction constant(DyadicGrid grid, double c) {
        return {grid, std::vector<double>(static_cast<std::size_t>(grid.cell_count()), c)};
    }

    static GridFunction zero(DyadicGrid grid) { return constant(grid, 0.0); }

    static GridFunction indicator(DyadicGrid grid, IntervalId id) {
        grid.require(id);
        std::vector<double> v(static_cast<std::size_t>(grid.cell_count()), 0.0);
        for (std::int64_t i = grid.cell_begin(id); i < grid.cell_end(id); ++i)
            v[static_cast<std::size_t>(i)] = 1.0;
        return {grid, std::move(v)};
    }

    const DyadicGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }
    std::int64_t size() const { return grid_.cell_count(); }

    /// Integral over a contiguous cell range [lo, hi).
    double integral_cells(std::int64_t lo, std::int64_t hi) const {
        if (hi <= lo) return 0.0;
        return (prefix_[static_cast<std::size_t>(hi)] - prefix_[static_cast<std::size_t>(lo)]) *
               grid_.cell_width();
    }

    double integral(IntervalId id) const {
        grid_.require(id);
        return integral_cells(grid_.cell_begin(id), grid_.cell_end(id));
    }

    double integral() const { return prefix_.back() * grid_.cell_width(); }

    double average(IntervalId id) const { return integral(id) / id.width(); }

private:
    void build_prefix() {
        prefix_.assign(values_.size() + 1, 0.0);
        for (std::size_t i = 0; i < values_.size(); ++i) prefix_[i + 1] = prefix_[i] + values_[i];
    }

    DyadicGrid grid_;
    std::vector<double> values_;
    std::vector<double> prefix_;  // raw cell sums; multiply by cell width for integrals
};

inline double interval_average(const GridFunction& f, IntervalId id) { return f.average(id); }
inline double interval_integral(const GridFunction& f, IntervalId id) { return f.integral(id); }

// pointwise helpers

inline GridFunction pointwise(const GridFunction& f, const GridFunction& g, auto&& op) {
    if (!(f.grid() == g.grid())) throw std::invalid_argument("grid mismatch");
    std::vector<double> v(static_cast<std::size_t>(f.size()));
    for (std::int64_t i = 0; i < f.size(); ++i)
        v[static_cast<std::size_t>(i)] = op(f[i], g[i]);
    return {f.grid(), std::move(v)};
}

inline GridFunction multiply(const GridFunction& f, const GridFunction& g) {
    return pointwise(f, g, [](double a, double b) { return a * b; });
}

inline GridFunction scale(const GridFunction& f, double c) {
    std::vector<double> v(f.values().begin(), f.values().end());
    for (double& x : v) x *= c;
    return {f.grid(), std::move(v)};
}

inline GridFunction abs(const GridFunction& f) {
    std::vector<double> v(f.values().begin(), f.values().end());
    for (double& x : v) x = std::abs(x);
    return {f.grid(), std::move(v)};
}

/// Restrict f to an interval (zero outside).
inline GridFunction restrict_to(const GridFunction& f, IntervalId id) {
    f.grid().require(id);
    std::vector<double> v(static_cast<std::size_t>(f.size()), 0.0);
    for (std::int64_t i = f.grid().cell_begin(id); i < f.grid().cell_end(id); ++i)
        v[static_cast<std::size_t>(i)] = f[i];
    return {f.grid(), std::move(v)};
}

// serialization: "depth=N" header, then one shortest-round-trip decimal per line

inline std::string format_double(double x) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline void write_grid_function(std::ostream& os, const GridFunction& f) {
    os << "depth=" << f.grid().depth() << '\n';
    for (double v : f.values()) os << format_double(v) << '\n';
}

inline GridFunction read_grid_function(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("depth=", 0) != 0)
        throw std::runtime_error("grid function stream: missing depth header");
    int depth = 0;
    auto [p, ec] = std::from_chars(line.data() + 6, line.data() + line.size(), depth);
    if (ec != std::errc{} || p != line.data() + line.size())
        throw std::runtime_error("grid function stream: malformed depth header");
    DyadicGrid grid(depth);
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(grid.cell_count()));
    for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
        if (!std::getline(is, line))
            throw std::runtime_error("grid function stream: expected " +
                                     std::to_string(grid.cell_count()) + " values, got " +
                                     std::to_string(i));
        double v = 0;
        auto [q, ec2] = std::from_chars(line.data(), line.data() + line.size(), v);
        if (ec2 != std::errc{} || q != line.data() + line.size())
            throw std::runtime_error("grid function stream: bad value at line " +
                                     std::to_string(i + 2));
        vals.push_back(v);
    }
    return {grid, std::move(vals)};
}

}  // namespace osmt
