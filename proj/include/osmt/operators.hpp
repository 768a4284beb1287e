#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "osmt/errors.hpp"
#include "osmt/grid.hpp"
#include "osmt/rng.hpp"
#include "osmt/weight.hpp"

namespace osmt {

/// Coefficient of the L2-normalized Haar function on I:
/// <f, h_I> with h_I = (1_{I+} - 1_{I-}) / sqrt(|I|), positive on the right half.
inline double haar_coeff(const GridFunction& f, IntervalId id) {
    const auto& grid = f.grid();
    grid.require(id);
    if (id.level > grid.depth() - 1)
        throw std::out_of_range("interval " + id.str() + " has no children on this grid");
    const double plus = f.integral(id.right_half());
    const double minus = f.integral(id.left_half());
    return (plus - minus) / std::sqrt(id.width());
}

/// Multiplier signs in {-1, 0, +1}, stored densely for levels 0..depth-2;
/// zero marks an interval as excluded from the sum.
class SignPattern {
public:
    explicit SignPattern(DyadicGrid grid)
        : grid_(grid), values_(static_cast<std::size_t>(flat_count(grid.depth())), 0) {}

    static SignPattern zeros(DyadicGrid grid) { return SignPattern(grid); }

    static SignPattern all_plus(DyadicGrid grid) {
        SignPattern s(grid);
        std::fill(s.values_.begin(), s.values_.end(), std::int8_t{1});
        return s;
    }

    static SignPattern random(DyadicGrid grid, RngStream& rng) {
        SignPattern s(grid);
        for (auto& v : s.values_) v = static_cast<std::int8_t>(rng.sign());
        return s;
    }

    const DyadicGrid& grid() const { return grid_; }
    int max_level() const { return grid_.depth() - 2; }

    int at(IntervalId id) const {
        grid_.require(id);
        if (id.level > max_level()) return 0;
        return values_[static_cast<std::size_t>(id.flat())];
    }

    void set(IntervalId id, int value) {
        grid_.require(id);
        if (id.level > max_level())
            throw std::out_of_range("sign pattern only covers levels 0.." +
                                    std::to_string(max_level()));
        if (value < -1 || value > 1) throw std::invalid_argument("sign must be -1, 0 or +1");
        values_[static_cast<std::size_t>(id.flat())] = static_cast<std::int8_t>(value);
    }

    std::vector<IntervalId> support() const {
        std::vector<IntervalId> out;
        for (int l = 0; l <= max_level(); ++l)
            for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k)
                if (values_[static_cast<std::size_t>(IntervalId{l, k}.flat())] != 0)
                    out.push_back({l, k});
        return out;
    }

private:
    static std::int64_t flat_count(int depth) { return (std::int64_t{1} << (depth - 1)) - 1; }

    DyadicGrid grid_;
    std::vector<std::int8_t> values_;
};

/// Per-cell truncation threshold: a scale |I| participates at cell x iff
/// |I| > delta(x). Zero keeps every scale, +inf drops them all.
class TruncationProfile {
public:
    explicit TruncationProfile(DyadicGrid grid, double fill = 0.0)
        : grid_(grid), threshold_(static_cast<std::size_t>(grid.cell_count()), fill) {}

    static TruncationProfile none(DyadicGrid grid) { return TruncationProfile(grid, 0.0); }
    static TruncationProfile all_excluded(DyadicGrid grid) {
        return TruncationProfile(grid, std::numeric_limits<double>::infinity());
    }
    static TruncationProfile constant(DyadicGrid grid, double value) {
        return TruncationProfile(grid, value);
    }

    /// Per-cell values drawn from {0} + {2^-l : 0 <= l <= N} + {inf}.
    static TruncationProfile random_quantized(DyadicGrid grid, RngStream& rng) {
        TruncationProfile t(grid);
        for (auto& v : t.threshold_) {
            const std::int64_t pick = rng.uniform_int(-1, grid.depth() + 1);
            if (pick < 0)
                v = 0.0;
            else if (pick > grid.depth())
                v = std::numeric_limits<double>::infinity();
            else
                v = std::ldexp(1.0, -static_cast<int>(pick));
        }
        return t;
    }

    const DyadicGrid& grid() const { return grid_; }
    double at_cell(std::int64_t i) const { return threshold_[static_cast<std::size_t>(i)]; }
    void set_cell(std::int64_t i, double v) { threshold_[static_cast<std::size_t>(i)] = v; }
    bool passes(double interval_width, std::int64_t cell) const {
        return interval_width > threshold_[static_cast<std::size_t>(cell)];
    }

private:
    DyadicGrid grid_;
    std::vector<double> threshold_;
};

/// A sub-collection of intervals at levels 0..depth-2 with O(1) membership.
class IntervalSet {
public:
    explicit IntervalSet(DyadicGrid grid)
        : grid_(grid),
          member_(static_cast<std::size_t>((std::int64_t{1} << (grid.depth() - 1)) - 1), 0) {}

    static IntervalSet all(DyadicGrid grid) {
        IntervalSet s(grid);
        for (int l = 0; l <= grid.depth() - 2; ++l)
            for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) s.add({l, k});
        return s;
    }

    static IntervalSet of(DyadicGrid grid, const std::vector<IntervalId>& ids) {
        IntervalSet s(grid);
        for (auto id : ids) s.add(id);
        return s;
    }

    void add(IntervalId id) {
        grid_.require(id);
        if (id.level > grid_.depth() - 2)
            throw std::out_of_range("interval set only covers levels 0..depth-2");
        auto& m = member_[static_cast<std::size_t>(id.flat())];
        if (!m) {
            m = 1;
            items_.push_back(id);
        }
    }

    bool contains(IntervalId id) const {
        if (id.level > grid_.depth() - 2) return false;
        return member_[static_cast<std::size_t>(id.flat())] != 0;
    }

    /// Members in insertion order (factories insert level-major).
    const std::vector<IntervalId>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    const DyadicGrid& grid() const { return grid_; }

private:
    DyadicGrid grid_;
    std::vector<std::uint8_t> member_;
    std::vector<IntervalId> items_;
};

enum class IntervalFamily { dyadic, sliding };

// ---------------------------------------------------------------------------
// the one-sided martingale transform and its variants
//
// T f = sum_I eps_I <f, h_{I+}> h_{I-}, summed over levels 0..N-2 (finer
// intervals pair to zero against grid functions).

namespace detail {

// Per-level geometry: interval (l,k) spans m = 2^(N-l) cells starting at k*m;
// its grandchild quarter holds q = m/4 cells. h_{I+} lives on quarters 2,3 and
// h_{I-} on quarters 0,1, both with height 1/sqrt(|I|/2).
struct LevelGeom {
    std::int64_t m, q;
    double inv_sqrt_half;  // 1/sqrt(|I|/2)
    double width;          // |I|
    LevelGeom(int depth, int level)
        : m(std::int64_t{1} << (depth - level)),
          q(m / 4),
          inv_sqrt_half(1.0 / std::sqrt(std::ldexp(1.0, -(level + 1)))),
          width(std::ldexp(1.0, -level)) {}
};

inline void require_transform_grid(const DyadicGrid& g, const SignPattern& eps) {
    if (!(g == eps.grid())) throw std::invalid_argument("sign pattern grid mismatch");
}

}  // namespace detail

inline GridFunction transform(const GridFunction& f, const SignPattern& eps) {
    const auto& grid = f.grid();
    detail::require_transform_grid(grid, eps);
    const int N = grid.depth();
    std::vector<double> out(static_cast<std::size_t>(grid.cell_count()), 0.0);
    for (int l = 0; l <= N - 2; ++l) {
        const detail::LevelGeom geo(N, l);
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
            const int e = eps.at({l, k});
            if (e == 0) continue;
            const std::int64_t lo = k * geo.m;
            const double coeff = (f.integral_cells(lo + 3 * geo.q, lo + 4 * geo.q) -
                                  f.integral_cells(lo + 2 * geo.q, lo + 3 * geo.q)) *
                                 geo.inv_sqrt_half;
            const double val = e * coeff * geo.inv_sqrt_half;
            for (std::int64_t i = lo; i < lo + geo.q; ++i) out[static_cast<std::size_t>(i)] -= val;
            for (std::int64_t i = lo + geo.q; i < lo + 2 * geo.q; ++i)
                out[static_cast<std::size_t>(i)] += val;
        }
    }
    return {grid, std::move(out)};
}

/// T* g = sum_I eps_I <g, h_{I-}> h_{I+}; satisfies <Tf, g> = <f, T*g> in L2(dx).
inline GridFunction adjoint_transform(const GridFunction& g, const SignPattern& eps) {
    const auto& grid = g.grid();
    detail::require_transform_grid(grid, eps);
    const int N = grid.depth();
    std::vector<double> out(static_cast<std::size_t>(grid.cell_count()), 0.0);
    for (int l = 0; l <= N - 2; ++l) {
        const detail::LevelGeom geo(N, l);
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
            const int e = eps.at({l, k});
            if (e == 0) continue;
            const std::int64_t lo = k * geo.m;
            const double coeff = (g.integral_cells(lo + geo.q, lo + 2 * geo.q) -
                                  g.integral_cells(lo, lo + geo.q)) *
                                 geo.inv_sqrt_half;
            const double val = e * coeff * geo.inv_sqrt_half;
            for (std::int64_t i = lo + 2 * geo.q; i < lo + 3 * geo.q; ++i)
                out[static_cast<std::size_t>(i)] -= val;
            for (std::int64_t i = lo + 3 * geo.q; i < lo + 4 * geo.q; ++i)
                out[static_cast<std::size_t>(i)] += val;
        }
    }
    return {grid, std::move(out)};
}

/// Maximal truncation: at each cell, the largest |partial sum over levels 0..l|
/// across cutoff levels l. On a finite grid this equals the sup over all
/// per-point truncation profiles.
inline GridFunction maximal_truncation(const GridFunction& f, const SignPattern& eps) {
    const auto& grid = f.grid();
    detail::require_transform_grid(grid, eps);
    const int N = grid.depth();
    const std::size_t n = static_cast<std::size_t>(grid.cell_count());
    std::vector<double> partial(n, 0.0), best(n, 0.0);
    for (int l = 0; l <= N - 2; ++l) {
        const detail::LevelGeom geo(N, l);
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
            const int e = eps.at({l, k});
            if (e == 0) continue;
            const std::int64_t lo = k * geo.m;
            const double coeff = (f.integral_cells(lo + 3 * geo.q, lo + 4 * geo.q) -
                                  f.integral_cells(lo + 2 * geo.q, lo + 3 * geo.q)) *
                                 geo.inv_sqrt_half;
            const double val = e * coeff * geo.inv_sqrt_half;
            for (std::int64_t i = lo; i < lo + geo.q; ++i) partial[static_cast<std::size_t>(i)] -= val;
            for (std::int64_t i = lo + geo.q; i < lo + 2 * geo.q; ++i)
                partial[static_cast<std::size_t>(i)] += val;
        }
        for (std::size_t i = 0; i < n; ++i) best[i] = std::max(best[i], std::abs(partial[i]));
    }
    return {grid, std::move(best)};
}

/// T_delta: at x the sum keeps only scales |I| > delta(x); delta == 0
/// reproduces the full transform. Optionally restricted to a sub-collection.
inline GridFunction linearized_transform(const GridFunction& f, const SignPattern& eps,
                                         const TruncationProfile& delta,
                                         const IntervalSet* collection = nullptr) {
    const auto& grid = f.grid();
    detail::require_transform_grid(grid, eps);
    if (!(delta.grid() == grid)) throw std::invalid_argument("truncation profile grid mismatch");
    const int N = grid.depth();
    std::vector<double> out(static_cast<std::size_t>(grid.cell_count()), 0.0);
    for (int l = 0; l <= N - 2; ++l) {
        const detail::LevelGeom geo(N, l);
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
            if (collection && !collection->contains({l, k})) continue;
            const int e = eps.at({l, k});
            if (e == 0) continue;
            const std::int64_t lo = k * geo.m;
            const double coeff = (f.integral_cells(lo + 3 * geo.q, lo + 4 * geo.q) -
                                  f.integral_cells(lo + 2 * geo.q, lo + 3 * geo.q)) *
                                 geo.inv_sqrt_half;
            const double val = e * coeff * geo.inv_sqrt_half;
            for (std::int64_t i = lo; i < lo + geo.q; ++i)
                if (delta.passes(geo.width, i)) out[static_cast<std::size_t>(i)] -= val;
            for (std::int64_t i = lo + geo.q; i < lo + 2 * geo.q; ++i)
                if (delta.passes(geo.width, i)) out[static_cast<std::size_t>(i)] += val;
        }
    }
    return {grid, std::move(out)};
}

/// Restricted linearized adjoint: the pairing against h_{I-} only integrates
/// over cells whose threshold admits the scale |I|, so it is the exact adjoint
/// of the restricted linearized transform.
inline GridFunction linearized_adjoint_restricted(const GridFunction& g, const SignPattern& eps,
                                                  const TruncationProfile& delta,
                                                  const IntervalSet& collection) {
    const auto& grid = g.grid();
    detail::require_transform_grid(grid, eps);
    if (!(delta.grid() == grid)) throw std::invalid_argument("truncation profile grid mismatch");
    const int N = grid.depth();
    const double h = grid.cell_width();
    std::vector<double> out(static_cast<std::size_t>(grid.cell_count()), 0.0);
    for (IntervalId id : collection.items()) {
        const int e = eps.at(id);
        if (e == 0) continue;
        const detail::LevelGeom geo(N, id.level);
        const std::int64_t lo = id.index * geo.m;
        double coeff = 0.0;
        for (std::int64_t y = lo; y < lo + geo.q; ++y)
            if (delta.passes(geo.width, y)) coeff -= g[y];
        for (std::int64_t y = lo + geo.q; y < lo + 2 * geo.q; ++y)
            if (delta.passes(geo.width, y)) coeff += g[y];
        coeff *= h * geo.inv_sqrt_half;
        const double val = e * coeff * geo.inv_sqrt_half;
        for (std::int64_t i = lo + 2 * geo.q; i < lo + 3 * geo.q; ++i)
            out[static_cast<std::size_t>(i)] -= val;
        for (std::int64_t i = lo + 3 * geo.q; i < lo + 4 * geo.q; ++i)
            out[static_cast<std::size_t>(i)] += val;
    }
    return {grid, std::move(out)};
}

inline GridFunction linearized_adjoint(const GridFunction& g, const SignPattern& eps,
                                       const TruncationProfile& delta) {
    return linearized_adjoint_restricted(g, eps, delta, IntervalSet::all(g.grid()));
}

// ---------------------------------------------------------------------------
// one-sided maximal functions
//
// M_+ f(x) = sup { <|f|>_{I+} : x in I- }, and mirrored for M_-. The sup over
// an empty family is 0 (right/left edge cells in dyadic mode).

namespace detail {

inline GridFunction max_one_sided_dyadic(const GridFunction& f, bool plus) {
    const auto& grid = f.grid();
    const int N = grid.depth();
    const std::int64_t n = grid.cell_count();
    const GridFunction a = abs(f);
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        double best = 0.0;
        for (int l = 0; l < N; ++l) {
            const std::int64_t k = i >> (N - l);
            const bool in_minus = ((i >> (N - l - 1)) & 1) == 0;
            if (plus != in_minus) continue;  // M_+ needs x in I-, M_- needs x in I+
            const std::int64_t m = std::int64_t{1} << (N - l);
            const std::int64_t lo = k * m + (plus ? m / 2 : 0);
            best = std::max(best, a.integral_cells(lo, lo + m / 2) / (std::ldexp(1.0, -(l + 1))));
        }
        out[static_cast<std::size_t>(i)] = best;
    }
    return {grid, std::move(out)};
}

// Sliding variant over all grid-aligned windows [s, s+2m): for fixed half-width
// m the candidate averages form a windowed max, handled with a monotone deque.
inline GridFunction max_one_sided_sliding(const GridFunction& f, bool plus) {
    const auto& grid = f.grid();
    const std::int64_t n = grid.cell_count();
    const double h = grid.cell_width();
    const GridFunction a = abs(f);
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    std::vector<double> win;
    for (std::int64_t m = 1; m <= n / 2; ++m) {
        win.assign(static_cast<std::size_t>(n - m + 1), 0.0);
        for (std::int64_t j = 0; j + m <= n; ++j)
            win[static_cast<std::size_t>(j)] = a.integral_cells(j, j + m) / (m * h);
        std::deque<std::int64_t> dq;  // indices with decreasing win values
        if (plus) {
            // out[i] <- max win[j], j in [max(i+1, m), min(i+m, n-m)]
            const std::int64_t jlo_min = m, jhi_max = n - m;
            std::int64_t next = jhi_max;  // next candidate to push while scanning i downward
            for (std::int64_t i = n - 1; i >= 0; --i) {
                const std::int64_t jhi = std::min(i + m, jhi_max);
                const std::int64_t jlo = std::max(i + 1, jlo_min);
                while (next >= jlo && next <= jhi) {
                    while (!dq.empty() && win[static_cast<std::size_t>(dq.back())] <=
                                              win[static_cast<std::size_t>(next)])
                        dq.pop_back();
                    dq.push_back(next);
                    --next;
                }
                while (!dq.empty() && dq.front() > jhi) dq.pop_front();
                if (jlo <= jhi && !dq.empty())
                    out[static_cast<std::size_t>(i)] = std::max(
                        out[static_cast<std::size_t>(i)], win[static_cast<std::size_t>(dq.front())]);
            }
        } else {
            // out[i] <- max win[s], s in [max(0, i-2m+1), min(i-m, n-2m)]
            const std::int64_t shi_max = n - 2 * m;
            std::int64_t next = 0;
            for (std::int64_t i = 0; i < n; ++i) {
                const std::int64_t slo = std::max<std::int64_t>(0, i - 2 * m + 1);
                const std::int64_t shi = std::min(i - m, shi_max);
                while (next <= shi) {
                    while (!dq.empty() && win[static_cast<std::size_t>(dq.back())] <=
                                              win[static_cast<std::size_t>(next)])
                        dq.pop_back();
                    dq.push_back(next);
                    ++next;
                }
                while (!dq.empty() && dq.front() < slo) dq.pop_front();
                if (slo <= shi && !dq.empty())
                    out[static_cast<std::size_t>(i)] = std::max(
                        out[static_cast<std::size_t>(i)], win[static_cast<std::size_t>(dq.front())]);
            }
        }
    }
    return {grid, std::move(out)};
}

}  // namespace detail

inline GridFunction max_plus(const GridFunction& f,
                             IntervalFamily mode = IntervalFamily::dyadic) {
    return mode == IntervalFamily::dyadic ? detail::max_one_sided_dyadic(f, true)
                                          : detail::max_one_sided_sliding(f, true);
}

inline GridFunction max_minus(const GridFunction& f,
                              IntervalFamily mode = IntervalFamily::dyadic) {
    return mode == IntervalFamily::dyadic ? detail::max_one_sided_dyadic(f, false)
                                          : detail::max_one_sided_sliding(f, false);
}

/// Weighted one-sided maximal function: dyadic sup of mu-averages of |f| over
/// right halves, attached to the left halves.
inline GridFunction max_plus_weighted(const GridFunction& f, const Weight& mu) {
    const auto& grid = f.grid();
    if (!(grid == mu.grid())) throw std::invalid_argument("weight grid mismatch");
    const int N = grid.depth();
    const std::int64_t n = grid.cell_count();
    const GridFunction fmu = pointwise(f, mu.base(), [](double a, double b) {
        return std::abs(a) * b;
    });
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        double best = 0.0;
        for (int l = 0; l < N; ++l) {
            const std::int64_t k = i >> (N - l);
            if (((i >> (N - l - 1)) & 1) != 0) continue;  // need x in I-
            const std::int64_t m = std::int64_t{1} << (N - l);
            const std::int64_t lo = k * m + m / 2;
            const double mass = mu.base().integral_cells(lo, lo + m / 2);
            if (mass > 0.0) best = std::max(best, fmu.integral_cells(lo, lo + m / 2) / mass);
        }
        out[static_cast<std::size_t>(i)] = best;
    }
    return {grid, std::move(out)};
}

// ---------------------------------------------------------------------------
// dense oracle

struct DenseMatrix {
    std::int64_t n = 0;
    std::vector<double> a;  // row-major

    double& at(std::int64_t r, std::int64_t c) { return a[static_cast<std::size_t>(r * n + c)]; }
    double at(std::int64_t r, std::int64_t c) const {
        return a[static_cast<std::size_t>(r * n + c)];
    }

    std::vector<double> apply(std::span<const double> v) const {
        std::vector<double> out(static_cast<std::size_t>(n), 0.0);
        for (std::int64_t r = 0; r < n; ++r) {
            double s = 0.0;
            const double* row = a.data() + r * n;
            for (std::int64_t c = 0; c < n; ++c) s += row[c] * v[static_cast<std::size_t>(c)];
            out[static_cast<std::size_t>(r)] = s;
        }
        return out;
    }

    DenseMatrix transpose() const {
        DenseMatrix t{n, std::vector<double>(a.size(), 0.0)};
        for (std::int64_t r = 0; r < n; ++r)
            for (std::int64_t c = 0; c < n; ++c) t.at(c, r) = at(r, c);
        return t;
    }
};

/// The 2^N x 2^N matrix of the transform in the finest-cell basis; guarded to
/// depth <= 12.
inline DenseMatrix operator_matrix(const SignPattern& eps, const DyadicGrid& grid) {
    if (grid.depth() > 12)
        throw ResourceError("operator_matrix limited to depth <= 12, got " +
                            std::to_string(grid.depth()));
    const std::int64_t n = grid.cell_count();
    DenseMatrix mat{n, std::vector<double>(static_cast<std::size_t>(n * n), 0.0)};
    std::vector<double> basis(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t c = 0; c < n; ++c) {
        basis[static_cast<std::size_t>(c)] = 1.0;
        GridFunction col = transform(GridFunction(grid, basis), eps);
        for (std::int64_t r = 0; r < n; ++r) mat.at(r, c) = col[r];
        basis[static_cast<std::size_t>(c)] = 0.0;
    }
    return mat;
}

}  // namespace osmt
