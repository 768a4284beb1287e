#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "osmt/grid.hpp"
#include "osmt/operators.hpp"
#include "osmt/weight.hpp"

namespace osmt {

// One-sided weight characteristics. The dyadic lattice is the default family;
// the sliding family ranges over all grid-aligned even-length windows and is
// provided as a fidelity check (it dominates the dyadic value).

/// sup_I <w>_{I-} <sigma>_{I+}^(p-1)
inline double ap_plus(const Weight& w, IntervalFamily mode = IntervalFamily::dyadic) {
    const auto& grid = w.grid();
    const double p = w.exponent();
    const std::int64_t n = grid.cell_count();
    const double h = grid.cell_width();
    double best = 0.0;
    if (mode == IntervalFamily::dyadic) {
        for (int l = 0; l <= grid.depth() - 1; ++l) {
            const std::int64_t m = std::int64_t{1} << (grid.depth() - l);
            for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
                const std::int64_t lo = k * m;
                const double aw = w.base().integral_cells(lo, lo + m / 2) / (m / 2 * h);
                const double as = w.dual_function().integral_cells(lo + m / 2, lo + m) / (m / 2 * h);
                best = std::max(best, aw * std::pow(as, p - 1.0));
            }
        }
    } else {
        for (std::int64_t m = 1; m <= n / 2; ++m)
            for (std::int64_t s = 0; s + 2 * m <= n; ++s) {
                const double aw = w.base().integral_cells(s, s + m) / (m * h);
                const double as = w.dual_function().integral_cells(s + m, s + 2 * m) / (m * h);
                best = std::max(best, aw * std::pow(as, p - 1.0));
            }
    }
    return best;
}

/// Mirror of ap_plus with the roles of the halves swapped.
inline double ap_minus(const Weight& w, IntervalFamily mode = IntervalFamily::dyadic) {
    const auto& grid = w.grid();
    const double p = w.exponent();
    const std::int64_t n = grid.cell_count();
    const double h = grid.cell_width();
    double best = 0.0;
    if (mode == IntervalFamily::dyadic) {
        for (int l = 0; l <= grid.depth() - 1; ++l) {
            const std::int64_t m = std::int64_t{1} << (grid.depth() - l);
            for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
                const std::int64_t lo = k * m;
                const double aw = w.base().integral_cells(lo + m / 2, lo + m) / (m / 2 * h);
                const double as = w.dual_function().integral_cells(lo, lo + m / 2) / (m / 2 * h);
                best = std::max(best, aw * std::pow(as, p - 1.0));
            }
        }
    } else {
        for (std::int64_t m = 1; m <= n / 2; ++m)
            for (std::int64_t s = 0; s + 2 * m <= n; ++s) {
                const double aw = w.base().integral_cells(s + m, s + 2 * m) / (m * h);
                const double as = w.dual_function().integral_cells(s, s + m) / (m * h);
                best = std::max(best, aw * std::pow(as, p - 1.0));
            }
    }
    return best;
}

/// || M_- w / w ||_inf over cells; cells where the M_- sup is empty contribute 0.
inline double a1_plus(const Weight& w, IntervalFamily mode = IntervalFamily::dyadic) {
    const GridFunction m = max_minus(w.base(), mode);
    double best = 0.0;
    for (std::int64_t i = 0; i < m.size(); ++i) best = std::max(best, m[i] / w.base()[i]);
    return best;
}

namespace detail {

// sup_I w(I)^{-1} int_I M_{-/+}(w 1_I) dx over dyadic I at levels 0..N-1.
// The inner maximal function is evaluated with the clipped mass of w on
// J^{-/+} cap I via the global prefix sums.
inline double ainf_one_sided(const Weight& w, bool plus) {
    const auto& grid = w.grid();
    const int N = grid.depth();
    const double h = grid.cell_width();
    double best = 0.0;
    for (int l = 0; l <= N - 1; ++l) {
        const std::int64_t m = std::int64_t{1} << (N - l);
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
            const std::int64_t lo = k * m, hi = (k + 1) * m;
            double total = 0.0;
            for (std::int64_t x = lo; x < hi; ++x) {
                double mx = 0.0;
                for (int ll = 0; ll <= N - 1; ++ll) {
                    const std::int64_t mj = std::int64_t{1} << (N - ll);
                    const std::int64_t kj = x >> (N - ll);
                    const bool in_plus_half = ((x >> (N - ll - 1)) & 1) == 1;
                    // A_inf^+ pairs M_- (x in J+, averages over J-); the mirror
                    // pairs M_+ (x in J-, averages over J+).
                    if (plus != in_plus_half) continue;
                    const std::int64_t jl = kj * mj + (plus ? 0 : mj / 2);
                    const std::int64_t jh = jl + mj / 2;
                    const std::int64_t cl = std::max(jl, lo), ch = std::min(jh, hi);
                    if (ch <= cl) continue;
                    mx = std::max(mx, w.base().integral_cells(cl, ch) / (mj / 2 * h));
                }
                total += mx * h;
            }
            best = std::max(best, total / w.base().integral_cells(lo, hi));
        }
    }
    return best;
}

}  // namespace detail

/// sup_I w(I)^{-1} int_I M_-(w 1_I) dx, dyadic.
inline double ainf_plus(const Weight& w) { return detail::ainf_one_sided(w, true); }

/// Mirror with M_+ inside.
inline double ainf_minus(const Weight& w) { return detail::ainf_one_sided(w, false); }

}  // namespace osmt
