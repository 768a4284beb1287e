#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "osmt/characteristics.hpp"
#include "osmt/errors.hpp"
#include "osmt/grid.hpp"
#include "osmt/operators.hpp"
#include "osmt/rng.hpp"
#include "osmt/weight.hpp"

namespace osmt {

/// Weighted Lp aggregate (sum |f|^p w dx)^(1/p) with dx the cell width.
inline double lp_norm(const GridFunction& f, const Weight& w, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm needs p >= 1");
    if (!(f.grid() == w.grid())) throw std::invalid_argument("grid mismatch");
    double s = 0.0;
    for (std::int64_t i = 0; i < f.size(); ++i)
        s += std::pow(std::abs(f[i]), p) * w.base()[i];
    return std::pow(s * f.grid().cell_width(), 1.0 / p);
}

/// Lebesgue-measure overload.
inline double lp_norm(const GridFunction& f, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm needs p >= 1");
    double s = 0.0;
    for (std::int64_t i = 0; i < f.size(); ++i) s += std::pow(std::abs(f[i]), p);
    return std::pow(s * f.grid().cell_width(), 1.0 / p);
}

/// Weak-Lp value together with the level attaining it; `witness` identifies the
/// test input when the report comes out of an estimator family.
struct WeakNormReport {
    double value = 0.0;
    double witness_lambda = 0.0;
    std::string witness;
};

/// max over distinct magnitudes v of |f| of v * w({|f| >= v})^(1/p); the
/// finite-grid realization of sup_lambda lambda w(|f| > lambda)^(1/p).
inline WeakNormReport weak_lp_norm(const GridFunction& f, const Weight& w, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("weak_lp_norm needs p >= 1");
    if (!(f.grid() == w.grid())) throw std::invalid_argument("grid mismatch");
    const std::int64_t n = f.size();
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::int64_t{0});
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        return std::abs(f[a]) > std::abs(f[b]);
    });
    WeakNormReport rep;
    const double h = f.grid().cell_width();
    double mass = 0.0;
    for (std::int64_t r = 0; r < n; ++r) {
        const double v = std::abs(f[order[static_cast<std::size_t>(r)]]);
        mass += w.base()[order[static_cast<std::size_t>(r)]] * h;
        if (r + 1 < n && std::abs(f[order[static_cast<std::size_t>(r + 1)]]) == v) continue;
        if (v <= 0.0) break;
        const double cand = v * std::pow(mass, 1.0 / p);
        if (cand > rep.value) {
            rep.value = cand;
            rep.witness_lambda = v;
        }
    }
    return rep;
}

inline WeakNormReport weak_lp_norm(const GridFunction& f, double p) {
    return weak_lp_norm(f, Weight(GridFunction::constant(f.grid(), 1.0), 2.0), p);
}

// ---------------------------------------------------------------------------
// exact L2 operator norms
//
// One weight: spectral norm of diag(sqrt w) M diag(1/sqrt w); two weights
// (the sigma-padded form at p = 2): spectral norm of diag(sqrt w) M
// diag(sqrt sigma). Scalings are normalized so that the two-weight value with
// sigma = w^{-1} equals the one-weight value. Power iteration on the normal
// operator with fast transform applies; dense SVD is the test oracle.

namespace detail {

struct ScaledOperator {
    const SignPattern& eps;
    std::vector<double> sqrt_out;  // multiplies the output side
    std::vector<double> sqrt_in;   // multiplies the input side

    GridFunction forward(const GridFunction& v) const {
        std::vector<double> in(static_cast<std::size_t>(v.size()));
        for (std::int64_t i = 0; i < v.size(); ++i)
            in[static_cast<std::size_t>(i)] = v[i] * sqrt_in[static_cast<std::size_t>(i)];
        GridFunction r = transform(GridFunction(v.grid(), std::move(in)), eps);
        std::vector<double> out(static_cast<std::size_t>(v.size()));
        for (std::int64_t i = 0; i < v.size(); ++i)
            out[static_cast<std::size_t>(i)] = r[i] * sqrt_out[static_cast<std::size_t>(i)];
        return {v.grid(), std::move(out)};
    }

    GridFunction adjoint(const GridFunction& v) const {
        std::vector<double> in(static_cast<std::size_t>(v.size()));
        for (std::int64_t i = 0; i < v.size(); ++i)
            in[static_cast<std::size_t>(i)] = v[i] * sqrt_out[static_cast<std::size_t>(i)];
        GridFunction r = adjoint_transform(GridFunction(v.grid(), std::move(in)), eps);
        std::vector<double> out(static_cast<std::size_t>(v.size()));
        for (std::int64_t i = 0; i < v.size(); ++i)
            out[static_cast<std::size_t>(i)] = r[i] * sqrt_in[static_cast<std::size_t>(i)];
        return {v.grid(), std::move(out)};
    }
};

inline double spectral_norm_power_iteration(const ScaledOperator& op, const DyadicGrid& grid,
                                            double rel_tol = 1e-10,
                                            std::int64_t max_iter = 100000) {
    const std::int64_t n = grid.cell_count();
    auto normalized = [&](std::vector<double> v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        s = std::sqrt(s);
        for (double& x : v) x /= s;
        return GridFunction(grid, std::move(v));
    };
    GridFunction v = normalized(std::vector<double>(static_cast<std::size_t>(n), 1.0));
    bool retried = false;
    double lam_prev = -1.0, lam = 0.0, residual = 0.0;
    for (std::int64_t it = 0; it < max_iter; ++it) {
        GridFunction z = op.adjoint(op.forward(v));
        double nz = 0.0, ray = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            nz += z[i] * z[i];
            ray += z[i] * v[i];
        }
        nz = std::sqrt(nz);
        if (nz < 1e-280) {
            if (!retried) {
                // all-ones start can be annihilated exactly; restart from a ramp
                std::vector<double> ramp(static_cast<std::size_t>(n));
                for (std::int64_t i = 0; i < n; ++i)
                    ramp[static_cast<std::size_t>(i)] = static_cast<double>(i + 1);
                v = normalized(std::move(ramp));
                retried = true;
                lam_prev = -1.0;
                continue;
            }
            return 0.0;
        }
        lam = ray;
        residual = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double d = z[i] - lam * v[i];
            residual += d * d;
        }
        residual = std::sqrt(residual);
        std::vector<double> next(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) next[static_cast<std::size_t>(i)] = z[i] / nz;
        v = GridFunction(grid, std::move(next));
        if (lam_prev >= 0.0 && std::abs(lam - lam_prev) <= rel_tol * std::max(lam, 1e-300) &&
            residual <= std::sqrt(rel_tol) * std::max(lam, 1e-300))
            return std::sqrt(lam);
        lam_prev = lam;
    }
    throw ConvergenceError("power iteration did not converge", residual);
}

}  // namespace detail

/// ||T||_{L2(w) -> L2(w)} for the pattern eps, exact to the iteration tolerance.
inline double op_norm_l2(const SignPattern& eps, const Weight& w) {
    const auto& grid = w.grid();
    detail::ScaledOperator op{eps, {}, {}};
    op.sqrt_out.resize(static_cast<std::size_t>(grid.cell_count()));
    op.sqrt_in.resize(static_cast<std::size_t>(grid.cell_count()));
    for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
        const double s = std::sqrt(w.base()[i]);
        op.sqrt_out[static_cast<std::size_t>(i)] = s;
        op.sqrt_in[static_cast<std::size_t>(i)] = 1.0 / s;
    }
    return detail::spectral_norm_power_iteration(op, grid);
}

/// Two-weight form: best constant in ||T(sigma f)||_{L2(w)} <= C ||f||_{L2(sigma)}.
inline double op_norm_l2(const SignPattern& eps, const Weight& w, const Weight& sigma) {
    const auto& grid = w.grid();
    if (!(grid == sigma.grid())) throw std::invalid_argument("grid mismatch");
    detail::ScaledOperator op{eps, {}, {}};
    op.sqrt_out.resize(static_cast<std::size_t>(grid.cell_count()));
    op.sqrt_in.resize(static_cast<std::size_t>(grid.cell_count()));
    for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
        op.sqrt_out[static_cast<std::size_t>(i)] = std::sqrt(w.base()[i]);
        op.sqrt_in[static_cast<std::size_t>(i)] = std::sqrt(sigma.base()[i]);
    }
    return detail::spectral_norm_power_iteration(op, grid);
}

// ---------------------------------------------------------------------------
// testing constants

/// Indicator-input testing quantities over all dyadic I at levels 0..N-2.
/// `restricted` keeps the outer cutoff 1_I as printed; `global` drops it;
/// `parent` enlarges the cutoff to the parent of I (for the root, the global
/// value). For this one-sided operator the restricted forward quantity
/// vanishes identically on sigma constant over I.
struct TestingReport {
    double forward_restricted = 0.0;
    double forward_global = 0.0;
    double forward_parent = 0.0;
    double adjoint_restricted = 0.0;
    double adjoint_global = 0.0;
    double adjoint_parent = 0.0;
    IntervalId witness_interval{};
};

inline TestingReport testing_constants(const SignPattern& eps, const Weight& w,
                                       const Weight& sigma) {
    const auto& grid = w.grid();
    if (!(grid == sigma.grid()) || !(grid == eps.grid()))
        throw std::invalid_argument("grid mismatch");
    const double h = grid.cell_width();
    TestingReport rep;
    double best_overall = -1.0;
    auto l2_over = [&](const GridFunction& g, const Weight& weight, std::int64_t lo,
                       std::int64_t hi) {
        double s = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) s += g[i] * g[i] * weight.base()[i];
        return std::sqrt(s * h);
    };
    for (int l = 0; l <= grid.depth() - 2; ++l) {
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
            const IntervalId id{l, k};
            const std::int64_t lo = grid.cell_begin(id), hi = grid.cell_end(id);
            const double sig_mass = sigma.mass(id), w_mass = w.mass(id);
            if (!(sig_mass > 0.0) || !(w_mass > 0.0)) continue;
            const GridFunction tf = transform(restrict_to(sigma.base(), id), eps);
            const GridFunction ta = adjoint_transform(restrict_to(w.base(), id), eps);
            std::int64_t plo = 0, phi = grid.cell_count();
            if (l > 0) {
                plo = grid.cell_begin(id.parent());
                phi = grid.cell_end(id.parent());
            }
            const double fr = l2_over(tf, w, lo, hi) / std::sqrt(sig_mass);
            const double fg = l2_over(tf, w, 0, grid.cell_count()) / std::sqrt(sig_mass);
            const double fp = l2_over(tf, w, plo, phi) / std::sqrt(sig_mass);
            const double ar = l2_over(ta, sigma, lo, hi) / std::sqrt(w_mass);
            const double ag = l2_over(ta, sigma, 0, grid.cell_count()) / std::sqrt(w_mass);
            const double ap = l2_over(ta, sigma, plo, phi) / std::sqrt(w_mass);
            rep.forward_restricted = std::max(rep.forward_restricted, fr);
            rep.forward_global = std::max(rep.forward_global, fg);
            rep.forward_parent = std::max(rep.forward_parent, fp);
            rep.adjoint_restricted = std::max(rep.adjoint_restricted, ar);
            rep.adjoint_global = std::max(rep.adjoint_global, ag);
            rep.adjoint_parent = std::max(rep.adjoint_parent, ap);
            const double here = std::max({fr, fg, ar, ag});
            if (here > best_overall) {
                best_overall = here;
                rep.witness_interval = id;
            }
        }
    }
    return rep;
}

/// Lower-bound estimate of the weak-type testing constant of M_+ in the
/// two-weight form: sup over indicators f = 1_{I+} plus seeded random
/// nonnegative functions of weak(M_+(sigma f), w, p) / ||f||_{Lp(sigma)}.
inline double maximal_weak_testing(const Weight& w, const Weight& sigma, double p,
                                   int family_size = 0, std::uint64_t seed = 0) {
    if (!(p > 1.0)) throw std::invalid_argument("maximal_weak_testing needs p > 1");
    const auto& grid = w.grid();
    if (!(grid == sigma.grid())) throw std::invalid_argument("grid mismatch");
    double best = 0.0;
    auto consider = [&](const GridFunction& f) {
        const double den = lp_norm(f, sigma, p);
        if (den <= 0.0) return;  // sigma f vanishes; skip
        const GridFunction g = max_plus(multiply(sigma.base(), f));
        best = std::max(best, weak_lp_norm(g, w, p).value / den);
    };
    for (int l = 0; l <= grid.depth() - 1; ++l)
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k)
            consider(GridFunction::indicator(grid, IntervalId{l, k}.right_half()));
    RngStream rng(seed);
    for (int t = 0; t < family_size; ++t) {
        std::vector<double> v(static_cast<std::size_t>(grid.cell_count()));
        for (auto& x : v) x = rng.uniform();
        consider(GridFunction(grid, std::move(v)));
    }
    return best;
}

/// Lower-bound estimate of the one-weight weak norm of the maximal truncation.
inline double tsharp_weak_norm_estimate(const SignPattern& eps, const Weight& w, double p,
                                        int family_size = 0, std::uint64_t seed = 0) {
    const auto& grid = w.grid();
    double best = 0.0;
    auto consider = [&](const GridFunction& f) {
        const double den = lp_norm(f, w, p);
        if (den <= 0.0) return;
        best = std::max(best, weak_lp_norm(maximal_truncation(f, eps), w, p).value / den);
    };
    for (int l = 0; l <= grid.depth() - 1; ++l)
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k)
            consider(GridFunction::indicator(grid, IntervalId{l, k}.right_half()));
    RngStream rng(seed);
    for (int t = 0; t < family_size; ++t) {
        std::vector<double> v(static_cast<std::size_t>(grid.cell_count()));
        for (auto& x : v) x = rng.normal();
        consider(GridFunction(grid, std::move(v)));
    }
    return best;
}

// ---------------------------------------------------------------------------
// linearized testing search

namespace detail {

struct LinearizedTestingState {
    std::vector<int> sign;    // +-1 per cell of the testing interval
    std::vector<int> cutoff;  // -1 => 0 (all scales), 0..N => 2^-l, N+1 => +inf
};

inline double linearized_testing_objective(const SignPattern& eps, const Weight& w,
                                           const Weight& sigma, double p, IntervalId i0,
                                           const LinearizedTestingState& st) {
    const auto& grid = w.grid();
    const std::int64_t lo = grid.cell_begin(i0), hi = grid.cell_end(i0);
    const double pp = conjugate_exponent(p);
    std::vector<double> wphi(static_cast<std::size_t>(grid.cell_count()), 0.0);
    TruncationProfile delta = TruncationProfile::all_excluded(grid);
    for (std::int64_t i = lo; i < hi; ++i) {
        const std::size_t c = static_cast<std::size_t>(i - lo);
        wphi[static_cast<std::size_t>(i)] = w.base()[i] * st.sign[c];
        const int cut = st.cutoff[c];
        if (cut < 0)
            delta.set_cell(i, 0.0);
        else if (cut > grid.depth())
            delta.set_cell(i, std::numeric_limits<double>::infinity());
        else
            delta.set_cell(i, std::ldexp(1.0, -cut));
    }
    const GridFunction g = linearized_adjoint(GridFunction(grid, std::move(wphi)), eps, delta);
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) s += std::pow(std::abs(g[i]), pp) * sigma.base()[i];
    const double num = std::pow(s * grid.cell_width(), 1.0 / pp);
    return num / std::pow(w.mass(i0), 1.0 / pp);
}

}  // namespace detail

/// Lower-bound estimate of the localized linearized-adjoint testing quantity at
/// the interval i0: maximize ||1_{i0} T*_delta(w phi)||_{Lp'(sigma)} /
/// w(i0)^{1/p'} over phi in {+-1}^{cells(i0)} (zero outside) and quantized
/// truncations. Coordinate ascent with seeded restarts, bounded by `budget`
/// objective evaluations; exhaustive over sign patterns x constant cutoffs when
/// i0 has at most 12 cells (plus joint per-cell cutoffs up to 4 cells).
inline double linearized_testing(const SignPattern& eps, const Weight& w, const Weight& sigma,
                                 double p, IntervalId i0, long budget = 2000,
                                 std::uint64_t seed = 0) {
    const auto& grid = w.grid();
    grid.require(i0);
    if (i0.level > grid.depth() - 2)
        throw std::out_of_range("testing interval must have level <= depth-2");
    const std::int64_t cells = grid.cell_end(i0) - grid.cell_begin(i0);
    const int N = grid.depth();
    const std::vector<int> cut_values = [&] {
        std::vector<int> v{-1};  // 0 threshold: all scales pass
        for (int l = 0; l <= N; ++l) v.push_back(l);
        v.push_back(N + 1);  // +inf
        return v;
    }();
    auto objective = [&](const detail::LinearizedTestingState& st) {
        return detail::linearized_testing_objective(eps, w, sigma, p, i0, st);
    };

    double best = 0.0;
    if (cells <= 12) {
        // oracle path: exhaustive signs x constant cutoffs
        detail::LinearizedTestingState st;
        st.sign.assign(static_cast<std::size_t>(cells), 1);
        st.cutoff.assign(static_cast<std::size_t>(cells), -1);
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cells); ++mask) {
            for (std::int64_t c = 0; c < cells; ++c)
                st.sign[static_cast<std::size_t>(c)] = (mask >> c) & 1 ? -1 : 1;
            for (int cut : cut_values) {
                std::fill(st.cutoff.begin(), st.cutoff.end(), cut);
                best = std::max(best, objective(st));
            }
        }
        if (cells <= 4) {
            // joint per-cell cutoffs
            const std::size_t q = cut_values.size();
            std::vector<std::size_t> pick(static_cast<std::size_t>(cells), 0);
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cells); ++mask) {
                for (std::int64_t c = 0; c < cells; ++c)
                    st.sign[static_cast<std::size_t>(c)] = (mask >> c) & 1 ? -1 : 1;
                std::fill(pick.begin(), pick.end(), 0);
                while (true) {
                    for (std::int64_t c = 0; c < cells; ++c)
                        st.cutoff[static_cast<std::size_t>(c)] = cut_values[pick[static_cast<std::size_t>(c)]];
                    best = std::max(best, objective(st));
                    std::int64_t c = 0;
                    while (c < cells && ++pick[static_cast<std::size_t>(c)] == q) {
                        pick[static_cast<std::size_t>(c)] = 0;
                        ++c;
                    }
                    if (c == cells) break;
                }
            }
        }
        return best;
    }

    // coordinate ascent with restarts
    RngStream rng(seed);
    long evals = 0;
    bool first_restart = true;
    while (evals <= budget) {
        detail::LinearizedTestingState st;
        st.sign.assign(static_cast<std::size_t>(cells), 1);
        st.cutoff.assign(static_cast<std::size_t>(cells), -1);
        if (!first_restart) {
            for (auto& s : st.sign) s = rng.sign();
            for (auto& c : st.cutoff)
                c = cut_values[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(cut_values.size()) - 1))];
        }
        first_restart = false;
        double cur = objective(st);
        ++evals;
        best = std::max(best, cur);
        bool improved = true;
        while (improved && evals <= budget) {
            improved = false;
            for (std::int64_t c = 0; c < cells && evals <= budget; ++c) {
                auto& s = st.sign[static_cast<std::size_t>(c)];
                s = -s;
                const double cand = objective(st);
                ++evals;
                if (cand > cur) {
                    cur = cand;
                    improved = true;
                } else {
                    s = -s;
                }
            }
            for (std::int64_t c = 0; c < cells && evals <= budget; ++c) {
                auto& cut = st.cutoff[static_cast<std::size_t>(c)];
                const int keep = cut;
                int arg = keep;
                for (int cand_cut : cut_values) {
                    if (cand_cut == keep) continue;
                    cut = cand_cut;
                    const double cand = objective(st);
                    ++evals;
                    if (cand > cur) {
                        cur = cand;
                        arg = cand_cut;
                        improved = true;
                    }
                    if (evals > budget) break;
                }
                cut = arg;
            }
            best = std::max(best, cur);
        }
    }
    return best;
}

/// Empirical weak-L1 constant of the linearized adjoint over random inputs and
/// random quantized truncations; the supplied profile is used for the first
/// trial. With randomize_pattern the multiplier signs are redrawn per trial.
inline double weak_l1_adjoint_probe(const SignPattern& eps, const TruncationProfile& delta,
                                    int trials, std::uint64_t seed,
                                    bool randomize_pattern = false) {
    const auto& grid = eps.grid();
    RngStream rng(seed);
    double best = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> v(static_cast<std::size_t>(grid.cell_count()));
        for (auto& x : v) x = rng.normal();
        GridFunction f(grid, std::move(v));
        const TruncationProfile prof =
            t == 0 ? delta : TruncationProfile::random_quantized(grid, rng);
        const SignPattern pat = randomize_pattern ? SignPattern::random(grid, rng) : eps;
        const double den = lp_norm(f, 1.0);
        if (den <= 0.0) continue;
        best = std::max(best, weak_lp_norm(linearized_adjoint(f, pat, prof), 1.0).value / den);
    }
    return best;
}

}  // namespace osmt
