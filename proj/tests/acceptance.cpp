// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.
// Every tolerance is pinned in code; fitted constants are computed from the
// suite itself and reported alongside the verdict.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "osmt/characteristics.hpp"
#include "osmt/corona.hpp"
#include "osmt/experiments.hpp"
#include "osmt/norms.hpp"
#include "osmt/operators.hpp"

using namespace osmt;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    if (!pass) ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

GridFunction random_function(const DyadicGrid& grid, RngStream& rng) {
    std::vector<double> v(static_cast<std::size_t>(grid.cell_count()));
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return {grid, std::move(v)};
}

Weight cascade(int depth, double theta, std::uint64_t seed, double p = 2.0) {
    WeightFamilySpec spec;
    spec.kind = WeightKind::cascade;
    spec.theta = theta;
    spec.seed = seed;
    spec.depth = depth;
    return generate_weight(spec, p);
}

double inner_dx(const GridFunction& f, const GridFunction& g) {
    double s = 0.0;
    for (std::int64_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
    return s * f.grid().cell_width();
}

// ---------------------------------------------------------------------------

// 1. transform / adjoint / linearized variants against the dense oracle
void criterion_1() {
    double worst = 0.0;
    RngStream rng(1001);
    for (int depth = 2; depth <= 6; ++depth) {
        const DyadicGrid grid(depth);
        const std::int64_t n = grid.cell_count();
        for (int trial = 0; trial < 20; ++trial) {
            const SignPattern eps = SignPattern::random(grid, rng);
            const GridFunction f = random_function(grid, rng);
            const TruncationProfile delta = TruncationProfile::random_quantized(grid, rng);
            const DenseMatrix mat = operator_matrix(eps, grid);

            // per-level matrices for the truncated oracle
            std::vector<DenseMatrix> level_mats;
            for (int l = 0; l <= depth - 2; ++l) {
                SignPattern only(grid);
                for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k)
                    only.set({l, k}, eps.at({l, k}));
                level_mats.push_back(operator_matrix(only, grid));
            }

            const auto mf = mat.apply(f.values());
            const GridFunction tf = transform(f, eps);
            const auto mtf = mat.transpose().apply(f.values());
            const GridFunction af = adjoint_transform(f, eps);
            for (std::int64_t i = 0; i < n; ++i) {
                worst = std::max(worst, std::abs(tf[i] - mf[static_cast<std::size_t>(i)]));
                worst = std::max(worst, std::abs(af[i] - mtf[static_cast<std::size_t>(i)]));
            }

            // truncated forward: row-gated sum of level matrices
            const GridFunction lt = linearized_transform(f, eps, delta);
            std::vector<double> oracle(static_cast<std::size_t>(n), 0.0);
            for (int l = 0; l <= depth - 2; ++l) {
                const auto part = level_mats[static_cast<std::size_t>(l)].apply(f.values());
                const double width = std::ldexp(1.0, -l);
                for (std::int64_t i = 0; i < n; ++i)
                    if (width > delta.at_cell(i))
                        oracle[static_cast<std::size_t>(i)] += part[static_cast<std::size_t>(i)];
            }
            for (std::int64_t i = 0; i < n; ++i)
                worst = std::max(worst, std::abs(lt[i] - oracle[static_cast<std::size_t>(i)]));

            // truncated adjoint: column-gated transposes
            const GridFunction la = linearized_adjoint(f, eps, delta);
            std::fill(oracle.begin(), oracle.end(), 0.0);
            for (int l = 0; l <= depth - 2; ++l) {
                const double width = std::ldexp(1.0, -l);
                std::vector<double> gated(static_cast<std::size_t>(n), 0.0);
                for (std::int64_t i = 0; i < n; ++i)
                    if (width > delta.at_cell(i)) gated[static_cast<std::size_t>(i)] = f[i];
                const auto part =
                    level_mats[static_cast<std::size_t>(l)].transpose().apply(gated);
                for (std::int64_t i = 0; i < n; ++i)
                    oracle[static_cast<std::size_t>(i)] += part[static_cast<std::size_t>(i)];
            }
            for (std::int64_t i = 0; i < n; ++i)
                worst = std::max(worst, std::abs(la[i] - oracle[static_cast<std::size_t>(i)]));

            // maximal truncation: sup over constant cutoffs of cumulative sums
            const GridFunction sharp = maximal_truncation(f, eps);
            std::vector<double> best(static_cast<std::size_t>(n), 0.0),
                partial(static_cast<std::size_t>(n), 0.0);
            for (int l = 0; l <= depth - 2; ++l) {
                const auto part = level_mats[static_cast<std::size_t>(l)].apply(f.values());
                for (std::int64_t i = 0; i < n; ++i) {
                    partial[static_cast<std::size_t>(i)] += part[static_cast<std::size_t>(i)];
                    best[static_cast<std::size_t>(i)] = std::max(
                        best[static_cast<std::size_t>(i)],
                        std::abs(partial[static_cast<std::size_t>(i)]));
                }
            }
            for (std::int64_t i = 0; i < n; ++i)
                worst = std::max(worst, std::abs(sharp[i] - best[static_cast<std::size_t>(i)]));
        }
    }
    report(1, worst <= 1e-12,
           "dense-oracle equivalence, N<=6, 100 trials: max deviation " + fmt(worst));
}

// 2. adjoint pairing with random truncations and collections at N = 8
void criterion_2() {
    const DyadicGrid grid(8);
    RngStream rng(1002);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const SignPattern eps = SignPattern::random(grid, rng);
        const GridFunction f = random_function(grid, rng);
        const GridFunction g = random_function(grid, rng);
        const TruncationProfile delta = TruncationProfile::random_quantized(grid, rng);
        std::vector<IntervalId> members;
        for (int l = 0; l <= grid.depth() - 2; ++l)
            for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k)
                if (rng.coin()) members.push_back({l, k});
        const IntervalSet K = IntervalSet::of(grid, members);
        const double lhs = inner_dx(linearized_transform(f, eps, delta, &K), g);
        const double rhs = inner_dx(f, linearized_adjoint_restricted(g, eps, delta, K));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    report(2, worst <= 1e-12, "adjoint pairing, N=8, 100 random (f,g,delta,K): max gap " +
                                  fmt(worst));
}

// 3. unweighted operator norm is exactly 1 for full sign patterns
void criterion_3() {
    double worst = 0.0;
    RngStream rng(1003);
    for (int depth = 4; depth <= 10; ++depth) {
        const DyadicGrid grid(depth);
        const Weight one(GridFunction::constant(grid, 1.0), 2.0);
        worst = std::max(worst, std::abs(op_norm_l2(SignPattern::all_plus(grid), one) - 1.0));
        worst = std::max(worst, std::abs(op_norm_l2(SignPattern::random(grid, rng), one) - 1.0));
    }
    report(3, worst <= 1e-8,
           "unweighted norm = 1 for full +-1 patterns, N=4..10: max |norm-1| " + fmt(worst));
}

// 4. duality identity on 200 seeded cascades
void criterion_4() {
    double worst = 0.0;
    RngStream rng(1004);
    for (int i = 0; i < 200; ++i) {
        const double theta = rng.uniform(0.05, 0.9);
        const std::uint64_t seed = static_cast<std::uint64_t>(rng.uniform_int(0, 1 << 30));
        for (double p : {1.5, 2.0, 3.0}) {
            const Weight w = cascade(8, theta, seed, p);
            const Weight sigma = dual_weight(w);
            const double lhs = ap_plus(w);
            const double rhs = std::pow(ap_minus(sigma), p - 1.0);
            worst = std::max(worst, std::abs(lhs - rhs) / std::max(lhs, rhs));
        }
    }
    report(4, worst <= 1e-10,
           "duality ap_plus(w,p) = ap_minus(sigma,p')^{p-1}, 200 cascades x p in {3/2,2,3}: "
           "max rel err " + fmt(worst));
}

// 5. ainf_minus(sigma) <= ap_plus(w,p)^{p'-1} on every generated weight
void criterion_5() {
    double worst_ratio = 0.0;
    int count = 0;
    auto check = [&](const Weight& w) {
        const double pp = conjugate_exponent(w.exponent());
        const Weight sigma = dual_weight(w);
        const double lhs = ainf_minus(sigma);
        const double rhs = std::pow(ap_plus(w), pp - 1.0);
        worst_ratio = std::max(worst_ratio, lhs / rhs);
        ++count;
    };
    RngStream rng(1005);
    for (int i = 0; i < 60; ++i) {
        const double theta = rng.uniform(0.05, 0.9);
        const std::uint64_t seed = static_cast<std::uint64_t>(rng.uniform_int(0, 1 << 30));
        for (double p : {1.5, 2.0, 3.0}) check(cascade(8, theta, seed, p));
    }
    for (double alpha = -0.95; alpha < 0.0; alpha += 0.1) {
        for (auto orient : {Orientation::decreasing, Orientation::increasing}) {
            WeightFamilySpec spec;
            spec.kind = WeightKind::power;
            spec.alpha = alpha;
            spec.orientation = orient;
            spec.depth = 10;
            for (double p : {1.5, 2.0, 3.0}) check(generate_weight(spec, p));
        }
    }
    for (auto kind : {WeightKind::step, WeightKind::one_sided_power, WeightKind::constant}) {
        WeightFamilySpec spec;
        spec.kind = kind;
        spec.alpha = kind == WeightKind::step ? 4.0 : -0.5;
        spec.depth = 8;
        for (double p : {1.5, 2.0, 3.0}) check(generate_weight(spec, p));
    }
    report(5, worst_ratio <= 1.0 + 1e-12,
           "ainf_minus(sigma) <= ap_plus^{p'-1} on " + std::to_string(count) +
               " generated weights: worst lhs/rhs " + fmt(worst_ratio));
}

// 6. one-sided support identity and the documented testing discrepancy
void criterion_6() {
    const DyadicGrid grid(6);
    const SignPattern eps = SignPattern::all_plus(grid);
    double worst_support = 0.0;
    for (double c : {1.0, -2.5, 7.0})
        for (int l = 0; l <= grid.depth(); ++l)
            for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
                const IntervalId id{l, k};
                const GridFunction out =
                    transform(scale(GridFunction::indicator(grid, id), c), eps);
                for (std::int64_t i = grid.cell_begin(id); i < grid.cell_end(id); ++i)
                    worst_support = std::max(worst_support, std::abs(out[i]));
            }
    const Weight one(GridFunction::constant(grid, 1.0), 2.0);
    const TestingReport rep = testing_constants(eps, one, one);
    const double norm = op_norm_l2(eps, one);
    const bool pass = worst_support == 0.0 && rep.forward_restricted == 0.0 &&
                      std::abs(norm - 1.0) <= 1e-8 && rep.forward_global >= 0.5;
    report(6, pass,
           "support identity exact (max " + fmt(worst_support) + "), restricted testing " +
               fmt(rep.forward_restricted) + ", norm " + fmt(norm) + ", global testing " +
               fmt(rep.forward_global) + " >= 0.5");
}

// 7 and 8 share the depth-12 decreasing power sweep
void criteria_7_8() {
    ExperimentConfig cfg;
    cfg.depth = 12;
    cfg.p = 2.0;
    cfg.seed = 2024;
    cfg.family.kind = WeightKind::power;
    cfg.family.orientation = Orientation::decreasing;
    cfg.sweep_param = "alpha";
    for (int i = 0; i < 19; ++i) cfg.sweep_values.push_back(-0.95 + 0.05 * i);
    cfg.family_size = 8;
    cfg.out_dir = (std::filesystem::temp_directory_path() / "osmt_acceptance_sweep").string();
    std::filesystem::remove_all(cfg.out_dir);

    const std::vector<SweepRow> rows = run_sweep(cfg);
    const SweepSummary s = summarize_sweep(rows);

    const bool slope_ok = s.slope_loglog >= -0.1 && s.slope_loglog <= 0.05;
    const bool span_ok = s.ap_decade_bins >= 2;
    report(7, slope_ok && span_ok,
           "L2 bound probe at N=12: slope " + fmt(s.slope_loglog) +
               " in [-0.1,0.05], characteristic span " + fmt(s.ap_span_decades) +
               " decades across " + std::to_string(s.ap_decade_bins) +
               " magnitude bins (>=2), suite constant sup ratio " + fmt(s.max_ratio_l2));

    const double spread = s.maximal_ratio_max / s.maximal_ratio_min;
    report(8, spread <= 20.0,
           "weak maximal probe band [" + fmt(s.maximal_ratio_min) + ", " +
               fmt(s.maximal_ratio_max) + "], spread " + fmt(spread) + " <= 20");
}

// 9 and 10 share twenty depth-10 cascade instances
struct CascadeInstance {
    Weight w;
    Weight sigma;
    SignPattern eps;
    GridFunction phi;
    std::vector<IntervalId> members;  // top-populated band with the root-average filter on
    int a;
};

std::vector<CascadeInstance> make_instances() {
    std::vector<CascadeInstance> out;
    RngStream rng(1009);
    const IntervalId root{0, 0};
    for (int i = 0; i < 20; ++i) {
        const double theta = rng.uniform(0.2, 0.7);
        const std::uint64_t seed = static_cast<std::uint64_t>(rng.uniform_int(0, 1 << 30));
        Weight w = cascade(10, theta, seed, 2.0);
        Weight sigma = dual_weight(w);
        const DyadicGrid grid = w.grid();
        int best_a = 0;
        std::size_t best = 0;
        for (int a = -16; a <= 16; ++a) {
            const auto k = slice_band(w, sigma, {root, a, 2.0, true, std::nullopt});
            if (k.size() > best) {
                best = k.size();
                best_a = a;
            }
        }
        auto members = slice_band(w, sigma, {root, best_a, 2.0, true, std::nullopt});
        SignPattern eps = SignPattern::zeros(grid);
        for (auto id : members) eps.set(id, rng.sign());
        std::vector<double> pv(static_cast<std::size_t>(grid.cell_count()), 0.0);
        for (std::int64_t c = grid.cell_begin(root); c < grid.cell_end(root); ++c)
            pv[static_cast<std::size_t>(c)] = rng.sign();
        out.push_back({std::move(w), std::move(sigma), std::move(eps),
                       GridFunction(grid, std::move(pv)), std::move(members), best_a});
    }
    return out;
}

void criterion_9(const std::vector<CascadeInstance>& instances) {
    const IntervalId root{0, 0};
    const std::vector<double> lam_lo{0.25, 0.5}, lam_hi{1.0, 2.0, 4.0, 8.0};
    // worst relative measure per instance per lambda, over delta = 0 plus 20
    // seeded random profiles
    std::vector<std::vector<double>> rel_lo, rel_hi;
    RngStream rng(1010);
    for (const auto& inst : instances) {
        const DyadicGrid grid = inst.w.grid();
        std::vector<double> lo(lam_lo.size(), 0.0), hi(lam_hi.size(), 0.0);
        for (int s = 0; s < 21; ++s) {
            const TruncationProfile delta =
                s == 0 ? TruncationProfile::none(grid)
                       : TruncationProfile::random_quantized(grid, rng);
            const DistributionProfile prof = distribution_profile(
                inst.eps, delta, inst.w, inst.sigma, inst.members, root, inst.phi, 2.0);
            auto at = [&](double lam) {
                for (std::size_t i = 0; i < prof.lambda.size(); ++i)
                    if (std::abs(prof.lambda[i] - lam) < 1e-9)
                        return prof.sigma_measure[i] / prof.sigma_root_plus;
                return 0.0;
            };
            for (std::size_t i = 0; i < lam_lo.size(); ++i)
                lo[i] = std::max(lo[i], at(lam_lo[i]));
            for (std::size_t i = 0; i < lam_hi.size(); ++i)
                hi[i] = std::max(hi[i], at(lam_hi[i]));
        }
        rel_lo.push_back(lo);
        rel_hi.push_back(hi);
    }
    // pooled exponential fit on lambda >= 1
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (const auto& hi : rel_hi)
        for (std::size_t i = 0; i < lam_hi.size(); ++i)
            if (hi[i] > 0.0) {
                const double x = lam_hi[i], y = std::log(hi[i]);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                ++cnt;
            }
    const double c_fit =
        cnt >= 2 && sxx * cnt - sx * sx > 0 ? -(sxy * cnt - sx * sy) / (sxx * cnt - sx * sx) : 0.0;
    double C_fit = 0.0;
    for (const auto& hi : rel_hi)
        for (std::size_t i = 0; i < lam_hi.size(); ++i)
            C_fit = std::max(C_fit, hi[i] / std::exp(-c_fit * lam_hi[i]));
    bool exp_ok = c_fit > 0.0;
    for (const auto& hi : rel_hi)
        for (std::size_t i = 0; i < lam_hi.size(); ++i)
            exp_ok = exp_ok && hi[i] <= C_fit * std::exp(-c_fit * lam_hi[i]) * (1 + 1e-12);
    // power regime at p = 2: exponent -2p'/(p+1) = -4/3, same envelope constant
    const double power_exponent = -4.0 / 3.0;
    bool pow_ok = true;
    double worst_pow = 0.0;
    for (const auto& lo : rel_lo)
        for (std::size_t i = 0; i < lam_lo.size(); ++i) {
            const double bound = C_fit * std::pow(lam_lo[i], power_exponent);
            worst_pow = std::max(worst_pow, lo[i] / bound);
            pow_ok = pow_ok && lo[i] <= bound * (1 + 1e-12);
        }
    report(9, exp_ok && pow_ok,
           "distribution profile, 20 cascades at N=10: c_fit " + fmt(c_fit) + " > 0, C_fit " +
               fmt(C_fit) + "; exponential regime bounded at lambda in {1,2,4,8}; power regime "
               "(exponent -4/3) worst measure/bound " + fmt(worst_pow));
}

void criterion_10(const std::vector<CascadeInstance>& instances) {
    const IntervalId root{0, 0};
    bool ok = true;
    std::string why;
    double worst_decomp = 0.0;
    RngStream rng(1011);
    for (const auto& inst : instances) {
        const DyadicGrid grid = inst.w.grid();
        // forest invariants on the unfiltered slice at the instance band
        const auto members =
            slice_band(inst.w, inst.sigma, {root, inst.a, 2.0, false, std::nullopt});
        if (members.empty()) continue;
        const CoronaForest forest = build_corona(inst.w, members, root);
        std::size_t assigned = 0;
        for (const auto& b : forest.buckets) assigned += b.size();
        if (assigned != members.size()) {
            ok = false;
            why = "bucket partition mismatch";
        }
        for (std::size_t s = 0; s < forest.stopping.size(); ++s) {
            const int parent = forest.stopping_parent[s];
            if (parent < 0) continue;
            const double child_avg = inst.w.base().average(forest.stopping[s].left_half());
            const double parent_avg = inst.w.base().average(
                forest.stopping[static_cast<std::size_t>(parent)].left_half());
            if (!(child_avg > 2.0 * parent_avg)) {
                ok = false;
                why = "stopping growth violated";
            }
        }
        for (std::size_t c = 0; c < forest.members.size(); ++c) {
            const IntervalId j = forest.members[c];
            const IntervalId stop =
                forest.stopping[static_cast<std::size_t>(forest.assignment[c])];
            if (!contains(stop.left_half(), j.left_half())) {
                ok = false;
                why = "assignment not covering";
            }
            for (std::size_t t = 0; t < forest.stopping.size(); ++t) {
                if (t == static_cast<std::size_t>(forest.assignment[c])) continue;
                const IntervalId other = forest.stopping[t].left_half();
                if (contains(other, j.left_half()) &&
                    strictly_contains(stop.left_half(), other)) {
                    ok = false;
                    why = "assignment not minimal";
                }
            }
        }
        // decomposition exactness under a default and a random truncation
        for (int s = 0; s < 2; ++s) {
            const TruncationProfile delta =
                s == 0 ? TruncationProfile::none(grid)
                       : TruncationProfile::random_quantized(grid, rng);
            const CoronaChainReport rep = corona_chain_check(
                inst.eps, inst.w, inst.sigma, 2.0, root, inst.a, &delta, &inst.phi);
            worst_decomp = std::max({worst_decomp, rep.decomposition_error, rep.layer_error});
        }
        // sub-band coverage and measure-conversion spread (root-average filter on)
        const auto filtered =
            slice_band(inst.w, inst.sigma, {root, inst.a, 2.0, true, std::nullopt});
        std::size_t covered = 0;
        const double spread_bound = std::exp2(2.0 / (2.0 - 1.0) + 2.0);
        for (int b = 0; b <= 60; ++b) {
            const auto band = slice_band(inst.w, inst.sigma, {root, inst.a, 2.0, true, b});
            covered += band.size();
            if (band.size() >= 2) {
                const auto [mn, mx] = band_conversion_range(inst.sigma, band);
                if (mx / mn > spread_bound) {
                    ok = false;
                    why = "conversion spread too large";
                }
            }
        }
        if (covered != filtered.size()) {
            ok = false;
            why = "sub-bands do not cover";
        }
    }
    ok = ok && worst_decomp <= 1e-12;
    report(10, ok,
           "corona invariants on 20 instances: partition, growth, minimality, coverage, "
           "conversion spread; max decomposition error " + fmt(worst_decomp) +
               (ok ? "" : " (" + why + ")"));
}

// 11. bootstrap of the level-set hypothesis on sub-band summand families
void criterion_11() {
    const IntervalId root{0, 0};
    RngStream rng(1012);
    int checked = 0;
    bool ok = true;
    std::string detail;
    for (int inst = 0; inst < 8; ++inst) {
        const double theta = rng.uniform(0.3, 0.7);
        const Weight w =
            cascade(10, theta, static_cast<std::uint64_t>(rng.uniform_int(0, 1 << 30)), 2.0);
        const Weight sigma = dual_weight(w);
        const DyadicGrid grid = w.grid();
        // most populated (a, b) sub-band
        int best_a = 0, best_b = 0;
        std::size_t best = 0;
        for (int a = -10; a <= 10; ++a)
            for (int b = 0; b <= 6; ++b) {
                const auto band = slice_band(w, sigma, {root, a, 2.0, true, b});
                if (band.size() > best) {
                    best = band.size();
                    best_a = a;
                    best_b = b;
                }
            }
        if (best < 4) continue;
        const auto band = slice_band(w, sigma, {root, best_a, 2.0, true, best_b});
        SignPattern eps = SignPattern::zeros(grid);
        for (auto id : band) eps.set(id, rng.sign());
        std::vector<double> pv(static_cast<std::size_t>(grid.cell_count()), 0.0);
        for (std::int64_t c = grid.cell_begin(root); c < grid.cell_end(root); ++c)
            pv[static_cast<std::size_t>(c)] = rng.sign();
        const GridFunction phi(grid, std::move(pv));
        const GridFunction wphi = multiply(w.base(), phi);
        const TruncationProfile delta = TruncationProfile::none(grid);

        // summand family of the restricted adjoint over the band
        std::vector<std::pair<IntervalId, GridFunction>> family;
        for (auto id : band)
            family.emplace_back(id, linearized_adjoint_restricted(
                                        wphi, eps, delta, IntervalSet::of(grid, {id})));

        // minimal admissible constant over the same samples the check draws
        const std::uint64_t jn_seed = 555 + static_cast<std::uint64_t>(inst);
        const int subsets = 40;
        auto min_admissible = [&](const std::vector<int>& sel, std::int64_t cells_of_j) {
            std::vector<double> acc(static_cast<std::size_t>(grid.cell_count()), 0.0);
            for (int c : sel)
                for (std::int64_t i = 0; i < grid.cell_count(); ++i)
                    acc[static_cast<std::size_t>(i)] += family[static_cast<std::size_t>(c)].second[i];
            for (auto& v : acc) v = std::abs(v);
            std::sort(acc.rbegin(), acc.rend());
            const std::size_t half = static_cast<std::size_t>(cells_of_j / 2);
            return half >= 1 ? acc[half - 1] : acc[0];
        };
        std::vector<int> all(family.size());
        std::iota(all.begin(), all.end(), 0);
        double C = min_admissible(all, grid.cell_count());
        RngStream subset_rng(jn_seed);
        for (int t = 0; t < subsets; ++t) {
            std::vector<int> sel;
            for (int c : all)
                if (subset_rng.coin()) sel.push_back(c);
            C = std::max(C, min_admissible(sel, grid.cell_count()));
        }
        for (int l = root.level; l <= grid.depth() - 2; ++l)
            for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
                const IntervalId j{l, k};
                std::vector<int> sel;
                for (int c : all)
                    if (contains(j, family[static_cast<std::size_t>(c)].first)) sel.push_back(c);
                if (sel.empty() || sel.size() == family.size()) continue;
                C = std::max(C, min_admissible(sel, grid.cell_end(j) - grid.cell_begin(j)));
            }

        JnOptions opts;
        opts.seed = jn_seed;
        opts.random_subsets = subsets;
        opts.lambda_grid = {2.0, 4.0, 8.0, 16.0};
        const JnReport rep = jn_bootstrap_check(family, root, C, opts);
        ++checked;
        if (!rep.hypothesis_holds) continue;  // vacuous for this instance
        if (!rep.conclusion_holds) {
            ok = false;
            detail = " violation at lambda " + fmt(rep.violations.front().lambda);
        }
    }
    report(11, ok && checked >= 4,
           "level-set bootstrap on " + std::to_string(checked) +
               " sub-band summand families at N=10, lambda in {2,4,8,16}" + detail);
}

// 12. weak-L1 constants of the truncated adjoint show no upward trend in N
void criterion_12() {
    std::vector<double> depths, consts;
    for (int depth : {6, 8, 10}) {
        const DyadicGrid grid(depth);
        const SignPattern unused = SignPattern::all_plus(grid);
        const double c = weak_l1_adjoint_probe(unused, TruncationProfile::none(grid), 100,
                                               777, /*randomize_pattern=*/true);
        depths.push_back(depth);
        consts.push_back(c);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < depths.size(); ++i) {
        sx += depths[i];
        sy += consts[i];
        sxx += depths[i] * depths[i];
        sxy += depths[i] * consts[i];
    }
    const double n = static_cast<double>(depths.size());
    const double slope = (sxy * n - sx * sy) / (sxx * n - sx * sx);
    const double c_fit = *std::max_element(consts.begin(), consts.end());
    report(12, slope <= 0.05,
           "weak-L1 adjoint constants at N={6,8,10}: {" + fmt(consts[0]) + ", " + fmt(consts[1]) +
               ", " + fmt(consts[2]) + "}, C_fit " + fmt(c_fit) + ", slope " + fmt(slope) +
               " <= 0.05");
}

// 13. byte-identical replay of a single-threaded run
void criterion_13() {
    namespace fs = std::filesystem;
    ExperimentConfig cfg;
    cfg.depth = 6;
    cfg.seed = 99;
    cfg.family.kind = WeightKind::power;
    cfg.sweep_param = "alpha";
    cfg.sweep_values = {-0.7, -0.4, -0.1};
    cfg.family_size = 4;
    cfg.threads = 1;
    auto read = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    const fs::path base = fs::temp_directory_path() / "osmt_acceptance_replay";
    fs::remove_all(base);
    cfg.out_dir = (base / "r1").string();
    run_sweep(cfg);
    cfg.out_dir = (base / "r2").string();
    run_sweep(cfg);
    const std::string a = read(base / "r1" / "records.jsonl");
    const std::string b = read(base / "r2" / "records.jsonl");
    report(13, !a.empty() && a == b,
           "replay determinism: records.jsonl byte-identical across runs (" +
               std::to_string(a.size()) + " bytes)");
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criteria_7_8();
    const auto instances = make_instances();
    criterion_9(instances);
    criterion_10(instances);
    criterion_11();
    criterion_12();
    criterion_13();
    if (failures == 0)
        std::printf("all 13 acceptance criteria passed\n");
    else
        std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
