#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "osmt/grid.hpp"
#include "osmt/norms.hpp"
#include "osmt/operators.hpp"
#include "osmt/rng.hpp"
#include "osmt/weight.hpp"

namespace osmt {

// ---------------------------------------------------------------------------
// interval band slicing
//
// The slice collects dyadic I inside root^- (levels <= N-2) whose one-sided
// product <sigma>_{I+}^{p-1} <w>_{I-} lies in the dyadic band (2^a, 2^{a+1}],
// optionally filtered by <w>_{I-} <= 2 <w>_{root-} and by the sub-band b
// pinning <w>_{I-} against the root average.

struct SliceSpec {
    IntervalId root{};
    int a = 0;
    double p = 2.0;
    bool enforce_root_average_bound = true;
    std::optional<int> b;
};

inline std::vector<IntervalId> slice_band(const Weight& w, const Weight& sigma,
                                          const SliceSpec& spec) {
    const auto& grid = w.grid();
    if (!(grid == sigma.grid())) throw std::invalid_argument("grid mismatch");
    grid.require(spec.root);
    if (spec.root.level > grid.depth() - 3)
        throw std::out_of_range("slice root must have level <= depth-3");
    const IntervalId root_minus = spec.root.left_half();
    const double root_avg = w.base().average(root_minus);
    std::vector<IntervalId> out;
    for (int l = spec.root.level + 1; l <= grid.depth() - 2; ++l) {
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
            const IntervalId id{l, k};
            if (!contains(root_minus, id)) continue;
            const double aw = w.base().average(id.left_half());
            const double as = sigma.base().average(id.right_half());
            const double prod = std::pow(as, spec.p - 1.0) * aw;
            if (!(std::exp2(static_cast<double>(spec.a)) < prod &&
                  prod <= std::exp2(static_cast<double>(spec.a + 1))))
                continue;
            if (spec.enforce_root_average_bound && !(aw <= 2.0 * root_avg)) continue;
            if (spec.b) {
                const double b = static_cast<double>(*spec.b);
                if (!(std::exp2(-b) * root_avg < aw && aw <= std::exp2(1.0 - b) * root_avg))
                    continue;
            }
            out.push_back(id);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// corona / stopping-time decomposition
//
// Generation 1 takes the members whose left halves are inclusion-maximal; each
// later generation descends to members whose left-half average of w more than
// doubles the stopping value, again taking maximal left halves. Every member J
// is assigned to the minimal stopping interval S with J^- inside S^-.

struct CoronaForest {
    std::vector<IntervalId> members;                  // the sliced collection, level-major
    std::vector<IntervalId> stopping;                 // all stopping intervals
    std::vector<int> generation;                      // per stopping interval, 1-based
    std::vector<int> stopping_parent;                 // index into `stopping`, -1 at roots
    std::vector<int> assignment;                      // per member, index into `stopping`
    std::vector<std::vector<int>> buckets;            // per stopping, member indices

    std::size_t generation_count() const {
        int g = 0;
        for (int x : generation) g = std::max(g, x);
        return static_cast<std::size_t>(g);
    }

    int chain_depth(int s) const {
        int d = 0;
        while (s >= 0) {
            ++d;
            s = stopping_parent[static_cast<std::size_t>(s)];
        }
        return d;
    }
};

namespace detail {

// maximal left halves within a candidate id set (flags indexed by flat id)
inline std::vector<int> maximal_left_halves(const DyadicGrid& grid,
                                            const std::vector<IntervalId>& members,
                                            const std::vector<int>& candidates) {
    std::vector<std::uint8_t> flag(static_cast<std::size_t>((std::int64_t{2} << grid.depth())),
                                   0);
    for (int c : candidates)
        flag[static_cast<std::size_t>(members[static_cast<std::size_t>(c)].left_half().flat())] = 1;
    std::vector<int> out;
    for (int c : candidates) {
        IntervalId cur = members[static_cast<std::size_t>(c)].left_half();
        bool dominated = false;
        while (cur.level > 0) {
            cur = cur.parent();
            if (flag[static_cast<std::size_t>(cur.flat())]) {
                dominated = true;
                break;
            }
        }
        if (!dominated) out.push_back(c);
    }
    return out;
}

}  // namespace detail

inline CoronaForest build_corona(const Weight& w, std::vector<IntervalId> members,
                                 IntervalId root) {
    const auto& grid = w.grid();
    grid.require(root);
    for (auto id : members)
        if (!contains(root, id) || id == root)
            throw std::invalid_argument("corona members must lie strictly inside the root");
    std::sort(members.begin(), members.end(), [](IntervalId a, IntervalId b) {
        return a.flat() < b.flat();
    });

    CoronaForest forest;
    forest.members = members;

    std::vector<int> all(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) all[i] = static_cast<int>(i);

    struct Work {
        int stopping_index;
        std::vector<int> inside;  // member indices with J^- inside this stopping's left half
    };
    std::vector<Work> queue;

    auto add_stopping = [&](int member_index, int parent, int gen,
                            const std::vector<int>& pool) {
        const IntervalId s = members[static_cast<std::size_t>(member_index)];
        const int idx = static_cast<int>(forest.stopping.size());
        forest.stopping.push_back(s);
        forest.generation.push_back(gen);
        forest.stopping_parent.push_back(parent);
        std::vector<int> inside;
        for (int c : pool)
            if (contains(s.left_half(), members[static_cast<std::size_t>(c)].left_half()))
                inside.push_back(c);
        queue.push_back({idx, std::move(inside)});
    };

    for (int c : detail::maximal_left_halves(grid, members, all)) add_stopping(c, -1, 1, all);

    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        const Work work = queue[qi];  // copy: queue may reallocate
        const IntervalId s = forest.stopping[static_cast<std::size_t>(work.stopping_index)];
        const double stop_avg = w.base().average(s.left_half());
        std::vector<int> bad;
        for (int c : work.inside) {
            const IntervalId j = forest.members[static_cast<std::size_t>(c)];
            if (j == s) continue;
            if (!strictly_contains(s.left_half(), j.left_half())) continue;
            if (w.base().average(j.left_half()) > 2.0 * stop_avg) bad.push_back(c);
        }
        const int gen = forest.generation[static_cast<std::size_t>(work.stopping_index)] + 1;
        for (int c : detail::maximal_left_halves(grid, forest.members, bad))
            add_stopping(c, work.stopping_index, gen, work.inside);
    }

    // assignment: minimal stopping S with J^- inside S^-
    std::vector<int> by_left_flat(static_cast<std::size_t>(std::int64_t{2} << grid.depth()), -1);
    for (std::size_t s = 0; s < forest.stopping.size(); ++s)
        by_left_flat[static_cast<std::size_t>(forest.stopping[s].left_half().flat())] =
            static_cast<int>(s);
    forest.assignment.assign(members.size(), -1);
    forest.buckets.assign(forest.stopping.size(), {});
    for (std::size_t c = 0; c < members.size(); ++c) {
        IntervalId cur = members[c].left_half();
        int found = -1;
        while (true) {
            const int s = by_left_flat[static_cast<std::size_t>(cur.flat())];
            if (s >= 0) {
                found = s;
                break;
            }
            if (cur.level == 0) break;
            cur = cur.parent();
        }
        if (found < 0)
            throw std::logic_error("corona assignment failed: no covering stopping interval");
        forest.assignment[c] = found;
        forest.buckets[static_cast<std::size_t>(found)].push_back(static_cast<int>(c));
    }
    return forest;
}

// ---------------------------------------------------------------------------
// distribution profile of the restricted linearized adjoint

struct DistributionProfile {
    std::vector<double> lambda;         // geometric grid, ratio sqrt(2)
    std::vector<double> sigma_measure;  // sigma({|g| > lambda * threshold_scale})
    double threshold_scale = 0.0;       // scale * <w>_{root-} (times 2^{1-b} in band mode)
    double sigma_root_plus = 0.0;       // sigma(root+)
    std::optional<int> band;            // set when the collection is a sub-band
    double band_conversion = 1.0;       // 2^{b/(p-1)} when band is set
    double power_exponent = 0.0;        // -2p'/(p+1)
    double c_fit = 0.0;                 // exponential decay rate fitted on lambda >= 1
    double C_fit = 0.0;                 // envelope constant on the exponential regime
    double power_C_fit = 0.0;           // envelope constant on the power regime
};

struct DistributionOptions {
    int min_exp2 = -8;       // lambda grid spans [2^min, 2^max]
    int max_exp2 = 8;
    double scale = 1.0;      // extra factor on the threshold
    std::optional<int> band; // evaluate thresholds in the sub-band normalization
};

inline DistributionProfile distribution_profile(const SignPattern& eps,
                                                const TruncationProfile& delta, const Weight& w,
                                                const Weight& sigma,
                                                const std::vector<IntervalId>& collection,
                                                IntervalId root, const GridFunction& phi,
                                                double p,
                                                const DistributionOptions& opts = {}) {
    const auto& grid = w.grid();
    grid.require(root);
    // |phi| must equal 1_{root}
    for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
        const bool inside = i >= grid.cell_begin(root) && i < grid.cell_end(root);
        const double expect = inside ? 1.0 : 0.0;
        if (std::abs(std::abs(phi[i]) - expect) > 0.0)
            throw std::invalid_argument("phi must satisfy |phi| = 1 on the root and 0 outside");
    }
    DistributionProfile prof;
    prof.band = opts.band;
    prof.band_conversion = opts.band ? std::exp2(static_cast<double>(*opts.band) / (p - 1.0)) : 1.0;
    const double root_avg = w.base().average(root.left_half());
    const double band_factor = opts.band ? std::exp2(1.0 - static_cast<double>(*opts.band)) : 1.0;
    prof.threshold_scale = opts.scale * band_factor * root_avg;
    prof.sigma_root_plus = sigma.mass(root.right_half());
    prof.power_exponent = -2.0 * conjugate_exponent(p) / (p + 1.0);

    const GridFunction g = linearized_adjoint_restricted(
        multiply(w.base(), phi), eps, delta, IntervalSet::of(grid, collection));

    const double h = grid.cell_width();
    for (int e2 = 2 * opts.min_exp2; e2 <= 2 * opts.max_exp2; ++e2) {  // ratio sqrt(2)
        const double lam = std::exp2(0.5 * e2);
        double meas = 0.0;
        for (std::int64_t i = 0; i < grid.cell_count(); ++i)
            if (std::abs(g[i]) > lam * prof.threshold_scale) meas += sigma.base()[i] * h;
        prof.lambda.push_back(lam);
        prof.sigma_measure.push_back(meas);
    }

    // least-squares decay rate on the exponential regime, then envelopes
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < prof.lambda.size(); ++i) {
        if (prof.lambda[i] < 1.0 || prof.sigma_measure[i] <= 0.0) continue;
        const double x = prof.lambda[i], y = std::log(prof.sigma_measure[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    if (cnt >= 2 && sxx * cnt - sx * sx > 0.0)
        prof.c_fit = -(sxy * cnt - sx * sy) / (sxx * cnt - sx * sx);
    for (std::size_t i = 0; i < prof.lambda.size(); ++i) {
        if (prof.sigma_measure[i] <= 0.0 || prof.sigma_root_plus <= 0.0) continue;
        const double lam = prof.lambda[i];
        const double rel = prof.sigma_measure[i] / prof.sigma_root_plus;
        if (lam >= 1.0)
            prof.C_fit = std::max(prof.C_fit, rel / std::exp(-prof.c_fit * lam));
        else
            prof.power_C_fit = std::max(prof.power_C_fit, rel / std::pow(lam, prof.power_exponent));
    }
    return prof;
}

// ---------------------------------------------------------------------------
// bootstrap of a level-set hypothesis into exponential decay
//
// Family members phi_I are supported on I and constant on the grandchildren of
// I. If every sampled sub-collection E' of subintervals of a dyadic J satisfies
// |{|sum phi_I| > C}| < |J|/2, the conclusion |{|sum phi_I| > (C+1) lambda}| <
// 2^{(1-lambda)/2} |root| is checked on a lambda grid.

struct JnViolation {
    std::string which;   // sample description
    double lambda = 0.0; // 0 for hypothesis failures
    double measure = 0.0;
    double bound = 0.0;
};

struct JnReport {
    bool hypothesis_holds = true;
    int samples_checked = 0;
    bool conclusion_holds = true;
    std::vector<JnViolation> violations;
};

struct JnOptions {
    int random_subsets = 40;
    std::uint64_t seed = 0;
    std::vector<double> lambda_grid{2.0, 4.0, 8.0, 16.0};
};

inline JnReport jn_bootstrap_check(const std::vector<std::pair<IntervalId, GridFunction>>& family,
                                   IntervalId root, double threshold_constant,
                                   const JnOptions& opts = {}) {
    if (family.empty()) return {};
    const auto& grid = family.front().second.grid();
    grid.require(root);
    const double h = grid.cell_width();
    for (const auto& [id, phi] : family) {
        if (id.level > grid.depth() - 2)
            throw std::invalid_argument("family member " + id.str() +
                                        " cannot be constant on grandchildren at this depth");
        for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
            const bool inside = i >= grid.cell_begin(id) && i < grid.cell_end(id);
            if (!inside && phi[i] != 0.0)
                throw std::invalid_argument("family member " + id.str() + " not supported on it");
        }
        // constant on grandchildren: equal values across each level-(l+2) block
        const std::int64_t m = grid.cell_end(id) - grid.cell_begin(id);
        const std::int64_t q = m / 4;
        for (int block = 0; block < 4; ++block) {
            const std::int64_t lo = grid.cell_begin(id) + block * q;
            for (std::int64_t i = lo + 1; i < lo + q; ++i)
                if (phi[i] != phi[lo])
                    throw std::invalid_argument("family member " + id.str() +
                                                " not constant on grandchildren");
        }
    }

    JnReport rep;
    auto sum_of = [&](const std::vector<int>& sel) {
        std::vector<double> acc(static_cast<std::size_t>(grid.cell_count()), 0.0);
        for (int c : sel) {
            const auto& phi = family[static_cast<std::size_t>(c)].second;
            for (std::int64_t i = 0; i < grid.cell_count(); ++i)
                acc[static_cast<std::size_t>(i)] += phi[i];
        }
        return acc;
    };
    auto measure_above = [&](const std::vector<double>& g, double t) {
        double m = 0.0;
        for (double v : g)
            if (std::abs(v) > t) m += h;
        return m;
    };
    auto check_hypothesis = [&](const std::vector<int>& sel, IntervalId over, std::string tag) {
        const auto g = sum_of(sel);
        const double meas = measure_above(g, threshold_constant);
        ++rep.samples_checked;
        if (!(meas < 0.5 * over.width())) {
            rep.hypothesis_holds = false;
            rep.violations.push_back({std::move(tag), 0.0, meas, 0.5 * over.width()});
        }
    };

    std::vector<int> all(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) all[i] = static_cast<int>(i);
    check_hypothesis(all, root, "full");

    RngStream rng(opts.seed);
    for (int t = 0; t < opts.random_subsets; ++t) {
        std::vector<int> sel;
        for (int c : all)
            if (rng.coin()) sel.push_back(c);
        check_hypothesis(sel, root, "subset#" + std::to_string(t));
    }
    // full sub-trees under each dyadic J below the root
    for (int l = root.level; l <= grid.depth() - 2; ++l) {
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
            const IntervalId j{l, k};
            if (!contains(root, j)) continue;
            std::vector<int> sel;
            for (int c : all)
                if (contains(j, family[static_cast<std::size_t>(c)].first)) sel.push_back(c);
            if (sel.empty() || sel.size() == family.size()) continue;
            check_hypothesis(sel, j, "subtree" + j.str());
        }
    }

    if (rep.hypothesis_holds) {
        const auto g = sum_of(all);
        for (double lam : opts.lambda_grid) {
            const double meas = measure_above(g, (threshold_constant + 1.0) * lam);
            const double bound = std::exp2(0.5 * (1.0 - lam)) * root.width();
            if (!(meas < bound)) {
                rep.conclusion_holds = false;
                rep.violations.push_back({"conclusion", lam, meas, bound});
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// corona chain verification
//
// Builds the band slice under the root (without the root-average filter),
// decomposes the restricted adjoint along the corona buckets, layers each
// piece by dyadic magnitude relative to the stopping average, and evaluates
// the localized testing quantity against 2^{a(p'-1)} [w]_{Ainf+} w(root).

struct CoronaChainReport {
    int a = 0;
    std::size_t member_count = 0;
    std::size_t stopping_count = 0;
    std::size_t generations = 0;
    int max_chain_depth = 0;
    double decomposition_error = 0.0;   // max |sum tau_S - full| over cells
    double layer_error = 0.0;           // max |sum_n X_{S,n} - tau_S| on supports
    double lhs = 0.0;                   // int_root |T*|^{p'} sigma dx
    double rhs = 0.0;                   // 2^{a(p'-1)} [w]_{Ainf+} w(root)
    double ratio = 0.0;
    std::vector<int> layer_index;       // the n values present
    std::vector<double> layer_norm_of_sum;   // ||sum_S X_{S,n}||_{p'(sigma)}
    std::vector<double> layer_sum_of_norms;  // (sum_S ||X_{S,n}||^{p'})^{1/p'}
    double triangle_total = 0.0;        // ||full||_{p'(sigma)}
};

inline CoronaChainReport corona_chain_check(const SignPattern& eps, const Weight& w,
                                            const Weight& sigma, double p, IntervalId root,
                                            int a,
                                            const TruncationProfile* delta_opt = nullptr,
                                            const GridFunction* phi_opt = nullptr) {
    const auto& grid = w.grid();
    const double pp = conjugate_exponent(p);
    const TruncationProfile delta =
        delta_opt ? *delta_opt : TruncationProfile::none(grid);
    GridFunction phi = phi_opt ? *phi_opt : GridFunction::indicator(grid, root);

    SliceSpec spec{root, a, p, /*enforce_root_average_bound=*/false, std::nullopt};
    const std::vector<IntervalId> members = slice_band(w, sigma, spec);

    CoronaChainReport rep;
    rep.a = a;
    rep.member_count = members.size();
    const GridFunction wphi = multiply(w.base(), phi);
    const GridFunction full =
        linearized_adjoint_restricted(wphi, eps, delta, IntervalSet::of(grid, members));

    const double h = grid.cell_width();
    auto lpp_sigma = [&](const std::vector<double>& g) {
        double s = 0.0;
        for (std::int64_t i = 0; i < grid.cell_count(); ++i)
            s += std::pow(std::abs(g[static_cast<std::size_t>(i)]), pp) * sigma.base()[i];
        return std::pow(s * h, 1.0 / pp);
    };

    if (members.empty()) {
        rep.rhs = std::exp2(a * (pp - 1.0)) * ainf_plus(w) * w.mass(root);
        return rep;
    }

    const CoronaForest forest = build_corona(w, members, root);
    rep.stopping_count = forest.stopping.size();
    rep.generations = forest.generation_count();
    for (std::size_t s = 0; s < forest.stopping.size(); ++s)
        rep.max_chain_depth = std::max(rep.max_chain_depth, forest.chain_depth(static_cast<int>(s)));

    std::vector<double> acc(static_cast<std::size_t>(grid.cell_count()), 0.0);
    std::map<int, std::vector<double>> layer_sum;           // n -> sum_S X_{S,n}
    std::map<int, double> layer_norm_pow;                   // n -> sum_S ||X_{S,n}||^{p'}
    for (std::size_t s = 0; s < forest.stopping.size(); ++s) {
        std::vector<IntervalId> bucket_ids;
        for (int c : forest.buckets[s])
            bucket_ids.push_back(forest.members[static_cast<std::size_t>(c)]);
        if (bucket_ids.empty()) continue;
        const GridFunction tau = linearized_adjoint_restricted(
            wphi, eps, delta, IntervalSet::of(grid, bucket_ids));
        const double stop_avg = w.base().average(forest.stopping[s].left_half());
        std::map<int, double> norms_pow_here;
        std::vector<double> recon(static_cast<std::size_t>(grid.cell_count()), 0.0);
        for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
            const double v = tau[i];
            acc[static_cast<std::size_t>(i)] += v;
            if (v == 0.0 || stop_avg <= 0.0) continue;
            // n with 2^{n-1} stop_avg < |v| <= 2^n stop_avg
            const int n = static_cast<int>(std::ceil(std::log2(std::abs(v) / stop_avg) - 1e-12));
            auto& slot = layer_sum[n];
            if (slot.empty()) slot.assign(static_cast<std::size_t>(grid.cell_count()), 0.0);
            slot[static_cast<std::size_t>(i)] += v;
            norms_pow_here[n] += std::pow(std::abs(v), pp) * sigma.base()[i] * h;
            recon[static_cast<std::size_t>(i)] += v;
        }
        for (auto& [n, val] : norms_pow_here) layer_norm_pow[n] += val;
        for (std::int64_t i = 0; i < grid.cell_count(); ++i)
            rep.layer_error = std::max(rep.layer_error,
                                       std::abs(recon[static_cast<std::size_t>(i)] - tau[i]));
    }
    for (std::int64_t i = 0; i < grid.cell_count(); ++i)
        rep.decomposition_error =
            std::max(rep.decomposition_error, std::abs(acc[static_cast<std::size_t>(i)] - full[i]));

    std::vector<double> full_restricted(static_cast<std::size_t>(grid.cell_count()), 0.0);
    for (std::int64_t i = grid.cell_begin(root); i < grid.cell_end(root); ++i)
        full_restricted[static_cast<std::size_t>(i)] = full[i];
    rep.triangle_total = lpp_sigma(full_restricted);
    rep.lhs = std::pow(rep.triangle_total, pp);
    rep.rhs = std::exp2(a * (pp - 1.0)) * ainf_plus(w) * w.mass(root);
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;

    for (const auto& [n, vec] : layer_sum) {
        rep.layer_index.push_back(n);
        rep.layer_norm_of_sum.push_back(lpp_sigma(vec));
        rep.layer_sum_of_norms.push_back(std::pow(layer_norm_pow[n], 1.0 / pp));
    }
    return rep;
}

/// Range of the conversion ratio sigma(I+)/|I| across a sub-band (the quantity
/// that the band structure pins to within a bounded factor).
inline std::pair<double, double> band_conversion_range(const Weight& sigma,
                                                       const std::vector<IntervalId>& band) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (IntervalId id : band) {
        const double r = sigma.mass(id.right_half()) / id.width();
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    return {lo, hi};
}

}  // namespace osmt
