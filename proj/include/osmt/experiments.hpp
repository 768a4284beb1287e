#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "osmt/characteristics.hpp"
#include "osmt/corona.hpp"
#include "osmt/errors.hpp"
#include "osmt/io.hpp"
#include "osmt/json_io.hpp"
#include "osmt/norms.hpp"
#include "osmt/operators.hpp"
#include "osmt/rng.hpp"
#include "osmt/weight.hpp"

namespace osmt {

// ---------------------------------------------------------------------------
// configuration

struct ExperimentConfig {
    int depth = 8;
    double p = 2.0;
    std::uint64_t seed = 1;
    int threads = 1;
    IntervalFamily mode = IntervalFamily::dyadic;
    std::string out_dir = "out";

    WeightFamilySpec family;
    std::optional<std::uint64_t> weight_seed;  // defaults to `seed`

    std::string sweep_param = "alpha";  // alpha | theta
    std::vector<double> sweep_values;
    std::string pattern = "all_plus";  // all_plus | random | search
    int family_size = 8;
    int trials = 100;
    long budget = 200;
    int profile_samples = 21;  // truncation profiles per distribution instance

    int root_level = 0;
    std::int64_t root_index = 0;
    std::optional<int> a;
    std::optional<int> b;
    bool enforce_root_average_bound = true;
    bool check = false;

    IntervalId root() const { return {root_level, root_index}; }
    std::uint64_t family_seed() const { return weight_seed.value_or(seed); }
};

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    std::uint64_t s = seed ^ (tag * 0x9e3779b97f4a7c15ULL);
    splitmix64(s);
    s ^= index * 0xc2b2ae3d27d4eb4fULL;
    return splitmix64(s);
}

inline std::vector<double> parse_value_list(const std::string& text) {
    std::vector<double> out;
    auto parse_one = [](const std::string& tok) {
        double v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size())
            throw ConfigError("bad numeric value '" + tok + "'");
        return v;
    };
    if (text.find(':') != std::string::npos) {
        // start:end:step inclusive range
        std::vector<std::string> parts;
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ':')) parts.push_back(tok);
        if (parts.size() != 3) throw ConfigError("range must be start:end:step");
        const double start = parse_one(parts[0]), end = parse_one(parts[1]),
                     step = parse_one(parts[2]);
        if (!(step > 0)) throw ConfigError("range step must be positive");
        for (double v = start; v <= end + 1e-12; v += step) out.push_back(v);
        return out;
    }
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_one(tok));
    return out;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("bad boolean value '" + v + "'");
}

}  // namespace detail

inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value, int line = -1) {
    try {
        auto as_int = [&] {
            long v = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc{} || p != value.data() + value.size())
                throw ConfigError("bad integer value '" + value + "'");
            return v;
        };
        auto as_double = [&] {
            double v = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc{} || p != value.data() + value.size())
                throw ConfigError("bad numeric value '" + value + "'");
            return v;
        };
        if (key == "depth") cfg.depth = static_cast<int>(as_int());
        else if (key == "p") cfg.p = as_double();
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(as_int());
        else if (key == "weight_seed") cfg.weight_seed = static_cast<std::uint64_t>(as_int());
        else if (key == "threads") cfg.threads = static_cast<int>(as_int());
        else if (key == "mode") {
            if (value == "dyadic") cfg.mode = IntervalFamily::dyadic;
            else if (value == "sliding") cfg.mode = IntervalFamily::sliding;
            else throw ConfigError("mode must be dyadic or sliding");
        } else if (key == "out") cfg.out_dir = value;
        else if (key == "kind" || key == "alpha" || key == "orientation" || key == "theta")
            apply_spec_key(cfg.family, key, value);
        else if (key == "sweep_param") {
            if (value != "alpha" && value != "theta")
                throw ConfigError("sweep_param must be alpha or theta");
            cfg.sweep_param = value;
        } else if (key == "sweep_values") cfg.sweep_values = detail::parse_value_list(value);
        else if (key == "pattern") {
            if (value != "all_plus" && value != "random" && value != "search")
                throw ConfigError("pattern must be all_plus, random or search");
            cfg.pattern = value;
        } else if (key == "family_size") cfg.family_size = static_cast<int>(as_int());
        else if (key == "trials") cfg.trials = static_cast<int>(as_int());
        else if (key == "budget") cfg.budget = as_int();
        else if (key == "profile_samples") cfg.profile_samples = static_cast<int>(as_int());
        else if (key == "root_level") cfg.root_level = static_cast<int>(as_int());
        else if (key == "root_index") cfg.root_index = as_int();
        else if (key == "a") cfg.a = static_cast<int>(as_int());
        else if (key == "b") cfg.b = static_cast<int>(as_int());
        else if (key == "enforce_root_average_bound")
            cfg.enforce_root_average_bound = detail::parse_bool(value);
        else if (key == "check") cfg.check = detail::parse_bool(value);
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (ConfigError& e) {
        if (line >= 0 && e.line() < 0) throw ConfigError(e.what(), line);
        throw;
    }
}

inline ExperimentConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    ExperimentConfig cfg;
    for (const auto& entry : parse_key_value_stream(is))
        apply_config_entry(cfg, entry.key, entry.value, entry.line);
    return cfg;
}

inline json config_to_json(const ExperimentConfig& cfg) {
    return json{{"depth", cfg.depth},
                {"p", cfg.p},
                {"seed", cfg.seed},
                {"threads", cfg.threads},
                {"mode", cfg.mode == IntervalFamily::dyadic ? "dyadic" : "sliding"},
                {"family", to_string(cfg.family)},
                {"sweep_param", cfg.sweep_param},
                {"sweep_values", cfg.sweep_values},
                {"pattern", cfg.pattern},
                {"family_size", cfg.family_size},
                {"trials", cfg.trials},
                {"budget", cfg.budget}};
}

// ---------------------------------------------------------------------------
// shared helpers

namespace detail {

inline void parallel_rows(int count, int threads, const std::function<void(int)>& body) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    const int workers = std::min(threads, count);
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    for (auto& th : pool) th.join();
}

inline SignPattern pattern_for(const ExperimentConfig& cfg, const Weight& w, int row);

}  // namespace detail

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
    double param = 0.0;
    double ap_plus = 0.0;
    double ainf_plus = 0.0;
    double ainf_minus_sigma = 0.0;
    double op_norm = 0.0;
    double weak_norm_estimate = 0.0;
    double maximal_weak = 0.0;
    double rhs_l2 = 0.0;
    double ratio_l2 = 0.0;
    double rhs_weak = 0.0;
    double ratio_weak = 0.0;
    double maximal_ratio = 0.0;  // maximal_weak / ap_plus^{1/p}
};

inline void to_json(json& j, const SweepRow& r) {
    j = json{{"param", r.param},
             {"ap_plus", r.ap_plus},
             {"ainf_plus", r.ainf_plus},
             {"ainf_minus_sigma", r.ainf_minus_sigma},
             {"op_norm", r.op_norm},
             {"weak_norm_estimate", r.weak_norm_estimate},
             {"maximal_weak", r.maximal_weak},
             {"rhs_l2", r.rhs_l2},
             {"ratio_l2", r.ratio_l2},
             {"rhs_weak", r.rhs_weak},
             {"ratio_weak", r.ratio_weak},
             {"maximal_ratio", r.maximal_ratio}};
}

inline SweepRow compute_sweep_row(const ExperimentConfig& cfg, int row) {
    const double v = cfg.sweep_values[static_cast<std::size_t>(row)];
    WeightFamilySpec spec = cfg.family;
    spec.depth = cfg.depth;
    spec.seed = cfg.family_seed();
    if (cfg.sweep_param == "alpha") spec.alpha = v;
    else spec.theta = v;
    const Weight w = generate_weight(spec, cfg.p);
    const Weight sigma = dual_weight(w);
    const SignPattern eps = detail::pattern_for(cfg, w, row);
    SweepRow r;
    r.param = v;
    r.ap_plus = ap_plus(w, cfg.mode);
    r.ainf_plus = ainf_plus(w);
    r.ainf_minus_sigma = ainf_minus(sigma);
    const double pp = conjugate_exponent(cfg.p);
    if (cfg.p == 2.0) {
        r.op_norm = op_norm_l2(eps, w);
        r.rhs_l2 = std::sqrt(r.ap_plus * std::max(r.ainf_minus_sigma, r.ainf_plus));
        r.ratio_l2 = r.op_norm / r.rhs_l2;
    } else {
        r.op_norm = r.rhs_l2 = r.ratio_l2 = std::numeric_limits<double>::quiet_NaN();
    }
    r.weak_norm_estimate = tsharp_weak_norm_estimate(
        eps, w, cfg.p, cfg.family_size, detail::derive_seed(cfg.seed, 11, static_cast<std::uint64_t>(row)));
    r.maximal_weak = maximal_weak_testing(
        w, sigma, cfg.p, cfg.family_size, detail::derive_seed(cfg.seed, 12, static_cast<std::uint64_t>(row)));
    r.rhs_weak = std::pow(r.ap_plus, 1.0 / cfg.p) * std::pow(r.ainf_plus, 1.0 / pp);
    r.ratio_weak = r.weak_norm_estimate / r.rhs_weak;
    r.maximal_ratio = r.maximal_weak / std::pow(r.ap_plus, 1.0 / cfg.p);
    return r;
}

struct SweepSummary {
    double max_ratio_l2 = 0.0;
    double max_ratio_weak = 0.0;
    double slope_loglog = 0.0;          // log(ratio_l2) against log(ap_plus)
    double ap_span_decades = 0.0;       // log10(max/min)
    int ap_decade_bins = 0;             // distinct floor(log10) bins touched
    double maximal_ratio_min = 0.0;
    double maximal_ratio_max = 0.0;
    double witness_param = 0.0;
};

inline SweepSummary summarize_sweep(const std::vector<SweepRow>& rows) {
    SweepSummary s;
    double ap_min = std::numeric_limits<double>::infinity(), ap_max = 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    s.maximal_ratio_min = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        if (std::isfinite(r.ratio_l2)) {
            if (r.ratio_l2 > s.max_ratio_l2) {
                s.max_ratio_l2 = r.ratio_l2;
                s.witness_param = r.param;
            }
            const double x = std::log(r.ap_plus), y = std::log(r.ratio_l2);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++cnt;
        }
        s.max_ratio_weak = std::max(s.max_ratio_weak, r.ratio_weak);
        s.maximal_ratio_min = std::min(s.maximal_ratio_min, r.maximal_ratio);
        s.maximal_ratio_max = std::max(s.maximal_ratio_max, r.maximal_ratio);
        ap_min = std::min(ap_min, r.ap_plus);
        ap_max = std::max(ap_max, r.ap_plus);
    }
    if (cnt >= 2 && sxx * cnt - sx * sx > 0)
        s.slope_loglog = (sxy * cnt - sx * sy) / (sxx * cnt - sx * sx);
    if (ap_min > 0.0 && ap_max > 0.0) {
        s.ap_span_decades = std::log10(ap_max / ap_min);
        s.ap_decade_bins = static_cast<int>(std::floor(std::log10(ap_max))) -
                           static_cast<int>(std::floor(std::log10(ap_min))) + 1;
    }
    return s;
}

inline void to_json(json& j, const SweepSummary& s) {
    j = json{{"max_ratio_l2", s.max_ratio_l2},
             {"max_ratio_weak", s.max_ratio_weak},
             {"slope_loglog", s.slope_loglog},
             {"ap_span_decades", s.ap_span_decades},
             {"ap_decade_bins", s.ap_decade_bins},
             {"maximal_ratio_min", s.maximal_ratio_min},
             {"maximal_ratio_max", s.maximal_ratio_max},
             {"witness_param", s.witness_param}};
}

namespace detail {

inline void write_rows(const ExperimentConfig& cfg, const std::vector<json>& records,
                       const std::vector<std::vector<std::string>>& csv_rows,
                       const std::vector<std::string>& csv_header, const json& summary) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream os(fs::path(cfg.out_dir) / "records.jsonl", std::ios::binary);
        for (const auto& r : records) os << r.dump() << '\n';
    }
    {
        std::ofstream os(fs::path(cfg.out_dir) / "results.csv", std::ios::binary);
        CsvWriter csv(os);
        csv.write_row(csv_header);
        for (const auto& r : csv_rows) csv.write_row(r);
    }
    {
        std::ofstream os(fs::path(cfg.out_dir) / "summary.json", std::ios::binary);
        os << summary.dump(2) << '\n';
    }
}

}  // namespace detail

inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
    if (cfg.sweep_values.empty()) throw ConfigError("sweep requires sweep_values");
    const int count = static_cast<int>(cfg.sweep_values.size());
    std::vector<SweepRow> rows(static_cast<std::size_t>(count));
    detail::parallel_rows(count, cfg.threads,
                          [&](int i) { rows[static_cast<std::size_t>(i)] = compute_sweep_row(cfg, i); });

    if (cfg.check) {
        // recompute a 5% sample (every 20th row) and insist on equality
        for (int i = 0; i < count; i += 20) {
            const SweepRow a = rows[static_cast<std::size_t>(i)];
            const SweepRow b = compute_sweep_row(cfg, i);
            auto close = [](double x, double y) {
                if (std::isnan(x) && std::isnan(y)) return true;
                return std::abs(x - y) <= 1e-10 * std::max({std::abs(x), std::abs(y), 1.0});
            };
            if (!close(a.ap_plus, b.ap_plus) || !close(a.op_norm, b.op_norm) ||
                !close(a.ratio_l2, b.ratio_l2) || !close(a.maximal_weak, b.maximal_weak) ||
                !close(a.weak_norm_estimate, b.weak_norm_estimate))
                throw CheckError("sweep row " + std::to_string(i) +
                                 " failed the recomputation check");
        }
    }

    const SweepSummary summary = summarize_sweep(rows);
    std::vector<json> records;
    std::vector<std::vector<std::string>> csv_rows;
    for (const auto& r : rows) {
        records.push_back(json(r));
        csv_rows.push_back({format_double(r.param), format_double(r.ap_plus),
                            format_double(r.ainf_plus), format_double(r.ainf_minus_sigma),
                            format_double(r.op_norm), format_double(r.weak_norm_estimate),
                            format_double(r.maximal_weak), format_double(r.rhs_l2),
                            format_double(r.ratio_l2), format_double(r.rhs_weak),
                            format_double(r.ratio_weak), format_double(r.maximal_ratio)});
    }
    json jsummary = json{{"config", config_to_json(cfg)}, {"summary", summary}};
    detail::write_rows(cfg, records, csv_rows,
                       {"param", "ap_plus", "ainf_plus", "ainf_minus_sigma", "op_norm",
                        "weak_norm_estimate", "maximal_weak", "rhs_l2", "ratio_l2", "rhs_weak",
                        "ratio_weak", "maximal_ratio"},
                       jsummary);
    return rows;
}

// ---------------------------------------------------------------------------
// extremal search (p = 2)

struct SearchState {
    std::vector<std::uint8_t> bits;  // cascade orientation per node, level-major
    double theta = 0.5;

    Weight weight(int depth, double p) const {
        std::vector<double> level{1.0};
        std::size_t node = 0;
        for (int l = 0; l < depth; ++l) {
            std::vector<double> next(level.size() * 2);
            for (std::size_t k = 0; k < level.size(); ++k, ++node) {
                const bool plus_left = bits[node] != 0;
                next[2 * k] = level[k] * (plus_left ? 1.0 + theta : 1.0 - theta);
                next[2 * k + 1] = level[k] * (plus_left ? 1.0 - theta : 1.0 + theta);
            }
            level = std::move(next);
        }
        return Weight(GridFunction(DyadicGrid(depth), std::move(level)), p);
    }
};

struct SearchResult {
    double best_ratio = 0.0;
    double best_ap = 0.0;
    double best_norm = 0.0;
    long iterations = 0;
    bool budget_exhausted = false;
    SearchState state;
    std::string pattern_signs;  // level-major '+'/'-'/'0'
};

namespace detail {

struct SingularPair {
    double value = 0.0;
    std::vector<double> u, v;
};

inline SingularPair top_singular_pair(const SignPattern& eps, const Weight& w) {
    const auto& grid = w.grid();
    ScaledOperator op{eps, {}, {}};
    const std::int64_t n = grid.cell_count();
    op.sqrt_out.resize(static_cast<std::size_t>(n));
    op.sqrt_in.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double s = std::sqrt(w.base()[i]);
        op.sqrt_out[static_cast<std::size_t>(i)] = s;
        op.sqrt_in[static_cast<std::size_t>(i)] = 1.0 / s;
    }
    std::vector<double> v(static_cast<std::size_t>(n), 1.0);
    auto normalize = [](std::vector<double>& x) {
        double s = 0;
        for (double t : x) s += t * t;
        s = std::sqrt(s);
        if (s > 0)
            for (double& t : x) t /= s;
        return s;
    };
    normalize(v);
    SingularPair pair;
    for (int it = 0; it < 500; ++it) {
        GridFunction bv = op.forward(GridFunction(grid, v));
        GridFunction z = op.adjoint(bv);
        std::vector<double> zn(z.values().begin(), z.values().end());
        const double nz = normalize(zn);
        if (nz < 1e-280) {
            if (it == 0) {
                for (std::int64_t i = 0; i < n; ++i)
                    v[static_cast<std::size_t>(i)] = static_cast<double>(i + 1);
                normalize(v);
                continue;
            }
            break;
        }
        v = std::move(zn);
    }
    GridFunction bv = op.forward(GridFunction(grid, v));
    std::vector<double> u(bv.values().begin(), bv.values().end());
    pair.value = normalize(u);
    pair.u = std::move(u);
    pair.v = v;
    return pair;
}

inline SignPattern pattern_for(const ExperimentConfig& cfg, const Weight& w, int row) {
    const auto& grid = w.grid();
    if (cfg.pattern == "all_plus") return SignPattern::all_plus(grid);
    if (cfg.pattern == "random") {
        RngStream rng(derive_seed(cfg.seed, 7, static_cast<std::uint64_t>(row)));
        return SignPattern::random(grid, rng);
    }
    // a few rounds of sign ascent against the current singular pair
    SignPattern eps = SignPattern::all_plus(grid);
    double cur = op_norm_l2(eps, w);
    for (int round = 0; round < 4; ++round) {
        const SingularPair pair = top_singular_pair(eps, w);
        SignPattern cand = eps;
        const std::int64_t n = grid.cell_count();
        std::vector<double> s1(static_cast<std::size_t>(n)), s2(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) {
            s1[static_cast<std::size_t>(i)] =
                pair.u[static_cast<std::size_t>(i)] * std::sqrt(w.base()[i]);
            s2[static_cast<std::size_t>(i)] =
                pair.v[static_cast<std::size_t>(i)] / std::sqrt(w.base()[i]);
        }
        const GridFunction f1(grid, std::move(s1)), f2(grid, std::move(s2));
        for (int l = 0; l <= grid.depth() - 2; ++l)
            for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
                const IntervalId id{l, k};
                const double gamma = haar_coeff(f1, id.left_half()) *
                                     haar_coeff(f2, id.right_half());
                if (gamma != 0.0) cand.set(id, gamma > 0 ? 1 : -1);
            }
        const double val = op_norm_l2(cand, w);
        if (val > cur + 1e-12) {
            cur = val;
            eps = cand;
        } else {
            break;
        }
    }
    return eps;
}

inline std::string pattern_signs_string(const SignPattern& eps) {
    std::string out;
    for (int l = 0; l <= eps.max_level(); ++l)
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
            const int v = eps.at({l, k});
            out += v > 0 ? '+' : v < 0 ? '-' : '0';
        }
    return out;
}

}  // namespace detail

inline SearchResult run_search(const ExperimentConfig& cfg) {
    if (cfg.p != 2.0) throw ConfigError("search requires p = 2 for the exact norm objective");
    const DyadicGrid grid(cfg.depth);
    RngStream rng(detail::derive_seed(cfg.seed, 21, 0));

    // a constant family pins w = 1 and searches sign patterns only
    const bool signs_only = cfg.family.kind == WeightKind::constant;
    SearchState state;
    state.bits.resize(static_cast<std::size_t>((std::int64_t{1} << cfg.depth) - 1));
    for (auto& b : state.bits) b = signs_only ? 0 : (rng.coin() ? 1 : 0);
    state.theta = signs_only ? 0.0 : (cfg.family.theta > 0.0 ? cfg.family.theta : 0.5);

    SignPattern eps = SignPattern::all_plus(grid);

    auto evaluate = [&](const SignPattern& e, const SearchState& st, double& ap_out,
                        double& norm_out) {
        const Weight w = st.weight(cfg.depth, cfg.p);
        const Weight sigma = dual_weight(w);
        ap_out = ap_plus(w);
        norm_out = op_norm_l2(e, w);
        const double rhs = std::sqrt(ap_out * std::max(ainf_minus(sigma), ainf_plus(w)));
        return rhs > 0 ? norm_out / rhs : 0.0;
    };

    SearchResult res;
    double ap = 0, norm = 0;
    double cur = evaluate(eps, state, ap, norm);
    res.best_ratio = cur;
    res.best_ap = ap;
    res.best_norm = norm;
    res.state = state;
    res.pattern_signs = detail::pattern_signs_string(eps);

    std::vector<json> trajectory;
    trajectory.push_back(json{{"iteration", 0}, {"ratio", cur}, {"ap_plus", ap}});

    double temperature = 0.05;
    const double cooling = cfg.budget > 0 ? std::pow(1e-2, 1.0 / cfg.budget) : 1.0;
    for (long it = 1; it <= cfg.budget; ++it) {
        bool accepted = false;
        if (signs_only || it % 2 == 1) {
            // sign phase: align every sign with the current singular pair
            const Weight w = state.weight(cfg.depth, cfg.p);
            const detail::SingularPair pair = detail::top_singular_pair(eps, w);
            SignPattern cand = eps;
            std::vector<double> s1(pair.u.size()), s2(pair.v.size());
            for (std::size_t i = 0; i < pair.u.size(); ++i) {
                const double sq = std::sqrt(w.base()[static_cast<std::int64_t>(i)]);
                s1[i] = pair.u[i] * sq;
                s2[i] = pair.v[i] / sq;
            }
            const GridFunction f1(grid, std::move(s1)), f2(grid, std::move(s2));
            for (int l = 0; l <= grid.depth() - 2; ++l)
                for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
                    const IntervalId id{l, k};
                    const double gamma =
                        haar_coeff(f1, id.left_half()) * haar_coeff(f2, id.right_half());
                    if (gamma != 0.0) cand.set(id, gamma > 0 ? 1 : -1);
                }
            double ap2 = 0, norm2 = 0;
            const double val = evaluate(cand, state, ap2, norm2);
            if (val > cur) {
                eps = cand;
                cur = val;
                ap = ap2;
                norm = norm2;
                accepted = true;
            }
        } else {
            // weight phase: seeded annealing over the cascade parameters
            SearchState cand = state;
            if (rng.uniform() < 0.8) {
                const std::size_t node = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(cand.bits.size()) - 1));
                cand.bits[node] ^= 1;
            } else {
                cand.theta = std::clamp(cand.theta + 0.1 * rng.normal(), 0.02, 0.95);
            }
            double ap2 = 0, norm2 = 0;
            const double val = evaluate(eps, cand, ap2, norm2);
            const double delta = val - cur;
            if (delta > 0 || rng.uniform() < std::exp(delta / temperature)) {
                state = cand;
                cur = val;
                ap = ap2;
                norm = norm2;
                accepted = true;
            }
            temperature *= cooling;
        }
        if (cur > res.best_ratio) {
            res.best_ratio = cur;
            res.best_ap = ap;
            res.best_norm = norm;
            res.state = state;
            res.pattern_signs = detail::pattern_signs_string(eps);
        }
        trajectory.push_back(json{{"iteration", it},
                                  {"ratio", cur},
                                  {"ap_plus", ap},
                                  {"accepted", accepted}});
    }
    res.iterations = cfg.budget;
    res.budget_exhausted = cfg.budget > 0;

    json summary{{"config", config_to_json(cfg)},
                 {"best_ratio", res.best_ratio},
                 {"best_ap_plus", res.best_ap},
                 {"best_op_norm", res.best_norm},
                 {"iterations", res.iterations},
                 {"budget_exhausted", res.budget_exhausted},
                 {"pattern", res.pattern_signs},
                 {"theta", res.state.theta}};
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream os(fs::path(cfg.out_dir) / "records.jsonl", std::ios::binary);
        for (const auto& r : trajectory) os << r.dump() << '\n';
    }
    {
        std::ofstream os(fs::path(cfg.out_dir) / "summary.json", std::ios::binary);
        os << summary.dump(2) << '\n';
    }
    {
        std::ofstream os(fs::path(cfg.out_dir) / "weight.txt", std::ios::binary);
        write_grid_function(os, res.state.weight(cfg.depth, cfg.p).base());
    }
    if (cfg.check) {
        // re-evaluate the recorded witness
        SignPattern e2 = SignPattern::all_plus(grid);
        std::size_t pos = 0;
        for (int l = 0; l <= grid.depth() - 2; ++l)
            for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k, ++pos) {
                const char c = res.pattern_signs[pos];
                e2.set({l, k}, c == '+' ? 1 : c == '-' ? -1 : 0);
            }
        double ap2 = 0, norm2 = 0;
        const double val = evaluate(e2, res.state, ap2, norm2);
        if (std::abs(val - res.best_ratio) > 1e-10 * std::max(1.0, res.best_ratio))
            throw CheckError("search witness failed the recomputation check");
    }
    return res;
}

// ---------------------------------------------------------------------------
// weighted one-sided maximal probe

struct MaximalProbeRow {
    double param = 0.0;
    double p = 1.0;
    double weak_estimate = 0.0;
    double ainf_plus_mu = 0.0;
};

inline void to_json(json& j, const MaximalProbeRow& r) {
    j = json{{"param", r.param},
             {"p", r.p},
             {"weak_estimate", r.weak_estimate},
             {"ainf_plus_mu", r.ainf_plus_mu}};
}

inline std::vector<MaximalProbeRow> probe_weighted_maximal(const ExperimentConfig& cfg) {
    std::vector<MaximalProbeRow> rows;
    for (std::size_t i = 0; i < cfg.sweep_values.size(); ++i) {
        WeightFamilySpec spec = cfg.family;
        spec.depth = cfg.depth;
        spec.seed = cfg.family_seed();
        if (cfg.sweep_param == "alpha") spec.alpha = cfg.sweep_values[i];
        else spec.theta = cfg.sweep_values[i];
        const Weight mu = generate_weight(spec, 2.0);
        const auto& grid = mu.grid();
        const double ainf_mu = ainf_plus(mu);
        for (double p : {1.0, 2.0}) {
            double best = 0.0;
            auto consider = [&](const GridFunction& f) {
                const double den = lp_norm(f, mu, p);
                if (den <= 0.0) return;
                best = std::max(best,
                                weak_lp_norm(max_plus_weighted(f, mu), mu, p).value / den);
            };
            for (int l = 0; l <= grid.depth() - 1; ++l)
                for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k)
                    consider(GridFunction::indicator(grid, IntervalId{l, k}.right_half()));
            RngStream rng(detail::derive_seed(cfg.seed, 31, i * 2 + (p > 1 ? 1 : 0)));
            for (int t = 0; t < cfg.family_size; ++t) {
                std::vector<double> v(static_cast<std::size_t>(grid.cell_count()));
                for (auto& x : v) x = rng.uniform();
                consider(GridFunction(grid, std::move(v)));
            }
            rows.push_back({cfg.sweep_values[i], p, best, ainf_mu});
        }
    }
    std::vector<json> records;
    std::vector<std::vector<std::string>> csv_rows;
    for (const auto& r : rows) {
        records.push_back(json(r));
        csv_rows.push_back({format_double(r.param), format_double(r.p),
                            format_double(r.weak_estimate), format_double(r.ainf_plus_mu)});
    }
    json summary{{"config", config_to_json(cfg)},
                 {"note", "weak-type estimates are numerical evidence, not proof"},
                 {"rows", rows.size()}};
    detail::write_rows(cfg, records, csv_rows, {"param", "p", "weak_estimate", "ainf_plus_mu"},
                       summary);
    return rows;
}

// ---------------------------------------------------------------------------
// single-shot runners backing the remaining CLI subcommands

inline json run_characteristic(const ExperimentConfig& cfg) {
    WeightFamilySpec spec = cfg.family;
    spec.depth = cfg.depth;
    spec.seed = cfg.family_seed();
    const Weight w = generate_weight(spec, cfg.p);
    const Weight sigma = dual_weight(w);
    json out{{"config", config_to_json(cfg)},
             {"ap_plus", ap_plus(w, cfg.mode)},
             {"ap_minus", ap_minus(w, cfg.mode)},
             {"a1_plus", a1_plus(w, cfg.mode)},
             {"ainf_plus", ainf_plus(w)},
             {"ainf_minus", ainf_minus(w)},
             {"ainf_minus_sigma", ainf_minus(sigma)},
             {"dual_ap_minus", ap_minus(sigma, cfg.mode)}};
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    std::ofstream os(fs::path(cfg.out_dir) / "summary.json", std::ios::binary);
    os << out.dump(2) << '\n';
    return out;
}

inline json run_norm(const ExperimentConfig& cfg) {
    if (cfg.p != 2.0) throw ConfigError("norm subcommand computes exact norms at p = 2 only");
    WeightFamilySpec spec = cfg.family;
    spec.depth = cfg.depth;
    spec.seed = cfg.family_seed();
    const Weight w = generate_weight(spec, cfg.p);
    const Weight sigma = dual_weight(w);
    const SignPattern eps = detail::pattern_for(cfg, w, 0);
    json out{{"config", config_to_json(cfg)},
             {"op_norm", op_norm_l2(eps, w)},
             {"op_norm_two_weight", op_norm_l2(eps, w, sigma)},
             {"ap_plus", ap_plus(w)},
             {"rhs_l2", std::sqrt(ap_plus(w) * std::max(ainf_minus(sigma), ainf_plus(w)))}};
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    std::ofstream os(fs::path(cfg.out_dir) / "summary.json", std::ios::binary);
    os << out.dump(2) << '\n';
    return out;
}

inline json run_testing(const ExperimentConfig& cfg) {
    WeightFamilySpec spec = cfg.family;
    spec.depth = cfg.depth;
    spec.seed = cfg.family_seed();
    const Weight w = generate_weight(spec, cfg.p);
    const Weight sigma = dual_weight(w);
    const SignPattern eps = detail::pattern_for(cfg, w, 0);
    const TestingReport rep = testing_constants(eps, w, sigma);
    json out{{"config", config_to_json(cfg)},
             {"testing", rep},
             {"maximal_weak",
              maximal_weak_testing(w, sigma, cfg.p, cfg.family_size,
                                   detail::derive_seed(cfg.seed, 41, 0))},
             {"weak_l1_adjoint",
              weak_l1_adjoint_probe(eps, TruncationProfile::none(w.grid()), cfg.trials,
                                    detail::derive_seed(cfg.seed, 43, 0))}};
    if (cfg.root().level <= cfg.depth - 2)
        out["linearized_testing_root"] =
            linearized_testing(eps, w, sigma, cfg.p, cfg.root(), cfg.budget,
                               detail::derive_seed(cfg.seed, 42, 0));
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    std::ofstream os(fs::path(cfg.out_dir) / "summary.json", std::ios::binary);
    os << out.dump(2) << '\n';
    return out;
}

inline json run_corona(const ExperimentConfig& cfg) {
    WeightFamilySpec spec = cfg.family;
    spec.depth = cfg.depth;
    spec.seed = cfg.family_seed();
    const Weight w = generate_weight(spec, cfg.p);
    const Weight sigma = dual_weight(w);
    RngStream rng(detail::derive_seed(cfg.seed, 51, 0));
    const SignPattern eps = SignPattern::random(w.grid(), rng);
    std::vector<double> phi_vals(static_cast<std::size_t>(w.grid().cell_count()), 0.0);
    for (std::int64_t i = w.grid().cell_begin(cfg.root()); i < w.grid().cell_end(cfg.root()); ++i)
        phi_vals[static_cast<std::size_t>(i)] = rng.sign();
    const GridFunction phi(w.grid(), std::move(phi_vals));
    std::vector<int> band_exponents;
    if (cfg.a) {
        band_exponents.push_back(*cfg.a);
    } else {
        for (int a = -16; a <= 16; ++a)
            if (!slice_band(w, sigma, {cfg.root(), a, cfg.p, false, std::nullopt}).empty())
                band_exponents.push_back(a);
    }
    std::vector<json> records;
    std::vector<std::vector<std::string>> csv_rows;
    double max_ratio = 0.0;
    for (int a : band_exponents) {
        const CoronaChainReport rep =
            corona_chain_check(eps, w, sigma, cfg.p, cfg.root(), a, nullptr, &phi);
        max_ratio = std::max(max_ratio, rep.ratio);
        records.push_back(json(rep));
        csv_rows.push_back({std::to_string(a), std::to_string(rep.member_count),
                            std::to_string(rep.stopping_count),
                            std::to_string(rep.generations), format_double(rep.lhs),
                            format_double(rep.rhs), format_double(rep.ratio)});
    }
    json summary{{"config", config_to_json(cfg)},
                 {"band_exponents", band_exponents},
                 {"max_ratio", max_ratio}};
    detail::write_rows(cfg, records, csv_rows,
                       {"a", "members", "stopping", "generations", "lhs", "rhs", "ratio"},
                       summary);
    return summary;
}

inline json run_distribution(const ExperimentConfig& cfg) {
    WeightFamilySpec spec = cfg.family;
    spec.depth = cfg.depth;
    spec.seed = cfg.family_seed();
    const Weight w = generate_weight(spec, cfg.p);
    const Weight sigma = dual_weight(w);
    const auto& grid = w.grid();
    RngStream rng(detail::derive_seed(cfg.seed, 61, 0));
    const SignPattern eps = SignPattern::random(grid, rng);

    int a;
    if (cfg.a) {
        a = *cfg.a;
    } else {
        a = 0;
        std::size_t best = 0;
        for (int cand = -16; cand <= 16; ++cand) {
            const auto k =
                slice_band(w, sigma, {cfg.root(), cand, cfg.p, cfg.enforce_root_average_bound,
                                      cfg.b});
            if (k.size() > best) {
                best = k.size();
                a = cand;
            }
        }
    }
    const auto members = slice_band(
        w, sigma, {cfg.root(), a, cfg.p, cfg.enforce_root_average_bound, cfg.b});

    // random signs on the root
    std::vector<double> phi_vals(static_cast<std::size_t>(grid.cell_count()), 0.0);
    for (std::int64_t i = grid.cell_begin(cfg.root()); i < grid.cell_end(cfg.root()); ++i)
        phi_vals[static_cast<std::size_t>(i)] = rng.sign();
    const GridFunction phi(grid, std::move(phi_vals));

    DistributionOptions opts;
    opts.band = cfg.b;
    std::vector<json> records;
    std::vector<std::vector<std::string>> csv_rows;
    std::vector<double> worst;
    DistributionProfile last;
    for (int s = 0; s < cfg.profile_samples; ++s) {
        const TruncationProfile delta =
            s == 0 ? TruncationProfile::none(grid) : TruncationProfile::random_quantized(grid, rng);
        const DistributionProfile prof =
            distribution_profile(eps, delta, w, sigma, members, cfg.root(), phi, cfg.p, opts);
        if (worst.empty()) worst.assign(prof.sigma_measure.size(), 0.0);
        for (std::size_t i = 0; i < worst.size(); ++i)
            worst[i] = std::max(worst[i], prof.sigma_measure[i]);
        records.push_back(json(prof));
        last = prof;
    }
    for (std::size_t i = 0; i < worst.size(); ++i)
        csv_rows.push_back({format_double(last.lambda[i]), format_double(worst[i]),
                            format_double(last.sigma_root_plus)});
    json summary{{"config", config_to_json(cfg)},
                 {"a", a},
                 {"member_count", members.size()},
                 {"c_fit", last.c_fit},
                 {"C_fit", last.C_fit},
                 {"power_C_fit", last.power_C_fit}};
    detail::write_rows(cfg, records, csv_rows, {"lambda", "sigma_measure_max", "sigma_root_plus"},
                       summary);
    return summary;
}

}  // namespace osmt
