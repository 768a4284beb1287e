#pragma once

#include <json.hpp>

#include "osmt/corona.hpp"
#include "osmt/grid.hpp"
#include "osmt/norms.hpp"
#include "osmt/weight.hpp"

namespace osmt {

using json = nlohmann::json;

inline void to_json(json& j, const IntervalId& id) {
    j = json{{"level", id.level}, {"index", id.index}};
}

inline void to_json(json& j, const WeakNormReport& r) {
    j = json{{"value", r.value}, {"witness_lambda", r.witness_lambda}, {"witness", r.witness}};
}

inline void to_json(json& j, const TestingReport& r) {
    j = json{{"forward_restricted", r.forward_restricted},
             {"forward_global", r.forward_global},
             {"forward_parent", r.forward_parent},
             {"adjoint_restricted", r.adjoint_restricted},
             {"adjoint_global", r.adjoint_global},
             {"adjoint_parent", r.adjoint_parent},
             {"witness_interval", r.witness_interval}};
}

inline void to_json(json& j, const DistributionProfile& p) {
    j = json{{"lambda", p.lambda},
             {"sigma_measure", p.sigma_measure},
             {"threshold_scale", p.threshold_scale},
             {"sigma_root_plus", p.sigma_root_plus},
             {"band_conversion", p.band_conversion},
             {"power_exponent", p.power_exponent},
             {"c_fit", p.c_fit},
             {"C_fit", p.C_fit},
             {"power_C_fit", p.power_C_fit}};
    if (p.band) j["band"] = *p.band;
}

inline void to_json(json& j, const JnViolation& v) {
    j = json{{"which", v.which}, {"lambda", v.lambda}, {"measure", v.measure}, {"bound", v.bound}};
}

inline void to_json(json& j, const JnReport& r) {
    j = json{{"hypothesis_holds", r.hypothesis_holds},
             {"samples_checked", r.samples_checked},
             {"conclusion_holds", r.conclusion_holds},
             {"violations", r.violations}};
}

inline void to_json(json& j, const CoronaChainReport& r) {
    j = json{{"a", r.a},
             {"member_count", r.member_count},
             {"stopping_count", r.stopping_count},
             {"generations", r.generations},
             {"max_chain_depth", r.max_chain_depth},
             {"decomposition_error", r.decomposition_error},
             {"layer_error", r.layer_error},
             {"lhs", r.lhs},
             {"rhs", r.rhs},
             {"ratio", r.ratio},
             {"layer_index", r.layer_index},
             {"layer_norm_of_sum", r.layer_norm_of_sum},
             {"layer_sum_of_norms", r.layer_sum_of_norms},
             {"triangle_total", r.triangle_total}};
}

inline void to_json(json& j, const CoronaForest& f) {
    std::vector<std::size_t> gen_sizes(f.generation_count(), 0);
    for (int g : f.generation) ++gen_sizes[static_cast<std::size_t>(g - 1)];
    int max_depth = 0;
    for (std::size_t s = 0; s < f.stopping.size(); ++s)
        max_depth = std::max(max_depth, f.chain_depth(static_cast<int>(s)));
    j = json{{"member_count", f.members.size()},
             {"stopping_count", f.stopping.size()},
             {"generation_sizes", gen_sizes},
             {"max_chain_depth", max_depth}};
}

}  // namespace osmt
