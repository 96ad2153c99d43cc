#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "synthnet/ingest.hpp"
#include "synthnet/rng.hpp"
#include "synthnet/schema.hpp"
#include "synthnet/types.hpp"

namespace synthnet {

struct AnnealConfig {
    double cost_cutoff = 15.0;
    int max_steps_per_level = 200000;
    std::vector<double> cooling = {0.99, 0.99, 0.99, 0.995};
    double start_temp_fraction = 0.5;
    double urban_similarity_pct = 20.0;  // ladder level 3 cutoff, percentage points
    double chi2_quantile = 0.95;         // fit-flag critical value
};

// Mismatch cost E = sum_i (sqrt(o_i) - sqrt(e_i))^2, i.e. one quarter of the
// Freeman-Tukey statistic.
double ft2_cost(const TargetVector& o, const TargetVector& e);

// 1 for improving moves, exp(-delta/T) otherwise.
double acceptance_probability(double delta_e, double temp);

struct SamplePool {
    int level = 0;
    std::vector<uint32_t> households;  // indices into the PUMS pool, ascending
};

// Geography lookups for the expanding sample-pool ladder.
struct PoolLadderContext {
    struct PumaInfo {
        std::set<std::string> counties;
        std::set<std::string> cbsas;
        double urban_pct = 0.0;  // mean over the PUMA's CBGs
    };
    std::map<std::string, PumaInfo> pumas;
    const RegionInputs* region = nullptr;
};

PoolLadderContext build_pool_context(const RegionInputs& region);

// Level 0: own PUMA. 1: PUMAs intersecting the county. 2: PUMAs in the CBSA
// (same as 1 when the CBG has none). 3: PUMAs with a similar urban share.
// Pools are cumulative, so each level is a superset of the previous.
SamplePool pool_ladder(const PoolLadderContext& ctx, const std::string& cbg, int level,
                       double urban_similarity_pct);

struct AnnealOutcome {
    std::vector<uint32_t> selection;  // household indices, with replacement
    double final_cost = 0.0;
    int level_used = 0;
    int64_t steps = 0;  // total across attempted levels
    bool below_cutoff = false;
};

AnnealOutcome anneal_cbg(const TargetVector& census, std::size_t n_households,
                         const std::vector<SamplePool>& pools,
                         const std::vector<MicroHousehold>& pums, const AnnealConfig& cfg,
                         RngStream& rng);

struct FitReportRow {
    std::string cbg;
    int64_t n_households = 0;
    double final_cost = 0.0;
    int level_used = 0;
    int64_t steps = 0;
    bool pass = false;  // 4E below the chi-square critical value
    double random_baseline_cost = 0.0;
    bool below_cutoff = false;
};

struct SynthesisResult {
    std::vector<std::string> cbgs;                          // sorted
    std::map<std::string, AnnealOutcome> selections;        // cbg -> outcome
    std::vector<FitReportRow> report;                       // one row per annealed CBG
    double chi2_critical = 0.0;                             // at schema width - 1 dof
};

// Runs anneal_cbg for every retained CBG on `threads` workers. Per-CBG RNG
// streams derive from (master_seed, cbg), so results do not depend on the
// degree of parallelism.
SynthesisResult synthesize_region(const RegionInputs& region, const TargetSchema& schema,
                                  const std::vector<std::string>& retained_cbgs,
                                  const AnnealConfig& cfg, uint64_t master_seed, int threads);

double chi_squared_quantile(double prob, double dof);

}  // namespace synthnet
