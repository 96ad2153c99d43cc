#include "synthnet/cosearch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>

#include "synthnet/util.hpp"

namespace synthnet {

namespace {

// Sparse (index, value) view of the households' contribution vectors;
// swap deltas touch only the union of two households' nonzero entries.
struct SparseContribs {
    std::vector<std::vector<std::pair<uint32_t, double>>> entries;

    explicit SparseContribs(const std::vector<MicroHousehold>& pums) {
        entries.resize(pums.size());
        for (std::size_t h = 0; h < pums.size(); ++h) {
            const TargetVector& c = pums[h].contribution;
            for (uint32_t i = 0; i < c.size(); ++i) {
                if (c[i] != 0.0) entries[h].emplace_back(i, c[i]);
            }
        }
    }
};

// Running annealing state: o is maintained incrementally and re-synced from
// the selection at fixed step intervals.
class CostTracker {
  public:
    CostTracker(const TargetVector& census) : e_(census), sqrt_e_(census.size()) {
        for (std::size_t i = 0; i < census.size(); ++i) sqrt_e_[i] = std::sqrt(census[i]);
        o_.assign(census.size(), 0.0);
        term_.assign(census.size(), 0.0);
        touched_mark_.assign(census.size(), 0);
    }

    void reset_from(const std::vector<uint32_t>& selection, const SparseContribs& contribs) {
        std::fill(o_.begin(), o_.end(), 0.0);
        for (uint32_t h : selection) {
            for (const auto& [i, v] : contribs.entries[h]) o_[i] += v;
        }
        resync_terms();
    }

    // Cost change if household `out` is replaced by `in`; commits on accept.
    double swap_delta(uint32_t out, uint32_t in, const SparseContribs& contribs) {
        ++epoch_;
        touched_.clear();
        for (const auto& [i, v] : contribs.entries[out]) {
            if (touched_mark_[i] != epoch_) {
                touched_mark_[i] = epoch_;
                touched_.push_back(i);
                scratch_delta(i) = 0.0;
            }
            scratch_delta(i) -= v;
        }
        for (const auto& [i, v] : contribs.entries[in]) {
            if (touched_mark_[i] != epoch_) {
                touched_mark_[i] = epoch_;
                touched_.push_back(i);
                scratch_delta(i) = 0.0;
            }
            scratch_delta(i) += v;
        }
        double delta = 0.0;
        for (uint32_t i : touched_) {
            double no = o_[i] + scratch_delta(i);
            double nt = square(std::sqrt(no) - sqrt_e_[i]);
            delta += nt - term_[i];
        }
        return delta;
    }

    void commit() {
        for (uint32_t i : touched_) {
            o_[i] += scratch_delta(i);
            double t = square(std::sqrt(o_[i]) - sqrt_e_[i]);
            cost_ += t - term_[i];
            term_[i] = t;
        }
    }

    void resync_terms() {
        cost_ = 0.0;
        for (std::size_t i = 0; i < o_.size(); ++i) {
            term_[i] = square(std::sqrt(o_[i]) - sqrt_e_[i]);
            cost_ += term_[i];
        }
    }

    double cost() const { return cost_; }
    const TargetVector& observed() const { return o_; }

  private:
    static double square(double x) { return x * x; }
    double& scratch_delta(uint32_t i) {
        if (scratch_.size() < o_.size()) scratch_.assign(o_.size(), 0.0);
        return scratch_[i];
    }

    TargetVector e_, sqrt_e_, o_, term_;
    std::vector<double> scratch_;
    std::vector<uint32_t> touched_;
    std::vector<uint64_t> touched_mark_;
    uint64_t epoch_ = 0;
    double cost_ = 0.0;
};

constexpr int kResyncInterval = 4096;
constexpr double kTempFloor = 1e-12;

}  // namespace

double ft2_cost(const TargetVector& o, const TargetVector& e) {
    if (o.size() != e.size()) {
        throw ValidationError("ft2_cost: vector lengths differ (" + std::to_string(o.size()) +
                              " vs " + std::to_string(e.size()) + ")");
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) {
        double d = std::sqrt(o[i]) - std::sqrt(e[i]);
        cost += d * d;
    }
    return cost;
}

double acceptance_probability(double delta_e, double temp) {
    if (temp <= 0) throw ValidationError("acceptance_probability: temperature must be positive");
    if (delta_e < 0) return 1.0;
    return std::exp(-delta_e / temp);
}

PoolLadderContext build_pool_context(const RegionInputs& region) {
    PoolLadderContext ctx;
    ctx.region = &region;
    std::map<std::string, std::pair<double, int>> urban_acc;
    for (const auto& [cbg, g] : region.geo) {
        if (g.puma.empty()) continue;
        auto& info = ctx.pumas[g.puma];
        info.counties.insert(g.county);
        if (!g.cbsa.empty()) info.cbsas.insert(g.cbsa);
        auto& acc = urban_acc[g.puma];
        acc.first += g.urban_pct;
        acc.second += 1;
    }
    for (auto& [puma, info] : ctx.pumas) {
        const auto& acc = urban_acc[puma];
        info.urban_pct = acc.second > 0 ? acc.first / acc.second : 0.0;
    }
    return ctx;
}

SamplePool pool_ladder(const PoolLadderContext& ctx, const std::string& cbg, int level,
                       double urban_similarity_pct) {
    if (level < 0 || level > 3) throw ValidationError("pool_ladder: level must be 0..3");
    const GeoRow& g = ctx.region->geo_of(cbg);

    std::set<std::string> pumas;
    if (!g.puma.empty()) pumas.insert(g.puma);
    if (level >= 1) {
        for (const auto& [puma, info] : ctx.pumas) {
            if (info.counties.count(g.county)) pumas.insert(puma);
        }
    }
    if (level >= 2 && !g.cbsa.empty()) {
        for (const auto& [puma, info] : ctx.pumas) {
            if (info.cbsas.count(g.cbsa)) pumas.insert(puma);
        }
    }
    if (level >= 3) {
        for (const auto& [puma, info] : ctx.pumas) {
            if (std::abs(info.urban_pct - g.urban_pct) <= urban_similarity_pct) {
                pumas.insert(puma);
            }
        }
    }

    SamplePool pool;
    pool.level = level;
    for (const auto& puma : pumas) {
        auto it = ctx.region->pums_by_puma.find(puma);
        if (it == ctx.region->pums_by_puma.end()) continue;
        pool.households.insert(pool.households.end(), it->second.begin(), it->second.end());
    }
    std::sort(pool.households.begin(), pool.households.end());
    pool.households.erase(std::unique(pool.households.begin(), pool.households.end()),
                          pool.households.end());
    return pool;
}

AnnealOutcome anneal_cbg(const TargetVector& census, std::size_t n_households,
                         const std::vector<SamplePool>& pools,
                         const std::vector<MicroHousehold>& pums, const AnnealConfig& cfg,
                         RngStream& rng) {
    if (n_households < 1) {
        throw ValidationError("anneal_cbg: n_households must be >= 1");
    }
    bool any_pool = false;
    for (const auto& p : pools) any_pool = any_pool || !p.households.empty();
    if (!any_pool) throw InfeasibleError("anneal_cbg: all sample pools are empty");

    SparseContribs contribs(pums);
    CostTracker tracker(census);

    AnnealOutcome best;
    best.final_cost = std::numeric_limits<double>::infinity();
    int64_t total_steps = 0;

    for (std::size_t level = 0; level < pools.size(); ++level) {
        const SamplePool& pool = pools[level];
        if (pool.households.empty()) {
            log::warn("anneal: empty pool at ladder level " + std::to_string(level) +
                      ", skipping");
            continue;
        }
        double cooling = level < cfg.cooling.size() ? cfg.cooling[level] : cfg.cooling.back();

        // fresh random selection, with replacement
        std::vector<uint32_t> selection(n_households);
        for (auto& slot : selection) {
            slot = pool.households[rng.below(pool.households.size())];
        }
        tracker.reset_from(selection, contribs);

        double temp = std::max(cfg.start_temp_fraction * tracker.cost(), kTempFloor);

        auto note_best = [&](int lvl) {
            if (tracker.cost() < best.final_cost) {
                best.selection = selection;
                best.final_cost = tracker.cost();
                best.level_used = lvl;
            }
        };
        note_best(static_cast<int>(level));

        int step = 0;
        bool reached = false;
        while (step < cfg.max_steps_per_level) {
            if (tracker.cost() <= cfg.cost_cutoff) {
                // re-derive before stopping: the incremental total may drift
                tracker.reset_from(selection, contribs);
                if (tracker.cost() <= cfg.cost_cutoff) {
                    reached = true;
                    break;
                }
            }
            ++step;
            std::size_t slot = static_cast<std::size_t>(rng.below(selection.size()));
            uint32_t incoming = pool.households[rng.below(pool.households.size())];
            uint32_t outgoing = selection[slot];

            double delta = tracker.swap_delta(outgoing, incoming, contribs);
            double p = acceptance_probability(delta, temp);
            if (p >= 1.0 || rng.uniform01() < p) {
                tracker.commit();
                selection[slot] = incoming;
                note_best(static_cast<int>(level));
            }
            temp = std::max(temp * cooling, kTempFloor);
            if (step % kResyncInterval == 0) {
                tracker.reset_from(selection, contribs);
            }
        }
        total_steps += step;

        if (reached) {
            AnnealOutcome out;
            out.selection = std::move(selection);
            out.final_cost = tracker.cost();
            out.level_used = static_cast<int>(level);
            out.steps = total_steps;
            out.below_cutoff = true;
            return out;
        }
    }

    // no level met the cutoff: return the exact cost of the best selection seen
    tracker.reset_from(best.selection, contribs);
    best.final_cost = tracker.cost();
    best.steps = total_steps;
    best.below_cutoff = best.final_cost <= cfg.cost_cutoff;
    return best;
}

double chi_squared_quantile(double prob, double dof) {
    boost::math::chi_squared dist(dof);
    return boost::math::quantile(dist, prob);
}

SynthesisResult synthesize_region(const RegionInputs& region, const TargetSchema& schema,
                                  const std::vector<std::string>& retained_cbgs,
                                  const AnnealConfig& cfg, uint64_t master_seed, int threads) {
    SynthesisResult result;
    result.cbgs = retained_cbgs;
    std::sort(result.cbgs.begin(), result.cbgs.end());
    double dof = std::max<double>(1.0, static_cast<double>(schema.width()) - 1.0);
    result.chi2_critical = chi_squared_quantile(cfg.chi2_quantile, dof);

    PoolLadderContext ctx = build_pool_context(region);

    struct Slot {
        bool annealed = false;
        AnnealOutcome outcome;
        FitReportRow row;
    };
    std::vector<Slot> slots(result.cbgs.size());

    parallel_for(result.cbgs.size(), threads, [&](std::size_t idx) {
        const std::string& cbg = result.cbgs[idx];
        std::size_t row = region.cbg_row.at(cbg);
        int64_t n = std::llround(region.cbg_marginals.num(row, kColHouseholdsTotal));
        if (n < 1) {
            log::info("CBG " + cbg + " has no households; skipping CO search");
            return;
        }
        TargetVector e = derive_targets(region.cbg_marginals, row, schema);

        std::vector<SamplePool> pools;
        for (int level = 0; level < 4; ++level) {
            pools.push_back(pool_ladder(ctx, cbg, level, cfg.urban_similarity_pct));
        }

        RngStream rng = RngStream::derive(master_seed, "cosearch", RngStream::hash_str(cbg));
        AnnealOutcome outcome =
            anneal_cbg(e, static_cast<std::size_t>(n), pools, region.pums, cfg, rng);

        // matched random-selection baseline from the first non-empty pool
        RngStream baseline_rng =
            RngStream::derive(master_seed, "baseline", RngStream::hash_str(cbg));
        const SamplePool* base_pool = nullptr;
        for (const auto& p : pools) {
            if (!p.households.empty()) {
                base_pool = &p;
                break;
            }
        }
        TargetVector o_random(schema.width(), 0.0);
        for (int64_t i = 0; i < n; ++i) {
            uint32_t h = base_pool->households[baseline_rng.below(base_pool->households.size())];
            const TargetVector& c = region.pums[h].contribution;
            for (std::size_t k = 0; k < c.size(); ++k) o_random[k] += c[k];
        }

        Slot& s = slots[idx];
        s.annealed = true;
        s.row.cbg = cbg;
        s.row.n_households = n;
        s.row.final_cost = outcome.final_cost;
        s.row.level_used = outcome.level_used;
        s.row.steps = outcome.steps;
        s.row.below_cutoff = outcome.below_cutoff;
        s.row.pass = 4.0 * outcome.final_cost < result.chi2_critical;
        s.row.random_baseline_cost = ft2_cost(o_random, e);
        s.outcome = std::move(outcome);
    });

    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i].annealed) continue;
        result.report.push_back(slots[i].row);
        result.selections[result.cbgs[i]] = std::move(slots[i].outcome);
    }
    return result;
}

}  // namespace synthnet
