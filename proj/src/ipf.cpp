#include "synthnet/ipf.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "synthnet/util.hpp"

namespace synthnet {

namespace {

double relative_error(double actual, double target) {
    double denom = std::max(std::abs(target), 1e-12);
    return std::abs(actual - target) / denom;
}

void check_structure(const IpfProblem& p) {
    for (std::size_t r = 0; r < p.seed.rows; ++r) {
        if (p.row_targets[r] > 0 && p.seed.row_sum(r) == 0.0) {
            throw InfeasibleError("IPF: row " + std::to_string(r) +
                                  " has positive target but an all-zero seed");
        }
    }
    for (std::size_t c = 0; c < p.seed.cols; ++c) {
        if (p.col_targets[c] > 0 && p.seed.col_sum(c) == 0.0) {
            throw InfeasibleError("IPF: column " + std::to_string(c) +
                                  " has positive target but an all-zero seed");
        }
    }
}

}  // namespace

IpfResult ipf_fit(const IpfProblem& problem) {
    IpfProblem p = problem;
    if (p.seed.rows != p.row_targets.size() || p.seed.cols != p.col_targets.size()) {
        throw ValidationError("IPF: target lengths do not match seed dimensions");
    }
    for (double v : p.seed.data)
        if (v < 0) throw ValidationError("IPF: negative seed cell");
    for (double v : p.row_targets)
        if (v < 0) throw ValidationError("IPF: negative row target");
    for (double v : p.col_targets)
        if (v < 0) throw ValidationError("IPF: negative column target");

    double row_total = 0.0, col_total = 0.0;
    for (double v : p.row_targets) row_total += v;
    for (double v : p.col_targets) col_total += v;
    if (row_total > 0 && relative_error(col_total, row_total) > 1e-6) {
        // Row targets are the authoritative side; rescale columns to match.
        log::warn("IPF: margin totals differ (rows " + format_double(row_total) + ", cols " +
                  format_double(col_total) + "); rescaling column targets");
        for (double& v : p.col_targets) v *= row_total / col_total;
        col_total = row_total;
    }

    check_structure(p);

    IpfResult res;
    res.fitted = p.seed;
    Matrix& m = res.fitted;

    auto max_margin_error = [&]() {
        double err = 0.0;
        for (std::size_t r = 0; r < m.rows; ++r) {
            err = std::max(err, relative_error(m.row_sum(r), p.row_targets[r]));
        }
        for (std::size_t c = 0; c < m.cols; ++c) {
            err = std::max(err, relative_error(m.col_sum(c), p.col_targets[c]));
        }
        return err;
    };

    res.max_error = max_margin_error();
    if (res.max_error < p.tol) {
        res.converged = true;  // seed already satisfies both margins
        return res;
    }

    for (int iter = 0; iter < p.max_iters; ++iter) {
        for (std::size_t r = 0; r < m.rows; ++r) {
            double s = m.row_sum(r);
            double factor = s > 0 ? p.row_targets[r] / s : 0.0;
            for (std::size_t c = 0; c < m.cols; ++c) m.at(r, c) *= factor;
        }
        for (std::size_t c = 0; c < m.cols; ++c) {
            double s = m.col_sum(c);
            double factor = s > 0 ? p.col_targets[c] / s : 0.0;
            for (std::size_t r = 0; r < m.rows; ++r) m.at(r, c) *= factor;
        }
        res.iterations = iter + 1;
        res.max_error = max_margin_error();
        if (res.max_error < p.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

IpfResult industry_residence_matrix(const std::array<double, kNumIndustries>& employment_counts,
                                    const std::array<double, 3>& residence_counts,
                                    const std::array<double, kNumIndustries>& gq_industry_props) {
    double employment_total = 0.0;
    for (double v : employment_counts) employment_total += v;
    double population = residence_counts[0] + residence_counts[1] + residence_counts[2];

    IpfProblem p;
    p.seed = Matrix(3, kNumIndustries);
    // household row: employment counts scaled by the household population share
    double hh_share = population > 0 ? residence_counts[0] / population : 1.0;
    for (std::size_t i = 0; i < kNumIndustries; ++i) {
        p.seed.at(0, i) = employment_counts[i] * hh_share;
    }
    // civilian GQ row: residents spread by state-level PUMS industry proportions
    for (std::size_t i = 0; i < kNumIndustries; ++i) {
        p.seed.at(1, i) = residence_counts[1] * gq_industry_props[i];
    }
    // military GQ row: all residents start in the armed-forces category
    p.seed.at(2, static_cast<std::size_t>(Industry::ADM_MIL)) = residence_counts[2];

    p.row_targets = {residence_counts[0], residence_counts[1], residence_counts[2]};
    p.col_targets.assign(employment_counts.begin(), employment_counts.end());

    // A zero-employment industry with seed mass is fine (scaled away), but a
    // positive industry count needs seed mass somewhere: give the household
    // row a floor if the share rounded it to zero.
    for (std::size_t i = 0; i < kNumIndustries; ++i) {
        if (p.col_targets[i] > 0 && p.seed.col_sum(i) == 0.0 && residence_counts[0] > 0) {
            p.seed.at(0, i) = p.col_targets[i];
        }
    }
    return ipf_fit(p);
}

CommuteMatrix commute_matrix(const std::string& origin,
                             const std::array<double, kNumIndustries>& industry_counts,
                             const std::vector<OdRow>& od_row,
                             const std::map<std::string, std::array<double, kNumIndustries>>& wac) {
    CommuteMatrix out;
    out.origin_cbg = origin;

    double total_workers = 0.0;
    for (double v : industry_counts) total_workers += v;

    double od_total = 0.0;
    for (const auto& r : od_row) od_total += r.count;
    if (od_total <= 0) throw InfeasibleError("commute_matrix: no OD flow for origin " + origin);

    for (const auto& r : od_row) out.destinations.push_back(r.work_cbg);

    std::size_t n_dest = out.destinations.size();
    auto build = [&](bool uniform_seed) {
        IpfProblem p;
        p.seed = Matrix(kNumIndustries, n_dest);
        p.row_targets.assign(industry_counts.begin(), industry_counts.end());
        p.col_targets.resize(n_dest);
        for (std::size_t d = 0; d < n_dest; ++d) {
            double workers_to_dest = total_workers * (od_row[d].count / od_total);
            p.col_targets[d] = workers_to_dest;
            auto it = wac.find(out.destinations[d]);
            std::array<double, kNumIndustries> mix{};
            double mix_total = 0.0;
            if (it != wac.end()) {
                mix = it->second;
                for (double v : mix) mix_total += v;
            }
            if (mix_total <= 0) {
                if (!uniform_seed) {
                    log::warn("commute_matrix: no WAC mix for destination " +
                              out.destinations[d] + "; using a uniform industry mix");
                }
                mix.fill(1.0);
                mix_total = kNumIndustries;
            }
            for (std::size_t i = 0; i < kNumIndustries; ++i) {
                double share = uniform_seed ? (mix[i] > 0 ? 1.0 : 0.0)
                                            : mix[i] / mix_total * workers_to_dest;
                p.seed.at(i, d) = share;
            }
        }
        return p;
    };

    try {
        auto res = ipf_fit(build(false));
        out.cells = std::move(res.fitted);
        out.converged = res.converged;
        return out;
    } catch (const InfeasibleError&) {
        log::warn("commute_matrix: structural infeasibility for origin " + origin +
                  "; retrying with a flat seed");
    }
    auto res = ipf_fit(build(true));
    out.cells = std::move(res.fitted);
    out.converged = res.converged;
    return out;
}

}  // namespace synthnet
