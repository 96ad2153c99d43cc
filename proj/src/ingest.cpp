#include "synthnet/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "synthnet/util.hpp"

namespace synthnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::filesystem::path require_file(const std::filesystem::path& dir, const std::string& name) {
    auto p = dir / name;
    if (!std::filesystem::exists(p)) {
        throw DataError("missing input file: " + name + " (looked in " + dir.string() + ")");
    }
    return p;
}

int parse_grade(const csv::Table& t, std::size_t row, const std::string& col) {
    int64_t g = t.integer(row, col);
    if (g < kMinGrade || g > kMaxGrade) {
        throw DataError(t.path + ":" + std::to_string(row + 2) + ": column '" + col +
                        "': grade level out of range 0..13: " + std::to_string(g));
    }
    return static_cast<int>(g);
}

// Grade-span class used for mean-filling missing school counts.
int school_class(const School& s) {
    if (s.high_grade <= 6) return 0;   // elementary (through grade 5)
    if (s.high_grade <= 9) return 1;   // middle
    return 2;                          // high
}

void fill_missing_school_counts(std::vector<School>& schools) {
    std::array<double, 3> student_sum{}, teacher_sum{};
    std::array<int, 3> student_n{}, teacher_n{};
    double student_all = 0.0, teacher_all = 0.0;
    int student_all_n = 0, teacher_all_n = 0;
    for (const auto& s : schools) {
        int c = school_class(s);
        if (s.n_students >= 0) {
            student_sum[c] += s.n_students;
            student_n[c] += 1;
            student_all += s.n_students;
            student_all_n += 1;
        }
        if (s.n_teachers >= 0) {
            teacher_sum[c] += s.n_teachers;
            teacher_n[c] += 1;
            teacher_all += s.n_teachers;
            teacher_all_n += 1;
        }
    }
    auto mean_or = [](double sum, int n, double fallback) {
        return n > 0 ? sum / n : fallback;
    };
    double region_students = mean_or(student_all, student_all_n, 500.0);
    double region_teachers = mean_or(teacher_all, teacher_all_n, 30.0);
    int filled = 0;
    for (auto& s : schools) {
        int c = school_class(s);
        if (s.n_students < 0) {
            s.n_students = mean_or(student_sum[c], student_n[c], region_students);
            ++filled;
        }
        if (s.n_teachers < 0) {
            s.n_teachers = mean_or(teacher_sum[c], teacher_n[c], region_teachers);
            ++filled;
        }
    }
    if (filled > 0) {
        log::info("schools: filled " + std::to_string(filled) + " missing counts with type means");
    }
}

// ---------------------------------------------------------------------------
// Lognormal binned MLE

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct BinEdges {
    double lo;  // log scale, may be -inf
    double hi;  // log scale, may be +inf
    double count;
};

double binned_nll(const std::vector<BinEdges>& edges, double mu, double sigma) {
    double nll = 0.0;
    for (const auto& b : edges) {
        if (b.count <= 0) continue;
        double phi_hi = b.hi == kInf ? 1.0 : norm_cdf((b.hi - mu) / sigma);
        double phi_lo = b.lo == -kInf ? 0.0 : norm_cdf((b.lo - mu) / sigma);
        double p = std::max(phi_hi - phi_lo, 1e-300);
        nll -= b.count * std::log(p);
    }
    return nll;
}

// Deterministic 2-D Nelder-Mead over (mu, log sigma).
std::pair<double, double> minimize_nll(const std::vector<BinEdges>& edges, double mu0,
                                       double log_sigma0) {
    using Point = std::array<double, 2>;
    auto f = [&](const Point& p) { return binned_nll(edges, p[0], std::exp(p[1])); };

    std::array<Point, 3> simplex = {Point{mu0, log_sigma0}, Point{mu0 + 0.5, log_sigma0},
                                    Point{mu0, log_sigma0 + 0.5}};
    std::array<double, 3> fv = {f(simplex[0]), f(simplex[1]), f(simplex[2])};

    for (int iter = 0; iter < 800; ++iter) {
        std::array<int, 3> idx = {0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        int best = idx[0], mid = idx[1], worst = idx[2];

        double spread = std::max(std::abs(simplex[best][0] - simplex[worst][0]),
                                 std::abs(simplex[best][1] - simplex[worst][1]));
        if (spread < 1e-10 && std::abs(fv[best] - fv[worst]) < 1e-12) break;

        Point centroid = {(simplex[best][0] + simplex[mid][0]) / 2.0,
                          (simplex[best][1] + simplex[mid][1]) / 2.0};
        auto blend = [&](double t) {
            return Point{centroid[0] + t * (simplex[worst][0] - centroid[0]),
                         centroid[1] + t * (simplex[worst][1] - centroid[1])};
        };

        Point refl = blend(-1.0);
        double f_refl = f(refl);
        if (f_refl < fv[best]) {
            Point exp_pt = blend(-2.0);
            double f_exp = f(exp_pt);
            if (f_exp < f_refl) {
                simplex[worst] = exp_pt;
                fv[worst] = f_exp;
            } else {
                simplex[worst] = refl;
                fv[worst] = f_refl;
            }
        } else if (f_refl < fv[mid]) {
            simplex[worst] = refl;
            fv[worst] = f_refl;
        } else {
            Point contr = blend(0.5);
            double f_contr = f(contr);
            if (f_contr < fv[worst]) {
                simplex[worst] = contr;
                fv[worst] = f_contr;
            } else {
                for (int i : {mid, worst}) {
                    simplex[i] = {(simplex[i][0] + simplex[best][0]) / 2.0,
                                  (simplex[i][1] + simplex[best][1]) / 2.0};
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (fv[i] < fv[best]) best = i;
    return {simplex[best][0], simplex[best][1]};
}

}  // namespace

const std::array<std::string, 7>& p43_column_names() {
    static const std::array<std::string, 7> names = {
        "p43_u18_inst", "p43_u18_civ",  "p43_1864_inst", "p43_1864_civ",
        "p43_1864_mil", "p43_65p_inst", "p43_65p_civ"};
    return names;
}

double RegionInputs::marginal(const std::string& cbg, const std::string& column) const {
    auto it = cbg_row.find(cbg);
    if (it == cbg_row.end()) throw DataError("unknown CBG in marginals: " + cbg);
    return cbg_marginals.num(it->second, column);
}

const GeoRow& RegionInputs::geo_of(const std::string& cbg) const {
    auto it = geo.find(cbg);
    if (it == geo.end()) throw DataError("CBG missing from geo.csv: " + cbg);
    return it->second;
}

RegionInputs load_region_inputs(const std::filesystem::path& input_dir) {
    RegionInputs region;

    // geo first: it anchors referential integrity for everything else
    {
        auto t = csv::read(require_file(input_dir, "geo.csv"));
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            GeoRow g;
            g.cbg = t.cell(r, "cbg");
            g.centroid_x = t.num(r, "centroid_x");
            g.centroid_y = t.num(r, "centroid_y");
            g.puma = t.cell(r, "puma");
            g.county = t.cell(r, "county");
            g.cbsa = t.cell(r, "cbsa");
            g.urban_pct = t.num(r, "urban_pct");
            if (region.geo.count(g.cbg)) {
                throw DataError("geo.csv: duplicate CBG " + g.cbg);
            }
            region.geo[g.cbg] = std::move(g);
        }
    }

    {
        region.cbg_marginals = csv::read(require_file(input_dir, "cbg_marginals.csv"));
        auto& t = region.cbg_marginals;
        std::size_t cbg_col = t.column("cbg");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const std::string& cbg = t.cell(r, cbg_col);
            if (!region.geo.count(cbg)) {
                throw DataError("cbg_marginals.csv:" + std::to_string(r + 2) + ": CBG " + cbg +
                                " not present in geo.csv");
            }
            region.cbg_row[cbg] = r;
            region.cbg_ids.push_back(cbg);
        }
    }

    {
        auto hh = csv::read(require_file(input_dir, "pums_households.csv"));
        std::unordered_map<std::string, std::size_t> hh_index;
        for (std::size_t r = 0; r < hh.rows.size(); ++r) {
            MicroHousehold m;
            m.id = hh.cell(r, "household_id");
            m.puma = hh.cell(r, "puma");
            if (hh_index.count(m.id)) {
                throw DataError("pums_households.csv: duplicate household_id " + m.id);
            }
            hh_index[m.id] = region.pums.size();
            region.pums.push_back(std::move(m));
        }
        std::vector<int64_t> incomes(region.pums.size(), 0);
        for (std::size_t r = 0; r < hh.rows.size(); ++r) {
            incomes[hh_index[hh.cell(r, "household_id")]] = hh.integer(r, "income");
        }

        auto pp = csv::read(require_file(input_dir, "pums_persons.csv"));
        for (std::size_t r = 0; r < pp.rows.size(); ++r) {
            const std::string& hid = pp.cell(r, "household_id");
            auto it = hh_index.find(hid);
            if (it == hh_index.end()) {
                throw DataError("pums_persons.csv:" + std::to_string(r + 2) +
                                ": household_id " + hid + " not in pums_households.csv");
            }
            PersonAttrs p;
            p.age = static_cast<int>(pp.integer(r, "age"));
            const std::string& sex = pp.cell(r, "sex");
            if (sex != "M" && sex != "F") {
                throw DataError("pums_persons.csv:" + std::to_string(r + 2) +
                                ": sex must be M or F, got '" + sex + "'");
            }
            p.sex = sex[0];
            p.race = pp.cell(r, "race");
            const std::string& ind = pp.cell(r, "industry");
            if (!ind.empty()) {
                auto parsed = industry_from_string(ind);
                if (!parsed) {
                    throw DataError("pums_persons.csv:" + std::to_string(r + 2) +
                                    ": unknown industry '" + ind + "'");
                }
                p.industry = static_cast<int8_t>(*parsed);
            }
            const std::string& grade = pp.cell(r, "grade");
            p.grade = grade.empty() ? kNoGrade : parse_grade(pp, r, "grade");
            p.is_worker = pp.integer(r, "is_worker") != 0;
            MicroHousehold& m = region.pums[it->second];
            p.income = incomes[it->second];
            m.members.push_back(std::move(p));
        }
        for (const auto& m : region.pums) {
            if (m.members.empty()) {
                throw DataError("pums_households.csv: household " + m.id + " has no persons");
            }
        }
        for (uint32_t i = 0; i < region.pums.size(); ++i) {
            region.pums_by_puma[region.pums[i].puma].push_back(i);
        }
    }

    {
        auto t = csv::read(require_file(input_dir, "od.csv"));
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            OdRow row;
            row.home_cbg = t.cell(r, "home_cbg");
            row.work_cbg = t.cell(r, "work_cbg");
            row.count = t.num(r, "count");
            if (row.count < 0) {
                throw DataError("od.csv:" + std::to_string(r + 2) + ": negative count");
            }
            if (row.home_cbg == kOutside) {
                continue;  // outside-origin inflows are realized as placeholder workers
            }
            if (!region.geo.count(row.home_cbg)) {
                throw DataError("od.csv:" + std::to_string(r + 2) + ": home_cbg " + row.home_cbg +
                                " not present in geo.csv");
            }
            if (row.work_cbg != kOutside && !region.geo.count(row.work_cbg)) {
                throw DataError("od.csv:" + std::to_string(r + 2) + ": work_cbg " + row.work_cbg +
                                " not present in geo.csv");
            }
            region.od_by_origin[row.home_cbg].push_back(std::move(row));
        }
    }

    {
        auto t = csv::read(require_file(input_dir, "wac.csv"));
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const std::string& cbg = t.cell(r, "work_cbg");
            if (cbg != kOutside && !region.geo.count(cbg)) {
                throw DataError("wac.csv:" + std::to_string(r + 2) + ": work_cbg " + cbg +
                                " not present in geo.csv");
            }
            auto ind = industry_from_string(t.cell(r, "industry"));
            if (!ind) {
                throw DataError("wac.csv:" + std::to_string(r + 2) + ": unknown industry '" +
                                t.cell(r, "industry") + "'");
            }
            double count = t.num(r, "count");
            if (count < 0) throw DataError("wac.csv:" + std::to_string(r + 2) + ": negative count");
            auto& arr = region.wac.try_emplace(cbg).first->second;
            arr[static_cast<std::size_t>(*ind)] += count;
        }
    }

    {
        auto t = csv::read(require_file(input_dir, "cbp.csv"));
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            CbpBin b;
            b.county = t.cell(r, "county");
            b.bin_min = t.num(r, "bin_min");
            const std::string& mx = t.cell(r, "bin_max");
            b.bin_max = mx.empty() ? -1.0 : t.num(r, "bin_max");
            b.count = t.num(r, "count");
            if (b.bin_min < 1 || b.count < 0) {
                throw DataError("cbp.csv:" + std::to_string(r + 2) + ": bin_min must be >= 1 and "
                                "count >= 0");
            }
            region.cbp_by_county[b.county].push_back(std::move(b));
        }
        for (auto& [county, bins] : region.cbp_by_county) {
            std::sort(bins.begin(), bins.end(),
                      [](const CbpBin& a, const CbpBin& b) { return a.bin_min < b.bin_min; });
        }
    }

    {
        auto t = csv::read(require_file(input_dir, "schools.csv"));
        std::set<std::string> seen;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            School s;
            s.id = t.cell(r, "school_id");
            if (!seen.insert(s.id).second) {
                throw DataError("schools.csv: duplicate school_id " + s.id);
            }
            s.x = t.num(r, "x");
            s.y = t.num(r, "y");
            s.low_grade = parse_grade(t, r, "low_grade");
            s.high_grade = parse_grade(t, r, "high_grade");
            if (s.low_grade > s.high_grade) {
                throw DataError("schools.csv:" + std::to_string(r + 2) +
                                ": low_grade > high_grade");
            }
            s.n_students = t.cell(r, "n_students").empty() ? -1.0 : t.num(r, "n_students");
            s.n_teachers = t.cell(r, "n_teachers").empty() ? -1.0 : t.num(r, "n_teachers");
            s.active = t.integer(r, "active") != 0;
            s.regular = t.integer(r, "regular") != 0;
            region.schools.push_back(std::move(s));
        }
        fill_missing_school_counts(region.schools);
    }

    return region;
}

TargetVector derive_targets(const csv::Table& cbg_table, std::size_t row,
                            const TargetSchema& schema) {
    TargetVector e(schema.width(), 0.0);
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
        double sum = 0.0;
        for (const auto& raw : schema.columns[i].raw_columns) {
            sum += cbg_table.num(row, raw);
        }
        e[i] = sum;
    }
    return e;
}

void compute_contributions(std::vector<MicroHousehold>& pums, const TargetSchema& schema) {
    for (auto& m : pums) {
        m.contribution = household_contribution(m.members, schema);
    }
}

std::map<std::string, P43Props> county_p43_props(const RegionInputs& region) {
    const auto& cols = p43_column_names();
    // raw sums per county: [band][type]
    std::map<std::string, std::array<std::array<double, 3>, 3>> sums;
    for (const auto& cbg : region.cbg_ids) {
        const auto& county = region.geo_of(cbg).county;
        auto& s = sums.try_emplace(county).first->second;
        std::size_t r = region.cbg_row.at(cbg);
        s[0][0] += region.cbg_marginals.num(r, cols[0]);
        s[0][1] += region.cbg_marginals.num(r, cols[1]);
        s[1][0] += region.cbg_marginals.num(r, cols[2]);
        s[1][1] += region.cbg_marginals.num(r, cols[3]);
        s[1][2] += region.cbg_marginals.num(r, cols[4]);
        s[2][0] += region.cbg_marginals.num(r, cols[5]);
        s[2][1] += region.cbg_marginals.num(r, cols[6]);
    }
    std::map<std::string, P43Props> out;
    for (auto& [county, s] : sums) {
        P43Props p{};
        for (int band = 0; band < 3; ++band) {
            double tot = s[band][0] + s[band][1] + s[band][2];
            if (tot > 0) {
                for (int t = 0; t < 3; ++t) p[band][t] = s[band][t] / tot;
            } else {
                p[band] = {1.0, 0.0, 0.0};  // no P43 mass: default to institutional
            }
        }
        out[county] = p;
    }
    return out;
}

GqCounts derive_gq_counts(const csv::Table& cbg_table, std::size_t row, const P43Props& props) {
    double total_adults = cbg_table.num(row, kColAdultsTotal);
    double household_adults = cbg_table.num(row, kColAdultsHousehold);
    double total_gq = cbg_table.num(row, kColGqTotal);
    double gq_65plus = cbg_table.num(row, kColGq65plus);

    auto clamp0 = [&](double v, const char* what) {
        if (v < 0) {
            log::warn(std::string("gq derivation: ") + what + " negative (" + format_double(v) +
                      "), clamped to 0");
            return 0.0;
        }
        return v;
    };

    double gq_adults = clamp0(total_adults - household_adults, "adults in GQ");
    gq_65plus = clamp0(gq_65plus, "65+ GQ count");
    double gq_18_64 = clamp0(gq_adults - gq_65plus, "18-64 GQ count");
    double gq_under18 = clamp0(total_gq - gq_adults, "under-18 GQ count");

    std::array<int64_t, 3> band_totals = {static_cast<int64_t>(std::llround(gq_under18)),
                                          static_cast<int64_t>(std::llround(gq_18_64)),
                                          static_cast<int64_t>(std::llround(gq_65plus))};

    GqCounts out;
    for (int band = 0; band < 3; ++band) {
        std::array<double, 3> p = props[band];
        if (band != static_cast<int>(GqBand::Age18to64)) {
            p[static_cast<int>(GqType::Military)] = 0.0;  // military residents only in 18-64
        }
        double mass = p[0] + p[1] + p[2];
        std::vector<double> weights;
        if (mass <= 0) {
            weights = {1.0, 0.0, 0.0};
        } else {
            weights = {p[0], p[1], p[2]};
        }
        auto split = largest_remainder(band_totals[band], weights);
        for (int t = 0; t < 3; ++t) out.counts[band][t] = split[static_cast<std::size_t>(t)];
    }
    return out;
}

std::vector<std::string> filter_cbgs(const RegionInputs& region) {
    auto props = county_p43_props(region);
    std::vector<std::string> retained;
    for (const auto& cbg : region.cbg_ids) {
        std::size_t r = region.cbg_row.at(cbg);
        const GeoRow& g = region.geo_of(cbg);
        double households = region.cbg_marginals.num(r, kColHouseholdsTotal);
        auto gq = derive_gq_counts(region.cbg_marginals, r, props.at(g.county));
        if (g.puma.empty()) {
            log::info("dropping CBG " + cbg + ": no PUMA mapping");
            continue;
        }
        if (households < 20 && gq.total() < 20) {
            log::info("dropping CBG " + cbg + ": " + format_double(households) +
                      " households and " + std::to_string(gq.total()) + " GQ residents");
            continue;
        }
        retained.push_back(cbg);
    }
    std::sort(retained.begin(), retained.end());
    return retained;
}

LognormalParams fit_employer_sizes(const std::vector<CbpBin>& bins) {
    std::vector<CbpBin> sorted = bins;
    std::sort(sorted.begin(), sorted.end(),
              [](const CbpBin& a, const CbpBin& b) { return a.bin_min < b.bin_min; });

    int positive = 0;
    for (const auto& b : sorted) {
        if (b.count > 0) ++positive;
        if (b.bin_min < 1) throw ValidationError("employer-size bins: bin_min must be >= 1");
    }
    if (positive < 2) {
        throw ValidationError(
            "employer-size bins are degenerate (all mass in one bin); "
            "fall back to the region-level default");
    }

    std::vector<BinEdges> edges;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        BinEdges e{};
        // Sizes below the first bin cannot occur (draws are clamped upward),
        // so the first bin is left-open.
        e.lo = i == 0 ? -kInf : std::log(sorted[i].bin_min);
        if (i + 1 < sorted.size()) {
            e.hi = std::log(sorted[i + 1].bin_min);
        } else {
            e.hi = sorted[i].bin_max < 0 ? kInf : std::log(sorted[i].bin_max + 1.0);
        }
        e.count = sorted[i].count;
        edges.push_back(e);
    }

    // moment guess from log-midpoints
    double n = 0.0, mean = 0.0;
    for (const auto& e : edges) {
        double mid;
        if (e.lo == -kInf) mid = e.hi - 0.5;
        else if (e.hi == kInf) mid = e.lo + 0.5;
        else mid = (e.lo + e.hi) / 2.0;
        n += e.count;
        mean += e.count * mid;
    }
    mean /= n;
    double var = 0.0;
    for (const auto& e : edges) {
        double mid;
        if (e.lo == -kInf) mid = e.hi - 0.5;
        else if (e.hi == kInf) mid = e.lo + 0.5;
        else mid = (e.lo + e.hi) / 2.0;
        var += e.count * (mid - mean) * (mid - mean);
    }
    double sigma0 = std::clamp(std::sqrt(var / n), 0.1, 5.0);

    auto [mu, log_sigma] = minimize_nll(edges, mean, std::log(sigma0));
    return {mu, std::exp(log_sigma)};
}

std::vector<uint32_t> nearest_schools(const std::string& cbg, int grade,
                                      const std::vector<School>& schools,
                                      const std::map<std::string, GeoRow>& geo) {
    auto git = geo.find(cbg);
    if (git == geo.end()) throw DataError("nearest_schools: CBG missing from geo: " + cbg);
    double cx = git->second.centroid_x, cy = git->second.centroid_y;

    std::vector<std::pair<double, uint32_t>> eligible;
    for (uint32_t i = 0; i < schools.size(); ++i) {
        const School& s = schools[i];
        if (!s.active || !s.regular) continue;
        if (grade < s.low_grade || grade > s.high_grade) continue;
        double dx = s.x - cx, dy = s.y - cy;
        eligible.emplace_back(std::sqrt(dx * dx + dy * dy), i);
    }
    std::sort(eligible.begin(), eligible.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return schools[a.second].id < schools[b.second].id;
    });
    std::vector<uint32_t> out;
    for (std::size_t i = 0; i < eligible.size() && i < 5; ++i) out.push_back(eligible[i].second);
    return out;
}

SchoolRankings rank_schools(const RegionInputs& region, const std::vector<std::string>& cbgs) {
    SchoolRankings rankings;
    for (const auto& cbg : cbgs) {
        auto& per_grade = rankings.by_cbg[cbg];
        for (int g = kMinGrade; g <= kMaxGrade; ++g) {
            per_grade[static_cast<std::size_t>(g)] =
                nearest_schools(cbg, g, region.schools, region.geo);
        }
    }
    return rankings;
}

}  // namespace synthnet
