#include "synthnet/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "synthnet/csv.hpp"
#include "synthnet/util.hpp"

namespace synthnet {

namespace {

uint64_t pack_pair(int64_t u, int64_t v) {
    return (static_cast<uint64_t>(u) << 32) | static_cast<uint64_t>(v);
}

std::pair<int64_t, int64_t> ordered(int64_t a, int64_t b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

const std::array<std::string, 4>& layer_names() {
    static const std::array<std::string, 4> names = {"home", "work", "school", "gq"};
    return names;
}

std::vector<std::vector<double>> sbm_rate_table(const std::vector<int64_t>& block_sizes,
                                                double mean_degree, double alpha) {
    int64_t total = 0;
    for (int64_t s : block_sizes) total += s;
    std::size_t nb = block_sizes.size();
    std::vector<std::vector<double>> k(nb, std::vector<double>(nb, 0.0));
    for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
            double share = total > 0 ? static_cast<double>(block_sizes[j]) /
                                           static_cast<double>(total)
                                     : 0.0;
            k[i][j] = (1.0 - alpha) * mean_degree * share;
            if (i == j) k[i][j] += alpha * mean_degree;
        }
    }
    return k;
}

SbmResult sbm_generate(const std::vector<int>& block_of, const std::vector<int64_t>& block_sizes,
                       double mean_degree, double alpha, RngStream& rng) {
    if (alpha < 0.0 || alpha > 1.0) throw ValidationError("sbm_generate: alpha must be in [0,1]");
    if (mean_degree < 0.0) throw ValidationError("sbm_generate: mean degree must be >= 0");
    std::size_t n = block_of.size();
    SbmResult out;
    if (n < 2) return out;

    auto rates = sbm_rate_table(block_sizes, mean_degree, alpha);
    std::size_t nb = block_sizes.size();

    // pair probabilities: expected neighbors in block j of a block-i vertex
    // must equal rates[i][j]
    std::vector<std::vector<double>> prob(nb, std::vector<double>(nb, 0.0));
    for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
            double denom = i == j ? static_cast<double>(block_sizes[i] - 1)
                                  : static_cast<double>(block_sizes[j]);
            double p = denom > 0 ? rates[i][j] / denom : 0.0;
            if (p > 1.0) {
                p = 1.0;
                ++out.clamped_pairs;
            }
            prob[i][j] = p;
        }
    }

    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double p = prob[static_cast<std::size_t>(block_of[a])]
                           [static_cast<std::size_t>(block_of[b])];
            if (p > 0.0 && rng.uniform01() < p) {
                out.edges.emplace_back(static_cast<int64_t>(a), static_cast<int64_t>(b));
            }
        }
    }
    return out;
}

std::vector<std::pair<int64_t, int64_t>> watts_strogatz(int64_t n, int k, double beta,
                                                        RngStream& rng) {
    if (k % 2 != 0) throw ValidationError("watts_strogatz: k must be even");
    if (n <= k) throw ValidationError("watts_strogatz: need more than k+1 members");
    if (beta < 0.0 || beta > 1.0) throw ValidationError("watts_strogatz: beta in [0,1]");

    std::vector<std::set<int64_t>> adj(static_cast<std::size_t>(n));
    auto connect = [&](int64_t a, int64_t b) {
        adj[static_cast<std::size_t>(a)].insert(b);
        adj[static_cast<std::size_t>(b)].insert(a);
    };
    auto disconnect = [&](int64_t a, int64_t b) {
        adj[static_cast<std::size_t>(a)].erase(b);
        adj[static_cast<std::size_t>(b)].erase(a);
    };

    for (int64_t i = 0; i < n; ++i) {
        for (int j = 1; j <= k / 2; ++j) {
            connect(i, (i + j) % n);
        }
    }
    // rewire clockwise lattice edges in ring order
    for (int j = 1; j <= k / 2; ++j) {
        for (int64_t i = 0; i < n; ++i) {
            int64_t old_target = (i + j) % n;
            if (!adj[static_cast<std::size_t>(i)].count(old_target)) continue;  // already moved
            if (!rng.bernoulli(beta)) continue;
            if (static_cast<int64_t>(adj[static_cast<std::size_t>(i)].size()) >= n - 1) continue;
            for (;;) {
                int64_t t = static_cast<int64_t>(rng.below(static_cast<uint64_t>(n)));
                if (t == i || adj[static_cast<std::size_t>(i)].count(t)) continue;
                disconnect(i, old_target);
                connect(i, t);
                break;
            }
        }
    }

    std::vector<std::pair<int64_t, int64_t>> edges;
    for (int64_t u = 0; u < n; ++u) {
        for (int64_t v : adj[static_cast<std::size_t>(u)]) {
            if (u < v) edges.emplace_back(u, v);
        }
    }
    return edges;
}

ReferenceKind reference_kind_from_string(const std::string& s) {
    if (s == "barabasi_albert" || s == "ba") return ReferenceKind::BarabasiAlbert;
    if (s == "erdos_renyi" || s == "er") return ReferenceKind::ErdosRenyi;
    if (s == "static_scale_free" || s == "ssf") return ReferenceKind::StaticScaleFree;
    if (s == "watts_strogatz" || s == "ws") return ReferenceKind::WattsStrogatz;
    throw ValidationError("unknown reference network kind: " + s);
}

namespace {

ContactGraph erdos_renyi(int64_t n, double mean_degree, RngStream& rng) {
    ContactGraph g;
    g.n_vertices = n;
    if (n < 2) return g;
    double p = mean_degree / static_cast<double>(n - 1);
    if (p <= 0.0) return g;
    if (p >= 1.0) throw ValidationError("erdos_renyi: mean degree implies p >= 1");

    // geometric skipping over the upper-triangular pair sequence
    double log_q = std::log(1.0 - p);
    int64_t v = 1, w = -1;
    while (v < n) {
        double r = 1.0 - rng.uniform01();  // (0, 1]
        w += 1 + static_cast<int64_t>(std::floor(std::log(r) / log_q));
        while (w >= v && v < n) {
            w -= v;
            ++v;
        }
        if (v < n) g.edges.push_back({w, v, Layer::Work});
    }
    return g;
}

ContactGraph barabasi_albert(int64_t n, double mean_degree, RngStream& rng) {
    int64_t m = static_cast<int64_t>(std::floor(mean_degree / 2.0));
    if (m < 1) throw ValidationError("barabasi_albert: mean degree must be >= 2");
    if (n <= m) throw ValidationError("barabasi_albert: n must exceed m");
    ContactGraph g;
    g.n_vertices = n;

    std::vector<int64_t> repeated;  // endpoint multiset; uniform pick = preferential
    std::vector<int64_t> targets;
    for (int64_t i = 0; i < m; ++i) targets.push_back(i);
    for (int64_t v = m; v < n; ++v) {
        for (int64_t t : targets) {
            g.edges.push_back({t, v, Layer::Work});
            repeated.push_back(t);
            repeated.push_back(v);
        }
        std::set<int64_t> next;
        while (static_cast<int64_t>(next.size()) < m) {
            next.insert(repeated[rng.below(repeated.size())]);
        }
        targets.assign(next.begin(), next.end());
    }
    return g;
}

ContactGraph static_scale_free(int64_t n, double mean_degree, double exponent, RngStream& rng) {
    if (exponent <= 2.0) throw ValidationError("static_scale_free: exponent must be > 2");
    ContactGraph g;
    g.n_vertices = n;
    if (n < 2) return g;
    double xi = 1.0 / (exponent - 1.0);
    std::vector<double> cum(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        acc += std::pow(static_cast<double>(i + 1), -xi);
        cum[static_cast<std::size_t>(i)] = acc;
    }
    auto draw = [&]() {
        double u = rng.uniform01() * acc;
        auto it = std::lower_bound(cum.begin(), cum.end(), u);
        return static_cast<int64_t>(it - cum.begin());
    };

    int64_t m_target = static_cast<int64_t>(std::llround(mean_degree * static_cast<double>(n) / 2.0));
    std::unordered_set<uint64_t> seen;
    seen.reserve(static_cast<std::size_t>(m_target) * 2);
    int64_t guard = m_target * 200;
    while (static_cast<int64_t>(g.edges.size()) < m_target && guard-- > 0) {
        int64_t a = draw(), b = draw();
        if (a == b) continue;
        auto [u, v] = ordered(a, b);
        if (!seen.insert(pack_pair(u, v)).second) continue;
        g.edges.push_back({u, v, Layer::Work});
    }
    if (static_cast<int64_t>(g.edges.size()) < m_target) {
        log::warn("static_scale_free: stopped " +
                  std::to_string(m_target - static_cast<int64_t>(g.edges.size())) +
                  " edges short of the target");
    }
    return g;
}

int even_floor(double x) {
    int k = static_cast<int>(std::floor(x));
    return k % 2 == 0 ? k : k - 1;
}

}  // namespace

ContactGraph reference_graph(ReferenceKind kind, int64_t n, double mean_degree,
                             const NetworkParams& params, RngStream& rng) {
    switch (kind) {
        case ReferenceKind::ErdosRenyi:
            return erdos_renyi(n, mean_degree, rng);
        case ReferenceKind::BarabasiAlbert:
            return barabasi_albert(n, mean_degree, rng);
        case ReferenceKind::StaticScaleFree:
            return static_scale_free(n, mean_degree, params.sf_exponent, rng);
        case ReferenceKind::WattsStrogatz: {
            int k = std::max(2, even_floor(mean_degree));
            ContactGraph g;
            g.n_vertices = n;
            for (auto& [u, v] : watts_strogatz(n, k, params.gq_rewire_prob, rng)) {
                g.edges.push_back({u, v, Layer::Work});
            }
            return g;
        }
    }
    throw ValidationError("reference_graph: bad kind");
}

ContactGraph assemble_network(const Population& pop, const NetworkParams& params,
                              uint64_t master_seed, int threads) {
    ContactGraph g;
    g.n_vertices = static_cast<int64_t>(pop.persons.size());

    // home layer: full clique within each household
    for (const auto& household : pop.households) {
        for (std::size_t a = 0; a < household.size(); ++a) {
            for (std::size_t b = a + 1; b < household.size(); ++b) {
                auto [u, v] = ordered(household[a], household[b]);
                g.edges.push_back({u, v, Layer::Home});
            }
        }
    }

    // per-place layers, generated independently and merged in place order
    std::vector<std::vector<ContactEdge>> per_place(pop.places.size());
    std::atomic<int64_t> clamped{0};

    parallel_for(pop.places.size(), threads, [&](std::size_t pi) {
        const Place& place = pop.places[pi];
        RngStream rng = RngStream::derive(master_seed, "netgen", RngStream::hash_str(place.id));
        std::vector<ContactEdge>& out = per_place[pi];

        if (place.kind == Place::Kind::Workplace) {
            if (place.cbg == kOutside) return;  // placeholder workplaces stay edgeless
            const auto& members = place.members;
            if (members.size() < 2) return;
            std::vector<int> block_of(members.size());
            std::vector<int64_t> sizes(2, 0);
            for (std::size_t i = 0; i < members.size(); ++i) {
                const Person& p = pop.persons[static_cast<std::size_t>(members[i])];
                // placeholders and GQ residents carry no microdata income and
                // land in the low block
                int block = (!p.placeholder && p.household_id >= 0 &&
                             p.attrs.income >= params.income_split)
                                ? 1
                                : 0;
                block_of[i] = block;
                sizes[static_cast<std::size_t>(block)] += 1;
            }
            std::vector<int64_t> nonzero_sizes;
            std::vector<int> remap(2, -1);
            for (int b = 0; b < 2; ++b) {
                if (sizes[static_cast<std::size_t>(b)] > 0) {
                    remap[static_cast<std::size_t>(b)] =
                        static_cast<int>(nonzero_sizes.size());
                    nonzero_sizes.push_back(sizes[static_cast<std::size_t>(b)]);
                }
            }
            for (auto& b : block_of) b = remap[static_cast<std::size_t>(b)];
            auto res = sbm_generate(block_of, nonzero_sizes, params.work_mean_degree,
                                    params.assortativity, rng);
            clamped += res.clamped_pairs;
            for (auto& [a, b] : res.edges) {
                auto [u, v] = ordered(members[static_cast<std::size_t>(a)],
                                      members[static_cast<std::size_t>(b)]);
                out.push_back({u, v, Layer::Work});
            }
        } else if (place.kind == Place::Kind::School) {
            std::vector<int64_t> everyone = place.members;  // students
            if (everyone.size() + place.staff.size() < 2) return;

            // blocks are grade levels; teachers draw a grade in proportion to
            // the number of students in it
            std::map<int, int> grade_block;
            std::vector<int64_t> sizes;
            std::vector<int> block_of;
            std::vector<double> grade_weights;
            std::vector<int> grades_present;
            for (int64_t sid : place.members) {
                int grade = pop.persons[static_cast<std::size_t>(sid)].attrs.grade;
                if (!grade_block.count(grade)) {
                    grade_block[grade] = static_cast<int>(sizes.size());
                    sizes.push_back(0);
                    grades_present.push_back(grade);
                    grade_weights.push_back(0.0);
                }
                int b = grade_block[grade];
                block_of.push_back(b);
                sizes[static_cast<std::size_t>(b)] += 1;
                grade_weights[static_cast<std::size_t>(b)] += 1.0;
            }
            if (sizes.empty()) {  // staff only: one block
                sizes.push_back(0);
                grade_weights.push_back(1.0);
            }
            double weight_total = 0.0;
            for (double w : grade_weights) weight_total += w;
            for (int64_t tid : place.staff) {
                everyone.push_back(tid);
                double u = rng.uniform01() * weight_total;
                double acc = 0.0;
                int b = 0;
                for (std::size_t k = 0; k < grade_weights.size(); ++k) {
                    acc += grade_weights[k];
                    if (u < acc) {
                        b = static_cast<int>(k);
                        break;
                    }
                }
                block_of.push_back(b);
                sizes[static_cast<std::size_t>(b)] += 1;
            }
            if (everyone.size() < 2) return;
            auto res = sbm_generate(block_of, sizes, params.school_mean_degree,
                                    params.assortativity, rng);
            clamped += res.clamped_pairs;
            for (auto& [a, b] : res.edges) {
                auto [u, v] = ordered(everyone[static_cast<std::size_t>(a)],
                                      everyone[static_cast<std::size_t>(b)]);
                out.push_back({u, v, Layer::School});
            }
        } else {  // group quarters: small-world over residents + staff
            std::vector<int64_t> everyone = place.members;
            everyone.insert(everyone.end(), place.staff.begin(), place.staff.end());
            if (everyone.size() < 2) return;
            int k = even_floor(params.gq_mean_degree);
            while (k >= static_cast<int>(everyone.size()) && k > 2) k -= 2;
            if (k < 2) k = 2;
            if (static_cast<int64_t>(everyone.size()) <= k) {
                // tiny facility: complete graph
                for (std::size_t a = 0; a < everyone.size(); ++a) {
                    for (std::size_t b = a + 1; b < everyone.size(); ++b) {
                        auto [u, v] = ordered(everyone[a], everyone[b]);
                        out.push_back({u, v, Layer::Gq});
                    }
                }
                return;
            }
            auto edges = watts_strogatz(static_cast<int64_t>(everyone.size()), k,
                                        params.gq_rewire_prob, rng);
            for (auto& [a, b] : edges) {
                auto [u, v] = ordered(everyone[static_cast<std::size_t>(a)],
                                      everyone[static_cast<std::size_t>(b)]);
                out.push_back({u, v, Layer::Gq});
            }
        }
    });

    for (auto& chunk : per_place) {
        g.edges.insert(g.edges.end(), chunk.begin(), chunk.end());
    }
    if (clamped > 0) {
        log::warn("sbm: clamped probabilities for " + std::to_string(clamped.load()) +
                  " block pairs (small blocks)");
    }
    return g;
}

void write_edge_list(const ContactGraph& g, const std::string& path) {
    std::vector<ContactEdge> sorted = g.edges;
    std::sort(sorted.begin(), sorted.end(), [](const ContactEdge& a, const ContactEdge& b) {
        if (a.layer != b.layer) return static_cast<int>(a.layer) < static_cast<int>(b.layer);
        if (a.u != b.u) return a.u < b.u;
        return a.v < b.v;
    });
    csv::Writer w(path);
    w.row({"u", "v", "layer"});
    for (const auto& e : sorted) {
        w.row({std::to_string(e.u), std::to_string(e.v),
               layer_names()[static_cast<std::size_t>(e.layer)]});
    }
}

ContactGraph read_edge_list(const std::string& path, int64_t n_vertices_hint) {
    auto t = csv::read(path);
    ContactGraph g;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ContactEdge e{};
        e.u = t.integer(r, "u");
        e.v = t.integer(r, "v");
        const std::string& layer = t.cell(r, "layer");
        const auto& names = layer_names();
        auto it = std::find(names.begin(), names.end(), layer);
        if (it == names.end()) {
            throw DataError(path + ":" + std::to_string(r + 2) + ": unknown layer '" + layer +
                            "'");
        }
        e.layer = static_cast<Layer>(it - names.begin());
        if (e.u == e.v) throw DataError(path + ": self loop at row " + std::to_string(r + 2));
        if (e.u > e.v) std::swap(e.u, e.v);
        g.n_vertices = std::max(g.n_vertices, e.v + 1);
        g.edges.push_back(e);
    }
    g.n_vertices = std::max(g.n_vertices, n_vertices_hint);
    return g;
}

}  // namespace synthnet
