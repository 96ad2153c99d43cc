#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "synthnet/placement.hpp"
#include "synthnet/rng.hpp"

namespace synthnet {

enum class Layer : uint8_t { Home = 0, Work = 1, School = 2, Gq = 3 };

const std::array<std::string, 4>& layer_names();

struct ContactEdge {
    int64_t u, v;  // u < v
    Layer layer;
};

struct ContactGraph {
    int64_t n_vertices = 0;
    std::vector<ContactEdge> edges;
};

struct NetworkParams {
    double work_mean_degree = 8.0;
    double school_mean_degree = 12.0;
    double assortativity = 0.9;
    double gq_mean_degree = 12.0;  // rounded to an even lattice degree
    double gq_rewire_prob = 0.25;
    int64_t income_split = 40000;  // low/high workplace block boundary
    double sf_exponent = 2.5;      // static scale-free degree exponent
};

// Mean edges from a block-i vertex into block j (the SBM rate table).
// Row sums equal K exactly for any block sizes and alpha.
std::vector<std::vector<double>> sbm_rate_table(const std::vector<int64_t>& block_sizes,
                                                double mean_degree, double alpha);

struct SbmResult {
    std::vector<std::pair<int64_t, int64_t>> edges;  // indices into members
    int64_t clamped_pairs = 0;
};

// Pairwise-Bernoulli realization of the block model over members with the
// given block labels (0..B-1). Probabilities clamp to [0,1] for tiny blocks.
SbmResult sbm_generate(const std::vector<int>& block_of, const std::vector<int64_t>& block_sizes,
                       double mean_degree, double alpha, RngStream& rng);

// Ring lattice of degree k (even) with each lattice edge rewired with
// probability beta. Preserves the edge count exactly.
std::vector<std::pair<int64_t, int64_t>> watts_strogatz(int64_t n, int k, double beta,
                                                        RngStream& rng);

enum class ReferenceKind { BarabasiAlbert, ErdosRenyi, StaticScaleFree, WattsStrogatz };

ReferenceKind reference_kind_from_string(const std::string& s);

ContactGraph reference_graph(ReferenceKind kind, int64_t n, double mean_degree,
                             const NetworkParams& params, RngStream& rng);

// Household cliques + per-workplace and per-school SBM + per-GQ small-world
// layers over the placed population.
ContactGraph assemble_network(const Population& pop, const NetworkParams& params,
                              uint64_t master_seed, int threads);

void write_edge_list(const ContactGraph& g, const std::string& path);
ContactGraph read_edge_list(const std::string& path, int64_t n_vertices_hint = -1);

}  // namespace synthnet
