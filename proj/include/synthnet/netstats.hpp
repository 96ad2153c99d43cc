#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "synthnet/netgen.hpp"

namespace synthnet {

// Simple (layer-deduplicated) adjacency view of a contact graph.
struct SimpleGraph {
    int64_t n = 0;
    std::vector<int64_t> offsets;    // n+1 entries
    std::vector<int64_t> neighbors;  // sorted per vertex

    int64_t degree(int64_t v) const { return offsets[v + 1] - offsets[v]; }
    int64_t n_edges() const { return static_cast<int64_t>(neighbors.size()) / 2; }
    bool has_edge(int64_t u, int64_t v) const;
};

SimpleGraph simplify(const ContactGraph& g);

struct StatsReport {
    std::string name;
    int64_t n = 0;
    int64_t m = 0;
    double mean_degree = 0.0;
    double mean_local_clustering = 0.0;
    double global_clustering = 0.0;
    std::optional<double> assortativity;  // undefined when degree variance is 0
    std::optional<double> tmh;
    std::optional<double> ir_vd;
};

// local = mean over all vertices of (closed neighbor pairs / d(d-1)/2),
// global = 3 * triangles / connected triples
std::pair<double, double> clustering(const SimpleGraph& g);

// Pearson correlation of end-vertex degrees over directed edges.
std::optional<double> degree_assortativity(const SimpleGraph& g);

// Degree concentration: sum(d^2) / sum(d).
double tmh(const SimpleGraph& g);

// Normalized vertex-degree information index:
// sum(d_i log2 d_i) / (2E log2 2E).
double ir_vd(const SimpleGraph& g);

StatsReport stats_report(const ContactGraph& g, const std::string& name);

std::vector<std::string> stats_csv_header();
std::vector<std::string> stats_csv_row(const StatsReport& r);

}  // namespace synthnet
