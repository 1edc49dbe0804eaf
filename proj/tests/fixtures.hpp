#pragma once

#include "ranksig/ranksig.hpp"

#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ranksig::testing {

inline std::string data_path(const std::string& file) { return std::string(RANKSIG_DATA_DIR) + "/" + file; }

inline institution_record make_record(std::string name, double p, double t, double pp,
                                      std::optional<double> lo = std::nullopt,
                                      std::optional<double> hi = std::nullopt, std::string country = "CN") {
    institution_record r;
    r.name = std::move(name);
    r.country = std::move(country);
    r.period = "2015-2018";
    r.field = "All sciences";
    r.p = p;
    r.t_top10 = t;
    r.pp_top10 = pp;
    r.ci_lower = lo;
    r.ci_upper = hi;
    return r;
}

// Observed counts for Tsinghua and Zhejiang (fractional counting, all sciences).
inline institution_record tsinghua() { return make_record("Tsinghua University", 19902, 2738, 0.1376, 0.133, 0.142); }
inline institution_record zhejiang() { return make_record("Zhejiang University", 23510, 2604, 0.1108, 0.105, 0.117); }
// Illustrative third institution: counts are constructed, not published.
inline institution_record peking() { return make_record("Peking University", 15000, 1650, 0.11, 0.105, 0.115); }

inline contingency_table tsinghua_zhejiang_table() {
    return contingency_table({"Tsinghua", "Zhejiang"}, {"top-10%", "non-top"}, {{2738, 17164}, {2604, 20906}});
}

// Published node (diagonal) and link (off-diagonal) z-values for the trio.
inline std::vector<scored_institution> trio_nodes() {
    return {{"Peking University", 2.689, "CN", ""},
            {"Tsinghua University", 11.005, "CN", ""},
            {"Zhejiang University", 3.800, "CN", ""}};
}
inline std::vector<std::vector<double>> trio_links() {
    // Row/column order follows trio_nodes(); z(b, a) = -z(a, b).
    return {{0.0, -8.460, 0.638}, {8.460, 0.0, 8.533}, {-0.638, -8.533, 0.0}};
}

struct published_row {
    scored_institution node;
    std::size_t overall_rank = 0;
    std::size_t within_rank = 0;
};

// Published China z-tables: 203 rows with group, overall rank and within-group rank.
inline std::vector<published_row> published_group_rows() {
    std::ifstream in(data_path("china_z_groups.csv"));
    if (!in) throw std::runtime_error("missing published group fixture");
    std::string line;
    std::getline(in, line);
    std::vector<published_row> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        auto cells = detail::split_csv_line(line, ++line_no);
        published_row r;
        r.node = {cells[0], std::stod(cells[1]), cells[2], cells[3]};
        r.overall_rank = std::stoul(cells[4]);
        r.within_rank = std::stoul(cells[5]);
        out.push_back(std::move(r));
    }
    return out;
}

// Random valid record with p in [1, 50000) and a consistent t / pp pair.
inline institution_record random_record(std::mt19937_64& rng, const std::string& name) {
    std::uniform_real_distribution<double> size(1.0, 50000.0);
    std::uniform_real_distribution<double> share(0.0, 0.4);
    const double p = std::floor(size(rng));
    const double t = std::round(share(rng) * p);
    return make_record(name, p, t, t / p);
}

inline contingency_table random_table(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> cell(0.5, 1000.0);
    std::vector<std::vector<double>> cells(rows, std::vector<double>(cols));
    for (auto& r : cells)
        for (auto& v : r) v = cell(rng);
    return contingency_table(std::move(cells));
}

// Random simple graph on n nodes with edge probability `density`.
inline significance_graph random_graph(std::mt19937_64& rng, std::size_t n, double density) {
    std::vector<graph_node> nodes;
    std::normal_distribution<double> z(0.0, 3.0);
    for (std::size_t i = 0; i < n; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "n%03zu", i);
        nodes.push_back({name, z(rng)});
    }
    std::bernoulli_distribution coin(density);
    std::vector<graph_edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (coin(rng)) edges.push_back({i, j, 0.0, std::nullopt, false});
    return significance_graph(std::move(nodes), std::move(edges));
}

inline significance_graph graph_from_edges(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    std::vector<graph_node> nodes;
    for (std::size_t i = 0; i < n; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "v%02zu", i);
        nodes.push_back({name, static_cast<double>(n - i)});
    }
    std::vector<graph_edge> edges;
    for (auto [a, b] : pairs) edges.push_back({a, b, 0.0, std::nullopt, false});
    return significance_graph(std::move(nodes), std::move(edges));
}

} // namespace ranksig::testing
