#pragma once

// Significance graphs: institutions are nodes, an edge joins two institutions
// whose difference is not significant. Groupings partition the nodes into
// ordered tiers.

#include "ranksig/error.hpp"
#include "ranksig/ingest.hpp"
#include "ranksig/record.hpp"
#include "ranksig/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ranksig {

enum class criterion { ztest, ci_overlap };

struct graph_node {
    std::string name;
    double z = 0.0; // z against the 10% expectation
};

struct graph_edge {
    std::size_t a = 0; // a < b
    std::size_t b = 0;
    double link_z = 0.0;
    std::optional<interval_relation> relation; // CI criterion only
    bool strong = false;                        // containment under the CI criterion
};

class significance_graph {
public:
    significance_graph() = default;

    // Nodes must already be sorted by name; edges are normalized to a < b.
    significance_graph(std::vector<graph_node> nodes, std::vector<graph_edge> edges)
        : nodes_(std::move(nodes)), edges_(std::move(edges)), adjacency_(nodes_.size()) {
        for (std::size_t i = 1; i < nodes_.size(); ++i)
            if (!(nodes_[i - 1].name < nodes_[i].name))
                throw error(errc::duplicate_record, "node names must be unique: '" + nodes_[i].name + "'");
        for (auto& e : edges_) {
            if (e.a == e.b) throw error(errc::invariant_violation, "self-edge on '" + nodes_.at(e.a).name + "'");
            if (e.a > e.b) std::swap(e.a, e.b);
            if (e.b >= nodes_.size()) throw error(errc::invariant_violation, "edge endpoint out of range");
        }
        std::sort(edges_.begin(), edges_.end(),
                  [](const graph_edge& x, const graph_edge& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
        for (std::size_t k = 1; k < edges_.size(); ++k)
            if (edges_[k - 1].a == edges_[k].a && edges_[k - 1].b == edges_[k].b)
                throw error(errc::invariant_violation, "duplicate edge");
        for (const auto& e : edges_) {
            adjacency_[e.a].push_back(e.b);
            adjacency_[e.b].push_back(e.a);
        }
    }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<graph_node>& nodes() const noexcept { return nodes_; }
    const std::vector<graph_edge>& edges() const noexcept { return edges_; }
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return adjacency_.at(i); }
    std::size_t degree(std::size_t i) const { return adjacency_.at(i).size(); }

    std::optional<std::size_t> index_of(const std::string& name) const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), name,
                                   [](const graph_node& n, const std::string& s) { return n.name < s; });
        if (it == nodes_.end() || it->name != name) return std::nullopt;
        return static_cast<std::size_t>(it - nodes_.begin());
    }

    const graph_edge* find_edge(std::size_t a, std::size_t b) const {
        if (a > b) std::swap(a, b);
        auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(a, b),
                                   [](const graph_edge& e, const std::pair<std::size_t, std::size_t>& k) {
                                       return std::tie(e.a, e.b) < std::tie(k.first, k.second);
                                   });
        if (it == edges_.end() || it->a != a || it->b != b) return nullptr;
        return &*it;
    }

private:
    std::vector<graph_node> nodes_;
    std::vector<graph_edge> edges_;
    std::vector<std::vector<std::size_t>> adjacency_;
};

struct graph_options {
    criterion rule = criterion::ztest;
    double threshold = z_p01;
    proportion_source proportions = proportion_source::stored;
    double expectation = 0.1;
    unsigned threads = 1;
};

namespace detail {

// Runs body(i) for i in [0, n) across `threads` workers, rethrowing the
// exception of the lowest failing i.
template <typename Body>
void parallel_rows(std::size_t n, unsigned threads, Body body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::vector<std::exception_ptr> failures(n);
    auto work = [&](unsigned worker) {
        for (std::size_t i = worker; i < n; i += threads) {
            try {
                body(i);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);
}

} // namespace detail

inline significance_graph build_graph(std::vector<institution_record> records, const graph_options& opt = {}) {
    if (records.empty()) throw error(errc::no_match, "no records to build a graph from");
    std::sort(records.begin(), records.end(),
              [](const institution_record& x, const institution_record& y) { return x.name < y.name; });
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i - 1].name == records[i].name)
            throw error(errc::duplicate_record, "'" + records[i].name + "' appears twice in the selection");
    if (opt.rule == criterion::ci_overlap)
        for (const auto& r : records)
            if (!r.stability_interval())
                throw error(errc::missing_interval, "'" + r.name + "' has no stability interval");

    std::vector<graph_node> nodes;
    nodes.reserve(records.size());
    for (const auto& r : records) nodes.push_back({r.name, z_vs_expectation(r, opt.expectation, opt.proportions)});

    const std::size_t n = records.size();
    std::vector<std::vector<graph_edge>> rows(n);
    detail::parallel_rows(n, opt.threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            graph_edge e{i, j, z_between(records[i], records[j], opt.proportions).z, std::nullopt, false};
            if (opt.rule == criterion::ztest) {
                if (std::abs(e.link_z) < opt.threshold) rows[i].push_back(e);
            } else {
                const auto rel = ci_relation(records[i], records[j]);
                if (rel.linked()) {
                    e.relation = rel;
                    e.strong = rel.kind == interval_kind::containment;
                    rows[i].push_back(e);
                }
            }
        }
    });
    std::vector<graph_edge> edges;
    for (auto& r : rows) edges.insert(edges.end(), r.begin(), r.end());
    return significance_graph(std::move(nodes), std::move(edges));
}

// Graph from precomputed node z-values and a symmetric link-z matrix indexed
// like `nodes`. An empty matrix yields an edgeless graph.
inline significance_graph build_graph_from_scores(const std::vector<scored_institution>& nodes,
                                                  const std::vector<std::vector<double>>& link_z = {},
                                                  double threshold = z_p01) {
    if (nodes.empty()) throw error(errc::no_match, "no nodes to build a graph from");
    const std::size_t n = nodes.size();
    if (!link_z.empty()) {
        if (link_z.size() != n) throw error(errc::length_mismatch, "link matrix must be n x n");
        for (const auto& row : link_z)
            if (row.size() != n) throw error(errc::length_mismatch, "link matrix must be n x n");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return nodes[x].name < nodes[y].name; });
    std::vector<graph_node> sorted;
    for (auto k : order) sorted.push_back({nodes[k].name, nodes[k].z});

    std::vector<graph_edge> edges;
    if (!link_z.empty()) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double z = link_z[order[i]][order[j]];
                if (std::abs(z - (-link_z[order[j]][order[i]])) > 1e-12 && std::abs(z - link_z[order[j]][order[i]]) > 1e-12)
                    throw error(errc::invariant_violation, "link matrix is not (anti)symmetric at '" +
                                                               sorted[i].name + "', '" + sorted[j].name + "'");
                if (std::abs(z) < threshold) edges.push_back({i, j, z, std::nullopt, false});
            }
    }
    return significance_graph(std::move(sorted), std::move(edges));
}

// Partition of the graph's nodes into ordered groups. Group 0 holds the
// highest-z institution; singleton groups of degree-0 nodes (isolates) come
// last. Members of each group are listed by descending z, then name.
struct grouping {
    std::vector<std::size_t> assignment;          // node -> group
    std::vector<std::vector<std::size_t>> groups; // group -> members in rank order
    std::vector<bool> isolate_group;              // group -> is an isolate

    std::size_t group_count() const noexcept { return groups.size(); }
    std::size_t tier_count() const noexcept {
        return static_cast<std::size_t>(std::count(isolate_group.begin(), isolate_group.end(), false));
    }
    bool is_isolate(std::size_t node) const { return isolate_group.at(assignment.at(node)); }
};

// Renumbers an arbitrary node labelling into the canonical group order.
inline grouping canonical_grouping(const significance_graph& g, const std::vector<std::size_t>& raw) {
    if (raw.size() != g.node_count()) throw error(errc::length_mismatch, "assignment must cover every node");
    const auto& nodes = g.nodes();
    auto ranks_before = [&](std::size_t x, std::size_t y) {
        if (nodes[x].z != nodes[y].z) return nodes[x].z > nodes[y].z;
        return nodes[x].name < nodes[y].name;
    };

    std::map<std::size_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < raw.size(); ++i) by_label[raw[i]].push_back(i);

    std::vector<std::vector<std::size_t>> members;
    for (auto& [label, m] : by_label) {
        std::sort(m.begin(), m.end(), ranks_before);
        members.push_back(std::move(m));
    }
    auto isolated = [&](const std::vector<std::size_t>& m) { return m.size() == 1 && g.degree(m.front()) == 0; };
    std::sort(members.begin(), members.end(), [&](const auto& x, const auto& y) {
        const bool ix = isolated(x);
        const bool iy = isolated(y);
        if (ix != iy) return !ix;
        return ranks_before(x.front(), y.front());
    });

    grouping out;
    out.assignment.resize(g.node_count());
    for (std::size_t k = 0; k < members.size(); ++k) {
        for (auto i : members[k]) out.assignment[i] = k;
        out.isolate_group.push_back(isolated(members[k]));
    }
    out.groups = std::move(members);
    return out;
}

// Grouping from externally supplied labels (e.g. published tier tables).
inline grouping grouping_from_labels(const significance_graph& g, const std::map<std::string, std::string>& labels) {
    std::map<std::string, std::size_t> ids;
    std::vector<std::size_t> raw(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        auto it = labels.find(g.nodes()[i].name);
        if (it == labels.end())
            throw error(errc::unknown_institution, "no label for '" + g.nodes()[i].name + "'");
        raw[i] = ids.emplace(it->second, ids.size()).first->second;
    }
    return canonical_grouping(g, raw);
}

inline grouping weak_components(const significance_graph& g) {
    constexpr auto unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> comp(g.node_count(), unset);
    std::size_t next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < g.node_count(); ++s) {
        if (comp[s] != unset) continue;
        comp[s] = next;
        stack.push_back(s);
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            for (auto v : g.neighbors(u))
                if (comp[v] == unset) {
                    comp[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    return canonical_grouping(g, comp);
}

// Newman modularity over unweighted edges with a resolution multiplier:
// Q = sum_c [ m_c / m - resolution * (d_c / 2m)^2 ]. Q = 0 for an edgeless graph.
inline double modularity(const significance_graph& g, const grouping& partition, double resolution = 1.0) {
    if (partition.assignment.size() != g.node_count())
        throw error(errc::length_mismatch, "partition must cover every node");
    const double m = static_cast<double>(g.edge_count());
    if (m == 0.0) return 0.0;
    const std::size_t k = partition.group_count();
    std::vector<double> internal(k, 0.0);
    std::vector<double> degree_sum(k, 0.0);
    for (const auto& e : g.edges())
        if (partition.assignment[e.a] == partition.assignment[e.b]) internal[partition.assignment[e.a]] += 1.0;
    for (std::size_t i = 0; i < g.node_count(); ++i)
        degree_sum[partition.assignment[i]] += static_cast<double>(g.degree(i));
    double q = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double frac = degree_sum[c] / (2.0 * m);
        q += internal[c] / m - resolution * frac * frac;
    }
    return q;
}

namespace detail {

// Weighted graph used by the aggregation levels of the clustering.
struct level_graph {
    std::vector<std::vector<std::pair<std::size_t, double>>> adj; // excludes self loops
    std::vector<double> self_loop;                                // A_ii
    std::vector<double> strength;                                 // sum_j A_ij including A_ii
};

// Local moving: returns a community label per node and whether anything moved.
inline std::pair<std::vector<std::size_t>, bool> local_moving(const level_graph& lg, double two_m,
                                                              double resolution, std::mt19937_64& rng) {
    const std::size_t n = lg.strength.size();
    std::vector<std::size_t> community(n);
    std::iota(community.begin(), community.end(), 0);
    std::vector<double> total(lg.strength);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> link_to(n, 0.0);
    std::vector<std::size_t> touched;
    bool moved_any = false;
    bool improved = true;
    while (improved) {
        improved = false;
        for (auto i : order) {
            const std::size_t own = community[i];
            const double k_i = lg.strength[i];
            total[own] -= k_i;

            touched.clear();
            for (const auto& [j, w] : lg.adj[i]) {
                const auto c = community[j];
                if (link_to[c] == 0.0) touched.push_back(c);
                link_to[c] += w;
            }
            auto gain = [&](std::size_t c) { return link_to[c] - resolution * total[c] * k_i / two_m; };

            std::size_t best = own;
            double best_gain = gain(own);
            std::sort(touched.begin(), touched.end());
            for (auto c : touched) {
                const double gc = gain(c);
                if (gc > best_gain + 1e-12) {
                    best = c;
                    best_gain = gc;
                }
            }
            for (auto c : touched) link_to[c] = 0.0;
            link_to[own] = 0.0;

            total[best] += k_i;
            if (best != own) {
                community[i] = best;
                improved = true;
                moved_any = true;
            }
        }
    }
    // compact labels
    std::unordered_map<std::size_t, std::size_t> relabel;
    for (auto& c : community) c = relabel.emplace(c, relabel.size()).first->second;
    return {community, moved_any};
}

inline level_graph aggregate(const level_graph& lg, const std::vector<std::size_t>& community, std::size_t k) {
    level_graph out;
    out.adj.resize(k);
    out.self_loop.assign(k, 0.0);
    out.strength.assign(k, 0.0);
    std::vector<std::map<std::size_t, double>> acc(k);
    for (std::size_t i = 0; i < lg.strength.size(); ++i) {
        const auto ci = community[i];
        out.self_loop[ci] += lg.self_loop[i];
        out.strength[ci] += lg.strength[i];
        for (const auto& [j, w] : lg.adj[i]) {
            const auto cj = community[j];
            if (ci == cj) out.self_loop[ci] += w;
            else acc[ci][cj] += w;
        }
    }
    for (std::size_t c = 0; c < k; ++c)
        for (const auto& [d, w] : acc[c]) out.adj[c].emplace_back(d, w);
    return out;
}

} // namespace detail

// Greedy modularity maximization: seeded local moving followed by
// aggregation, repeated until a level makes no move. The weak-component
// partition is returned instead when it scores higher, so the result is never
// worse than it.
inline grouping cluster(const significance_graph& g, double resolution = 1.0, std::uint64_t seed = 0) {
    const std::size_t n = g.node_count();
    std::vector<std::size_t> membership(n);
    std::iota(membership.begin(), membership.end(), 0);

    if (g.edge_count() > 0) {
        detail::level_graph lg;
        lg.adj.resize(n);
        lg.self_loop.assign(n, 0.0);
        lg.strength.assign(n, 0.0);
        for (const auto& e : g.edges()) {
            lg.adj[e.a].emplace_back(e.b, 1.0);
            lg.adj[e.b].emplace_back(e.a, 1.0);
            lg.strength[e.a] += 1.0;
            lg.strength[e.b] += 1.0;
        }
        const double two_m = 2.0 * static_cast<double>(g.edge_count());
        std::mt19937_64 rng(seed);
        while (true) {
            auto [community, moved] = detail::local_moving(lg, two_m, resolution, rng);
            if (!moved) break;
            const std::size_t k = *std::max_element(community.begin(), community.end()) + 1;
            for (auto& m : membership) m = community[m];
            lg = detail::aggregate(lg, community, k);
        }
    }

    auto found = canonical_grouping(g, membership);
    auto components = weak_components(g);
    if (modularity(g, components, resolution) > modularity(g, found, resolution) + 1e-12) return components;
    return found;
}

struct ranked_row {
    std::string name;
    double z = 0.0;
    std::size_t overall_rank = 0; // 1-based over all nodes
    std::size_t group = 0;        // 0-based group index
    std::size_t within_rank = 0;  // 1-based inside the group
    bool isolate = false;
};

// Rows grouped by group index, then within-group rank.
inline std::vector<ranked_row> rank_groups(const significance_graph& g, const grouping& grouping) {
    if (grouping.assignment.size() != g.node_count())
        throw error(errc::length_mismatch, "grouping must cover every node");
    const auto& nodes = g.nodes();
    std::vector<std::size_t> order(g.node_count());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (nodes[x].z != nodes[y].z) return nodes[x].z > nodes[y].z;
        return nodes[x].name < nodes[y].name;
    });
    std::vector<std::size_t> overall(g.node_count());
    for (std::size_t r = 0; r < order.size(); ++r) overall[order[r]] = r + 1;

    std::vector<ranked_row> rows;
    for (std::size_t k = 0; k < grouping.group_count(); ++k) {
        std::size_t within = 0;
        for (auto i : grouping.groups[k])
            rows.push_back({nodes[i].name, nodes[i].z, overall[i], k, ++within, grouping.isolate_group[k]});
    }
    return rows;
}

// Tier names used when comparing groupings from different methods.
inline std::vector<std::string> tier_labels(const grouping& grouping) {
    const std::size_t tiers = grouping.tier_count();
    std::vector<std::string> names;
    if (tiers == 1) names = {"high"};
    else if (tiers == 2) names = {"high", "low"};
    else if (tiers == 3) names = {"high", "middle", "low"};
    else
        for (std::size_t k = 0; k < tiers; ++k) names.push_back("tier-" + std::to_string(k + 1));

    std::vector<std::string> out;
    std::size_t next = 0;
    for (std::size_t k = 0; k < grouping.group_count(); ++k)
        out.push_back(grouping.isolate_group[k] ? "isolates" : names[next++]);
    return out;
}

// 1 for the top group; all isolates share the ordinal after the last tier.
inline std::vector<double> tier_ordinals(const grouping& grouping) {
    std::vector<double> by_group;
    std::size_t next = 0;
    for (std::size_t k = 0; k < grouping.group_count(); ++k)
        by_group.push_back(grouping.isolate_group[k] ? static_cast<double>(grouping.tier_count() + 1)
                                                     : static_cast<double>(++next));
    std::vector<double> out;
    for (auto gid : grouping.assignment) out.push_back(by_group[gid]);
    return out;
}

} // namespace ranksig
