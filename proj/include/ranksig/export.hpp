#pragma once

// Writers for graphs, group tables and plot series. Output is a pure function
// of the input so repeated runs produce byte-identical files.

#include "ranksig/compare.hpp"
#include "ranksig/ingest.hpp"
#include "ranksig/siggraph.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ranksig {

enum class graph_format { csv, dot, pajek, vjson };

inline std::optional<graph_format> parse_graph_format(std::string_view s) {
    if (s == "csv") return graph_format::csv;
    if (s == "dot") return graph_format::dot;
    if (s == "pajek") return graph_format::pajek;
    if (s == "vjson") return graph_format::vjson;
    return std::nullopt;
}

namespace detail {

inline std::string dot_quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string relation_name(const graph_edge& e) {
    if (!e.relation) return "";
    return to_string(e.relation->kind);
}

} // namespace detail

// Edge list: source,target,link_z,relation,strong
inline void write_edges_csv(std::ostream& out, const significance_graph& g) {
    out << "source,target,link_z,relation,strong\n";
    for (const auto& e : g.edges())
        out << detail::csv_escape(g.nodes()[e.a].name) << ',' << detail::csv_escape(g.nodes()[e.b].name) << ','
            << detail::format_real(e.link_z) << ',' << detail::relation_name(e) << ','
            << (e.strong ? "true" : "false") << '\n';
}

inline void write_dot(std::ostream& out, const significance_graph& g, const grouping* groups = nullptr) {
    out << "graph significance {\n";
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        out << "  n" << i << " [label=" << detail::dot_quote(g.nodes()[i].name)
            << ", z=" << detail::format_real(g.nodes()[i].z);
        if (groups) out << ", group=" << groups->assignment[i];
        out << "];\n";
    }
    for (const auto& e : g.edges()) {
        out << "  n" << e.a << " -- n" << e.b << " [z=" << detail::format_real(e.link_z);
        if (e.relation) out << ", relation=" << detail::relation_name(e);
        if (e.strong) out << ", strong=true";
        out << "];\n";
    }
    out << "}\n";
}

// Pajek .net with 1-based vertex ids; edge weight is |link_z|.
inline void write_pajek(std::ostream& out, const significance_graph& g) {
    out << "*Vertices " << g.node_count() << '\n';
    for (std::size_t i = 0; i < g.node_count(); ++i) out << (i + 1) << ' ' << detail::dot_quote(g.nodes()[i].name) << '\n';
    out << "*Edges\n";
    for (const auto& e : g.edges()) out << (e.a + 1) << ' ' << (e.b + 1) << ' ' << detail::format_real(std::abs(e.link_z)) << '\n';
}

// VOSviewer network document: network.items (id, label, weight = node z) and
// network.links (source_id, target_id, strength = |link z|). Ids are 1-based.
inline nlohmann::ordered_json vosviewer_json(const significance_graph& g, const grouping* groups = nullptr) {
    nlohmann::ordered_json items = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        nlohmann::ordered_json item;
        item["id"] = i + 1;
        item["label"] = g.nodes()[i].name;
        item["weight"] = g.nodes()[i].z;
        if (groups) item["cluster"] = groups->assignment[i] + 1;
        items.push_back(std::move(item));
    }
    nlohmann::ordered_json links = nlohmann::ordered_json::array();
    for (const auto& e : g.edges()) {
        nlohmann::ordered_json link;
        link["source_id"] = e.a + 1;
        link["target_id"] = e.b + 1;
        link["strength"] = std::abs(e.link_z);
        links.push_back(std::move(link));
    }
    nlohmann::ordered_json doc;
    doc["network"]["items"] = std::move(items);
    doc["network"]["links"] = std::move(links);
    return doc;
}

inline void write_graph(std::ostream& out, const significance_graph& g, graph_format fmt,
                        const grouping* groups = nullptr) {
    switch (fmt) {
    case graph_format::csv: write_edges_csv(out, g); break;
    case graph_format::dot: write_dot(out, g, groups); break;
    case graph_format::pajek: write_pajek(out, g); break;
    case graph_format::vjson: out << vosviewer_json(g, groups).dump(2) << '\n'; break;
    }
}

// Group table: group,tier,name,z,overall_rank,within_group_rank
inline void write_group_table(std::ostream& out, const std::vector<ranked_row>& rows, const grouping& grouping) {
    const auto tiers = tier_labels(grouping);
    out << "group,tier,name,z,overall_rank,within_group_rank\n";
    for (const auto& r : rows)
        out << (r.group + 1) << ',' << tiers[r.group] << ',' << detail::csv_escape(r.name) << ','
            << detail::format_real(r.z) << ',' << r.overall_rank << ',' << r.within_rank << '\n';
}

// category,rank,institution,z
inline void write_z_series(std::ostream& out, const std::vector<z_series>& series) {
    out << "category,rank,institution,z\n";
    for (const auto& s : series)
        for (const auto& p : s.points)
            out << detail::csv_escape(s.category) << ',' << p.rank << ',' << detail::csv_escape(p.name) << ','
                << detail::format_real(p.z) << '\n';
}

} // namespace ranksig
