#pragma once

// Reading and writing the delimited-text interchange formats:
//
//   records:  name,country,period,field,counting,p,t_top10,pp_top10,ci_lower,ci_upper
//             optional first line "#pp_unit=percent" (default fraction)
//   scores:   name,z[,category][,group]      (precomputed node z-values)
//   labels:   name,label                      (categorical labelings)
//
// Comma separated, UTF-8, LF or CRLF, fields may be double-quoted with "" as
// an escaped quote. Empty cells are absent optionals.

#include "ranksig/error.hpp"
#include "ranksig/record.hpp"

#include <charconv>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace ranksig {

enum class pp_unit { fraction, percent };

// Precomputed z-value for a node, e.g. from a published table.
struct scored_institution {
    std::string name;
    double z = 0.0;
    std::string category;
    std::string group;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    bool cell_was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            if (!cell.empty() || cell_was_quoted)
                throw error(errc::malformed_row,
                            "line " + std::to_string(line_no) + ": stray quote inside field");
            quoted = true;
            cell_was_quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cell));
            cell.clear();
            cell_was_quoted = false;
        } else {
            if (cell_was_quoted)
                throw error(errc::malformed_row,
                            "line " + std::to_string(line_no) + ": text after closing quote");
            cell.push_back(c);
        }
    }
    if (quoted)
        throw error(errc::malformed_row, "line " + std::to_string(line_no) + ": unterminated quote");
    out.push_back(std::move(cell));
    return out;
}

inline std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_real(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

// Reads lines, strips a trailing CR, and skips blank lines. Returns false at EOF.
inline bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) return true;
    }
    return false;
}

inline std::string format_real(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace detail

inline const std::vector<std::string>& record_columns() {
    static const std::vector<std::string> cols = {"name",    "country",  "period",  "field",
                                                  "counting", "p",       "t_top10", "pp_top10",
                                                  "ci_lower", "ci_upper"};
    return cols;
}

// Parses every row of a records file without selection. Throws malformed_row
// (with line number) and invariant_violation (with the record's name).
inline std::vector<institution_record> parse_all_records(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    pp_unit unit = pp_unit::fraction;

    if (!detail::next_line(in, line, line_no))
        throw error(errc::malformed_row, "line 1: missing header row");
    if (line.starts_with("#")) {
        const std::string_view directive = detail::trim(std::string_view(line).substr(1));
        if (directive == "pp_unit=percent") unit = pp_unit::percent;
        else if (directive == "pp_unit=fraction") unit = pp_unit::fraction;
        else
            throw error(errc::malformed_row,
                        "line " + std::to_string(line_no) + ": unknown directive '" + line + "'");
        if (!detail::next_line(in, line, line_no))
            throw error(errc::malformed_row, "line " + std::to_string(line_no) + ": missing header row");
    }
    auto header = detail::split_csv_line(line, line_no);
    for (auto& h : header) h = std::string(detail::trim(h));
    if (header != record_columns())
        throw error(errc::malformed_row, "line " + std::to_string(line_no) +
                                             ": header must be name,country,period,field,counting,"
                                             "p,t_top10,pp_top10,ci_lower,ci_upper");

    const double scale = unit == pp_unit::percent ? 0.01 : 1.0;
    std::vector<institution_record> out;
    while (detail::next_line(in, line, line_no)) {
        auto cells = detail::split_csv_line(line, line_no);
        auto bad = [&](const std::string& why) {
            return error(errc::malformed_row, "line " + std::to_string(line_no) + ": " + why);
        };
        if (cells.size() != record_columns().size())
            throw bad("expected 10 fields, got " + std::to_string(cells.size()));

        institution_record r;
        r.name = std::string(detail::trim(cells[0]));
        r.country = std::string(detail::trim(cells[1]));
        r.period = std::string(detail::trim(cells[2]));
        r.field = std::string(detail::trim(cells[3]));
        if (r.name.empty()) throw bad("empty name");
        const auto counting = parse_counting(detail::trim(cells[4]));
        if (!counting) throw bad("counting must be frac or full, got '" + cells[4] + "'");
        r.counting = *counting;

        auto required = [&](std::size_t col) {
            const auto v = detail::parse_real(cells[col]);
            if (!v) throw bad("column " + record_columns()[col] + " is not a number: '" + cells[col] + "'");
            return *v;
        };
        auto optional_real = [&](std::size_t col) -> std::optional<double> {
            if (detail::trim(cells[col]).empty()) return std::nullopt;
            return required(col);
        };

        r.p = required(5);
        r.pp_top10 = required(7) * scale;
        if (auto t = optional_real(6)) {
            r.t_top10 = *t;
            r.t_supplied = true;
        } else {
            r.t_top10 = r.pp_top10 * r.p;
            r.t_supplied = false;
        }
        if (auto lo = optional_real(8)) r.ci_lower = *lo * scale;
        if (auto hi = optional_real(9)) r.ci_upper = *hi * scale;

        validate(r);
        if (!r.counts_consistent())
            throw error(errc::invariant_violation,
                        "record '" + r.name + "': t_top10 inconsistent with pp_top10 * p");
        out.push_back(std::move(r));
    }
    return out;
}

// Keeps rows matching the selector. Exact repeats of a
// (name, period, field, counting) key are dropped keeping the first; a repeat
// with different values is a duplicate_record error.
inline std::vector<institution_record> select_records(std::vector<institution_record> all,
                                                      const dataset_selector& selector) {
    using key_t = std::tuple<std::string, std::string, std::string, counting_method>;
    std::map<key_t, std::size_t> seen;
    std::vector<institution_record> out;
    for (auto& r : all) {
        if (!selector.matches(r)) continue;
        key_t key{r.name, r.period, r.field, r.counting};
        if (auto it = seen.find(key); it != seen.end()) {
            const auto& first = out[it->second];
            const bool same = first.country == r.country && first.p == r.p &&
                              first.t_top10 == r.t_top10 && first.pp_top10 == r.pp_top10 &&
                              first.ci_lower == r.ci_lower && first.ci_upper == r.ci_upper;
            if (!same)
                throw error(errc::duplicate_record, "conflicting rows for '" + r.name + "' (" +
                                                        r.period + ", " + r.field + ", " +
                                                        std::string(to_string(r.counting)) + ")");
            continue;
        }
        seen.emplace(std::move(key), out.size());
        out.push_back(std::move(r));
    }
    if (out.empty()) throw error(errc::no_match, "selector matched no records");
    return out;
}

inline std::vector<institution_record> parse_records(std::istream& in, const dataset_selector& selector) {
    return select_records(parse_all_records(in), selector);
}

inline void write_records(std::ostream& out, const std::vector<institution_record>& records) {
    for (std::size_t i = 0; i < record_columns().size(); ++i)
        out << (i ? "," : "") << record_columns()[i];
    out << '\n';
    for (const auto& r : records) {
        out << detail::csv_escape(r.name) << ',' << detail::csv_escape(r.country) << ','
            << detail::csv_escape(r.period) << ',' << detail::csv_escape(r.field) << ','
            << to_string(r.counting) << ',' << detail::format_real(r.p) << ','
            << (r.t_supplied ? detail::format_real(r.t_top10) : std::string()) << ','
            << detail::format_real(r.pp_top10) << ','
            << (r.ci_lower ? detail::format_real(*r.ci_lower) : std::string()) << ','
            << (r.ci_upper ? detail::format_real(*r.ci_upper) : std::string()) << '\n';
    }
}

namespace detail {

// Header-driven table: returns column index by name for the requested columns.
struct header_map {
    std::map<std::string, std::size_t> index;
    std::size_t width = 0;

    std::optional<std::size_t> find(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
};

inline header_map read_header(std::istream& in, std::string& line, std::size_t& line_no,
                              const std::vector<std::string>& required) {
    if (!next_line(in, line, line_no)) throw error(errc::malformed_row, "line 1: missing header row");
    header_map h;
    auto cols = split_csv_line(line, line_no);
    h.width = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i) h.index[std::string(trim(cols[i]))] = i;
    for (const auto& name : required)
        if (!h.find(name))
            throw error(errc::malformed_row,
                        "line " + std::to_string(line_no) + ": header lacks column '" + name + "'");
    return h;
}

} // namespace detail

inline std::vector<scored_institution> parse_scores(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    const auto h = detail::read_header(in, line, line_no, {"name", "z"});
    const auto name_col = *h.find("name");
    const auto z_col = *h.find("z");
    const auto category_col = h.find("category");
    const auto group_col = h.find("group");

    std::vector<scored_institution> out;
    std::map<std::string, std::size_t> seen;
    while (detail::next_line(in, line, line_no)) {
        auto cells = detail::split_csv_line(line, line_no);
        if (cells.size() != h.width)
            throw error(errc::malformed_row, "line " + std::to_string(line_no) + ": expected " +
                                                 std::to_string(h.width) + " fields");
        scored_institution s;
        s.name = std::string(detail::trim(cells[name_col]));
        if (s.name.empty()) throw error(errc::malformed_row, "line " + std::to_string(line_no) + ": empty name");
        const auto z = detail::parse_real(cells[z_col]);
        if (!z || !std::isfinite(*z))
            throw error(errc::malformed_row, "line " + std::to_string(line_no) + ": z is not a number");
        s.z = *z;
        if (category_col) s.category = std::string(detail::trim(cells[*category_col]));
        if (group_col) s.group = std::string(detail::trim(cells[*group_col]));
        if (!seen.emplace(s.category + '\n' + s.name, out.size()).second)
            throw error(errc::duplicate_record, "'" + s.name + "' listed twice");
        out.push_back(std::move(s));
    }
    if (out.empty()) throw error(errc::no_match, "scores file has no rows");
    return out;
}

// name -> label, in file order.
inline std::vector<std::pair<std::string, std::string>> parse_labels(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    const auto h = detail::read_header(in, line, line_no, {"name", "label"});
    const auto name_col = *h.find("name");
    const auto label_col = *h.find("label");
    std::vector<std::pair<std::string, std::string>> out;
    std::map<std::string, bool> seen;
    while (detail::next_line(in, line, line_no)) {
        auto cells = detail::split_csv_line(line, line_no);
        if (cells.size() != h.width)
            throw error(errc::malformed_row, "line " + std::to_string(line_no) + ": expected " +
                                                 std::to_string(h.width) + " fields");
        std::string name(detail::trim(cells[name_col]));
        std::string label(detail::trim(cells[label_col]));
        if (name.empty()) throw error(errc::malformed_row, "line " + std::to_string(line_no) + ": empty name");
        if (!seen.emplace(name, true).second)
            throw error(errc::duplicate_record, "'" + name + "' labeled twice");
        out.emplace_back(std::move(name), std::move(label));
    }
    return out;
}

} // namespace ranksig
