// ranksig: significance testing and tier grouping for institution rankings.
//
// Exit codes: 0 success, 1 internal error, 2 bad user input.

#include "ranksig/ranksig.hpp"

#include "CLI11.hpp"

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace ranksig;

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct run_config {
    std::string input;
    std::string period;
    std::string field = "All sciences";
    std::string counting = "frac";
    std::vector<std::string> countries;
    std::string criterion = "ztest";
    double alpha = 0.01;
    double resolution = 1.0;
    std::uint64_t seed = 0;
    std::string format = "csv";
    std::string proportions = "stored";
    std::string method = "modularity";
    std::string out;
    unsigned threads = 1;
};

bool use_color() {
    return std::getenv("RANKSIG_NO_COLOR") == nullptr && ::isatty(STDERR_FILENO);
}

void report_error(const std::string& what) {
    if (use_color()) std::cerr << "\033[1;31merror:\033[0m " << what << '\n';
    else std::cerr << "error: " << what << '\n';
}

double threshold_for_alpha(double alpha) {
    if (alpha == 0.05) return z_p05;
    if (alpha == 0.01) return z_p01;
    if (alpha == 0.001) return z_p001;
    throw usage_error("--alpha must be one of 0.05, 0.01, 0.001");
}

proportion_source proportions_of(const run_config& c) {
    if (c.proportions == "stored") return proportion_source::stored;
    if (c.proportions == "exact") return proportion_source::exact;
    throw usage_error("--proportions must be stored or exact");
}

graph_options graph_options_of(const run_config& c) {
    graph_options opt;
    if (c.criterion == "ztest") opt.rule = criterion::ztest;
    else if (c.criterion == "ci") opt.rule = criterion::ci_overlap;
    else throw usage_error("--criterion must be ztest or ci");
    opt.threshold = threshold_for_alpha(c.alpha);
    opt.proportions = proportions_of(c);
    opt.threads = c.threads;
    return opt;
}

std::ifstream open_input(const std::string& path) {
    if (path.empty()) throw usage_error("--input is required");
    std::ifstream in(path);
    if (!in) throw usage_error("cannot open '" + path + "'");
    return in;
}

// Applies the selector; without --period the latest period present is used.
std::vector<institution_record> load_records(const run_config& c) {
    auto in = open_input(c.input);
    auto all = parse_all_records(in);
    dataset_selector sel;
    sel.field = c.field;
    const auto counting = parse_counting(c.counting);
    if (!counting) throw usage_error("--counting must be frac or full");
    sel.counting = *counting;
    sel.countries.insert(c.countries.begin(), c.countries.end());
    if (!c.period.empty()) {
        sel.period = c.period;
    } else {
        std::optional<std::pair<int, std::string>> latest;
        for (const auto& r : all) {
            if (!sel.matches(r)) continue;
            std::pair<int, std::string> key{period_start_year(r.period), r.period};
            if (!latest || key > *latest) latest = key;
        }
        if (latest) sel.period = latest->second;
    }
    return select_records(std::move(all), sel);
}

// Writes to --out when given, else stdout.
class output {
public:
    explicit output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw usage_error("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

grouping group_graph(const significance_graph& g, const run_config& c) {
    if (c.method == "modularity") return cluster(g, c.resolution, c.seed);
    if (c.method == "components") return weak_components(g);
    throw usage_error("--method must be modularity or components");
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

void print_matrix(std::ostream& os, const std::string& title, const contingency_table& labels,
                  const std::vector<std::vector<double>>& m, bool with_totals) {
    std::size_t width = title.size();
    for (const auto& r : labels.row_labels()) width = std::max(width, r.size());
    os << std::left << std::setw(static_cast<int>(width + 2)) << title << std::right;
    for (const auto& c : labels.col_labels()) os << std::setw(12) << c;
    if (with_totals) os << std::setw(12) << "total";
    os << '\n';
    std::vector<double> col_sum(labels.col_count(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        os << std::left << std::setw(static_cast<int>(width + 2)) << labels.row_labels()[i] << std::right;
        double row_sum = 0.0;
        for (std::size_t j = 0; j < m[i].size(); ++j) {
            os << std::setw(12) << fixed(m[i][j], 2);
            row_sum += m[i][j];
            col_sum[j] += m[i][j];
        }
        if (with_totals) os << std::setw(12) << fixed(row_sum, 2);
        os << '\n';
    }
    if (with_totals) {
        os << std::setw(static_cast<int>(width + 2)) << "";
        double all = 0.0;
        for (double v : col_sum) {
            os << std::setw(12) << fixed(v, 2);
            all += v;
        }
        os << std::setw(12) << fixed(all, 2) << '\n';
    }
    os << '\n';
}

int cmd_pairwise(const run_config& c, const std::string& a_name, const std::string& b_name) {
    const auto records = load_records(c);
    auto find = [&](const std::string& name) -> const institution_record& {
        for (const auto& r : records)
            if (r.name == name) return r;
        throw error(errc::unknown_institution, "'" + name + "' is not in the selected records");
    };
    const auto& a = find(a_name);
    const auto& b = find(b_name);

    output out(c.out);
    auto& os = out.stream();
    const auto observed = pair_table(a, b);
    const auto expected = expected_table(observed);
    print_matrix(os, "Observed values", observed, observed.cells(), true);
    print_matrix(os, "Expected values", expected, expected.cells(), true);

    if (zero_expected_cells(expected).empty()) {
        const auto terms = chi_square_terms(observed);
        print_matrix(os, "Chi-square", observed, terms, true);
        const double chi2 = chi_square(observed);
        const double p = chi_square_p_value(chi2, degrees_of_freedom(observed));
        os << "chi2 = " << fixed(chi2, 2) << " (df " << degrees_of_freedom(observed) << ", p = "
           << std::setprecision(3) << p << ") " << stars(significance_from_p(p)) << "\n\n";
        print_matrix(os, "Standardized residuals", observed, standardized_residuals(observed), false);
    } else {
        os << "chi2 undefined: an expected cell is zero\n\n";
    }

    const double pooled = pooled_proportion(a.t_top10, a.p, b.t_top10, b.p);
    os << "pooled proportion = " << fixed(pooled, 6) << '\n';
    for (auto src : {proportion_source::stored, proportion_source::exact}) {
        const auto z = z_between(a, b, src);
        os << "z (" << (src == proportion_source::stored ? "stored" : "exact") << " proportions) = "
           << fixed(z.z, 3) << ' ' << stars(significance_level(z.z)) << '\n';
    }
    const auto src = proportions_of(c);
    os << "z vs 10% expectation: " << a.name << " = " << fixed(z_vs_expectation(a, 0.1, src), 3) << ", " << b.name
       << " = " << fixed(z_vs_expectation(b, 0.1, src), 3) << '\n';
    if (a.stability_interval() && b.stability_interval()) {
        const auto rel = ci_relation(a, b);
        os << "stability intervals: " << to_string(rel.kind);
        if (rel.direction) {
            switch (*rel.direction) {
            case containment_direction::a_in_b: os << " (" << a.name << " inside " << b.name << ")"; break;
            case containment_direction::b_in_a: os << " (" << b.name << " inside " << a.name << ")"; break;
            case containment_direction::mutual: os << " (identical)"; break;
            }
        }
        os << '\n';
    }
    return 0;
}

int cmd_group(const run_config& c, const std::string& graph_path) {
    const auto records = load_records(c);
    if (records.size() < 2) throw error(errc::no_match, "grouping needs at least two institutions");
    const auto g = build_graph(records, graph_options_of(c));
    const auto groups = group_graph(g, c);
    const auto fmt = parse_graph_format(c.format);
    if (!fmt) throw usage_error("--format must be csv, dot, pajek or vjson");

    output out(c.out);
    write_group_table(out.stream(), rank_groups(g, groups), groups);
    if (!graph_path.empty()) {
        output graph_out(graph_path);
        write_graph(graph_out.stream(), g, *fmt, &groups);
    }
    std::cerr << g.node_count() << " institutions, " << g.edge_count() << " links, " << groups.tier_count()
              << " groups, " << (groups.group_count() - groups.tier_count())
              << " isolates, modularity " << fixed(modularity(g, groups, c.resolution), 3) << '\n';
    return 0;
}

int cmd_export(const run_config& c) {
    const auto records = load_records(c);
    const auto g = build_graph(records, graph_options_of(c));
    const auto groups = group_graph(g, c);
    const auto fmt = parse_graph_format(c.format);
    if (!fmt) throw usage_error("--format must be csv, dot, pajek or vjson");
    output out(c.out);
    write_graph(out.stream(), g, *fmt, &groups);
    return 0;
}

labeling load_labels(const std::string& path) {
    auto in = open_input(path);
    return parse_labels(in);
}

void print_association(std::ostream& os, const association_report& r, std::optional<double> rho) {
    const auto& t = r.table;
    os << "crosstab";
    for (const auto& col : t.col_labels()) os << ',' << detail::csv_escape(col);
    os << ",total\n";
    for (std::size_t i = 0; i < t.row_count(); ++i) {
        os << detail::csv_escape(t.row_labels()[i]);
        for (std::size_t j = 0; j < t.col_count(); ++j) os << ',' << t(i, j);
        os << ',' << t.row_total(i) << '\n';
    }
    os << "total";
    for (std::size_t j = 0; j < t.col_count(); ++j) os << ',' << t.col_total(j);
    os << ',' << t.grand_total() << "\n\n";
    os << "chi2 = " << fixed(r.chi2, 2) << " (df " << r.df << ")\n";
    os << "p = " << std::setprecision(4) << r.p_value << ' ' << stars(r.level) << '\n';
    os << "cramers_v = " << fixed(r.cramers_v, 3) << '\n';
    os << "phi = " << fixed(r.phi, 3) << '\n';
    if (rho) os << "spearman = " << fixed(*rho, 3) << '\n';
    else os << "spearman = n/a\n";
}

std::optional<double> tier_ordinal(const std::string& label) {
    if (label == "high" || label == "High" || label == "top") return 1.0;
    if (label == "middle") return 2.0;
    if (label == "low" || label == "bottom") return 3.0;
    if (label == "isolates" || label == "Isolates") return 4.0;
    if (label.starts_with("tier-")) return std::stod(label.substr(5));
    return std::nullopt;
}

int cmd_compare(const run_config& c, const std::string& labels_a, const std::string& labels_b,
                const std::string& split, bool methods) {
    output out(c.out);
    if (!labels_a.empty() || !labels_b.empty()) {
        if (labels_a.empty() || labels_b.empty()) throw usage_error("--labels-a and --labels-b go together");
        const auto a = load_labels(labels_a);
        const auto b = load_labels(labels_b);
        auto report = associate(crosstab(a, b));
        // Spearman only when both labelings are ordered tiers.
        std::map<std::string, std::string> lb(b.begin(), b.end());
        std::vector<double> xs, ys;
        bool ordinal = true;
        for (const auto& [name, label] : a) {
            auto it = lb.find(name);
            if (it == lb.end()) continue;
            const auto x = tier_ordinal(label);
            const auto y = tier_ordinal(it->second);
            if (!x || !y) {
                ordinal = false;
                break;
            }
            xs.push_back(*x);
            ys.push_back(*y);
        }
        std::optional<double> rho;
        if (ordinal) {
            try {
                rho = spearman(xs, ys);
            } catch (const error&) {
            }
        }
        print_association(out.stream(), report, rho);
        return 0;
    }

    const auto records = load_records(c);
    if (methods) {
        auto opt = graph_options_of(c);
        opt.rule = criterion::ztest;
        const auto gz = build_graph(records, opt);
        opt.rule = criterion::ci_overlap;
        const auto gc = build_graph(records, opt);
        const auto groups_z = group_graph(gz, c);
        const auto groups_c = group_graph(gc, c);
        const auto tz = tier_labels(groups_z);
        const auto tc = tier_labels(groups_c);
        labeling a, b;
        for (std::size_t i = 0; i < gz.node_count(); ++i) {
            a.emplace_back(gz.nodes()[i].name, tz[groups_z.assignment[i]]);
            b.emplace_back(gc.nodes()[i].name, tc[groups_c.assignment[i]]);
        }
        std::optional<double> rho;
        try {
            rho = spearman(tier_ordinals(groups_z), tier_ordinals(groups_c));
        } catch (const error&) {
        }
        print_association(out.stream(), associate(crosstab(a, b)), rho);
        return 0;
    }
    if (split != "country") throw usage_error("compare needs --labels-a/--labels-b, --split country, or --methods");

    const auto g = build_graph(records, graph_options_of(c));
    const auto groups = group_graph(g, c);
    const auto tiers = tier_labels(groups);
    std::map<std::string, std::string> country;
    for (const auto& r : records) country[r.name] = r.country;
    labeling by_country, by_tier;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        by_country.emplace_back(g.nodes()[i].name, country[g.nodes()[i].name]);
        by_tier.emplace_back(g.nodes()[i].name, tiers[groups.assignment[i]]);
    }
    // Overall z-rank against tier ordinal.
    std::vector<double> zrank(g.node_count());
    for (const auto& row : rank_groups(g, groups)) zrank[*g.index_of(row.name)] = static_cast<double>(row.overall_rank);
    std::optional<double> rho;
    try {
        rho = spearman(zrank, tier_ordinals(groups));
    } catch (const error&) {
    }
    print_association(out.stream(), associate(crosstab(by_country, by_tier)), rho);
    return 0;
}

int cmd_decompose(const run_config& c, double reported_old, double reconstructed_old, double current) {
    const auto d = decompose_change(reported_old, reconstructed_old, current);
    output out(c.out);
    auto& os = out.stream();
    os << "reported_old = " << fixed(d.reported_old, 2) << '\n'
       << "reconstructed_old = " << fixed(d.reconstructed_old, 2) << '\n'
       << "current = " << fixed(d.current, 2) << '\n'
       << "total = " << fixed(d.total, 2) << '\n'
       << "data_effect = " << fixed(d.data_effect, 2) << '\n'
       << "model_effect = " << fixed(d.model_effect, 2) << '\n';
    if (d.data_share) {
        os << "data_share = " << fixed(*d.data_share * 100.0, 1) << "%\n"
           << "model_share = " << fixed(*d.model_share * 100.0, 1) << "%\n";
    } else {
        os << "data_share = undefined\nmodel_share = undefined\n";
    }
    return 0;
}

int cmd_bootstrap(const run_config& c, std::size_t draws, double coverage) {
    const auto records = load_records(c);
    bootstrap_options opt;
    opt.draws = draws;
    opt.coverage = coverage;
    opt.seed = c.seed;
    const auto intervals = bootstrap_intervals(records, opt, c.threads);
    output out(c.out);
    auto& os = out.stream();
    os << "name,point,lower,upper,draws,coverage,seed\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& s = intervals[i];
        os << detail::csv_escape(records[i].name) << ',' << detail::format_real(s.point) << ','
           << detail::format_real(s.lower) << ',' << detail::format_real(s.upper) << ',' << s.draws << ','
           << detail::format_real(s.coverage) << ',' << s.seed << '\n';
    }
    return 0;
}

int cmd_zcurve(const run_config& c, const std::string& scores_path) {
    std::vector<scored_institution> scored;
    if (!scores_path.empty()) {
        auto in = open_input(scores_path);
        scored = parse_scores(in);
    } else {
        const auto src = proportions_of(c);
        for (const auto& r : load_records(c)) scored.push_back({r.name, z_vs_expectation(r, 0.1, src), r.country, {}});
    }
    output out(c.out);
    write_z_series(out.stream(), z_distribution_series(scored));
    return 0;
}

void add_selection(CLI::App* cmd, run_config& c) {
    cmd->add_option("--input", c.input, "Records file (name,country,period,field,counting,p,t_top10,pp_top10,ci_lower,ci_upper)");
    cmd->add_option("--period", c.period, "Period label; defaults to the latest period in the file");
    cmd->add_option("--field", c.field, "Field label")->capture_default_str();
    cmd->add_option("--counting", c.counting, "frac or full")->capture_default_str();
    cmd->add_option("--country", c.countries, "Keep only these country codes (repeatable)");
    cmd->add_option("--proportions", c.proportions, "stored or exact")->capture_default_str();
    cmd->add_option("--out", c.out, "Output path (default stdout)");
}

void add_grouping(CLI::App* cmd, run_config& c) {
    cmd->add_option("--criterion", c.criterion, "ztest or ci")->capture_default_str();
    cmd->add_option("--alpha", c.alpha, "0.05, 0.01 or 0.001")->capture_default_str();
    cmd->add_option("--method", c.method, "modularity or components")->capture_default_str();
    cmd->add_option("--resolution", c.resolution, "Modularity resolution")->capture_default_str();
    cmd->add_option("--seed", c.seed, "Clustering seed")->capture_default_str();
    cmd->add_option("--threads", c.threads, "Worker threads for pairwise tests")->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ranksig: statistical significance of institution rankings"};
    app.require_subcommand(1);
    run_config c;

    auto* pairwise = app.add_subcommand("pairwise", "Chi-square and z-test report for two institutions");
    std::string inst_a, inst_b;
    add_selection(pairwise, c);
    pairwise->add_option("a", inst_a, "First institution")->required();
    pairwise->add_option("b", inst_b, "Second institution")->required();

    auto* group = app.add_subcommand("group", "Group institutions into significance tiers");
    std::string graph_path;
    add_selection(group, c);
    add_grouping(group, c);
    group->add_option("--format", c.format, "Graph format: csv, dot, pajek or vjson")->capture_default_str();
    group->add_option("--graph", graph_path, "Also write the significance graph here");

    auto* exporter = app.add_subcommand("export", "Write the significance graph");
    add_selection(exporter, c);
    add_grouping(exporter, c);
    exporter->add_option("--format", c.format, "csv, dot, pajek or vjson")->capture_default_str();

    auto* compare = app.add_subcommand("compare", "Association between two groupings or labelings");
    std::string labels_a, labels_b, split;
    bool methods = false;
    add_selection(compare, c);
    add_grouping(compare, c);
    compare->add_option("--labels-a", labels_a, "Labels file (name,label)");
    compare->add_option("--labels-b", labels_b, "Labels file (name,label)");
    compare->add_option("--split", split, "Cross-tabulate tiers against 'country'");
    compare->add_flag("--methods", methods, "Compare z-test grouping with CI-overlap grouping");

    auto* decompose = app.add_subcommand("decompose", "Split an indicator change into data and model effects");
    double reported_old = 0.0, reconstructed_old = 0.0, current = 0.0;
    decompose->add_option("reported_old", reported_old, "Old value as published")->required();
    decompose->add_option("reconstructed_old", reconstructed_old, "Old value recomputed with the current model")->required();
    decompose->add_option("current", current, "Current value")->required();
    decompose->add_option("--out", c.out, "Output path (default stdout)");

    auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap stability intervals");
    std::size_t draws = 1000;
    double coverage = 0.95;
    add_selection(bootstrap, c);
    bootstrap->add_option("--draws", draws, "Replicates per institution")->capture_default_str();
    bootstrap->add_option("--coverage", coverage, "Interval coverage")->capture_default_str();
    bootstrap->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    bootstrap->add_option("--threads", c.threads, "Worker threads")->capture_default_str();

    auto* zcurve = app.add_subcommand("zcurve", "Per-country z-values in decreasing order");
    std::string scores_path;
    add_selection(zcurve, c);
    zcurve->add_option("--scores", scores_path, "Precomputed scores file (name,z[,category])");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*pairwise) return cmd_pairwise(c, inst_a, inst_b);
        if (*group) return cmd_group(c, graph_path);
        if (*exporter) return cmd_export(c);
        if (*compare) return cmd_compare(c, labels_a, labels_b, split, methods);
        if (*decompose) return cmd_decompose(c, reported_old, reconstructed_old, current);
        if (*bootstrap) return cmd_bootstrap(c, draws, coverage);
        if (*zcurve) return cmd_zcurve(c, scores_path);
    } catch (const ranksig::error& e) {
        report_error(e.what());
        return 2;
    } catch (const usage_error& e) {
        report_error(e.what());
        return 2;
    } catch (const std::exception& e) {
        report_error(std::string("internal: ") + e.what());
        return 1;
    }
    return 1;
}
