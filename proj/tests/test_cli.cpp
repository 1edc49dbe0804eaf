#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

using namespace ranksig;
using namespace ranksig::testing;

namespace {

struct run_result {
    int status = -1;
    std::string out;
};

// Runs the CLI with stderr folded into stdout unless `merge` is false.
run_result run(const std::string& args, bool merge = true) {
    const std::string cmd = std::string("RANKSIG_NO_COLOR=1 \"") + RANKSIG_CLI + "\" " + args + (merge ? " 2>&1" : " 2>/dev/null");
    run_result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int st = pclose(pipe);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string q(const std::string& s) { return "\"" + s + "\""; }

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("ranksig_cli_" + std::to_string(::getpid()) + "_" + name)).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

} // namespace

TEST(cli, help_and_usage) {
    EXPECT_EQ(run("--help").status, 0);
    EXPECT_EQ(run("").status, 2);
    EXPECT_EQ(run("frobnicate").status, 2);
}

TEST(cli, pairwise_report) {
    const auto r = run("pairwise --input " + q(data_path("trio.csv")) + " \"Tsinghua University\" \"Zhejiang University\"");
    ASSERT_EQ(r.status, 0) << r.out;
    for (const char* s : {"2449.01", "71.80", "34.10", "4.79", "28.87", "4.05", "5.84", "-2.19", "-5.37", "2.01",
                          "stability intervals: disjoint"})
        EXPECT_TRUE(contains(r.out, s)) << s << "\n" << r.out;
}

TEST(cli, pairwise_self_and_unknown) {
    const auto self = run("pairwise --input " + q(data_path("trio.csv")) + " \"Peking University\" \"Peking University\"");
    ASSERT_EQ(self.status, 0) << self.out;
    EXPECT_TRUE(contains(self.out, "z (stored proportions) = 0.000")) << self.out;

    const auto missing = run("pairwise --input " + q(data_path("trio.csv")) + " \"Tsinghua University\" Nowhere");
    EXPECT_EQ(missing.status, 2);
    EXPECT_TRUE(contains(missing.out, "UnknownInstitution")) << missing.out;
}

TEST(cli, group_trio) {
    const auto graph = temp_file("trio.dot");
    const auto r = run("group --input " + q(data_path("trio.csv")) + " --alpha 0.01 --graph " + q(graph) + " --format dot", false);
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_TRUE(contains(r.out, "1,high,Zhejiang University,")) << r.out;
    EXPECT_TRUE(contains(r.out, "1,high,Peking University,")) << r.out;
    EXPECT_TRUE(contains(r.out, "2,isolates,Tsinghua University,")) << r.out;
    const auto dot = slurp(graph);
    std::filesystem::remove(graph);
    std::size_t edges = 0;
    for (auto pos = dot.find(" -- "); pos != std::string::npos; pos = dot.find(" -- ", pos + 1)) ++edges;
    EXPECT_EQ(edges, 1u) << dot;
    EXPECT_TRUE(contains(dot, "n0 -- n2")) << dot;
}

TEST(cli, group_ci_requires_intervals) {
    const auto r = run("group --input " + q(data_path("trio_no_ci.csv")) + " --criterion ci");
    EXPECT_EQ(r.status, 2);
    EXPECT_TRUE(contains(r.out, "MissingInterval")) << r.out;
    EXPECT_EQ(run("group --input " + q(data_path("trio.csv")) + " --alpha 0.02").status, 2);
    EXPECT_EQ(run("group --input /nonexistent.csv").status, 2);
}

TEST(cli, export_formats) {
    for (const char* f : {"csv", "dot", "pajek", "vjson"}) {
        const auto a = run("export --input " + q(data_path("trio.csv")) + " --format " + f, false);
        const auto b = run("export --input " + q(data_path("trio.csv")) + " --format " + f + " --threads 3", false);
        ASSERT_EQ(a.status, 0) << f;
        EXPECT_EQ(a.out, b.out) << f;
    }
    const auto j = run("export --input " + q(data_path("trio.csv")) + " --format vjson", false);
    const auto doc = nlohmann::json::parse(j.out);
    EXPECT_EQ(doc["network"]["links"].size(), 1u);
}

TEST(cli, compare_country_tier) {
    const auto r = run("compare --labels-a " + q(data_path("china_us_country.csv")) + " --labels-b " +
                       q(data_path("china_us_tier.csv")));
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_TRUE(contains(r.out, "chi2 = 93.40 (df 3)")) << r.out;
    EXPECT_TRUE(contains(r.out, "cramers_v = 0.482")) << r.out;
    EXPECT_TRUE(contains(r.out, "spearman = n/a")) << r.out;

    const auto same = run("compare --labels-a " + q(data_path("china_us_tier.csv")) + " --labels-b " +
                          q(data_path("china_us_tier.csv")));
    ASSERT_EQ(same.status, 0) << same.out;
    EXPECT_TRUE(contains(same.out, "cramers_v = 1.000")) << same.out;
    EXPECT_TRUE(contains(same.out, "spearman = 1.000")) << same.out;
}

TEST(cli, compare_disjoint_and_modes) {
    const auto other = temp_file("other.csv");
    {
        std::ofstream out(other);
        out << "name,label\nSomewhere else,X\n";
    }
    const auto r = run("compare --labels-a " + q(data_path("china_us_tier.csv")) + " --labels-b " + q(other));
    std::filesystem::remove(other);
    EXPECT_EQ(r.status, 2);
    EXPECT_TRUE(contains(r.out, "NoOverlap")) << r.out;

    // three institutions with one country cannot form a 2x2 table
    const auto split = run("compare --input " + q(data_path("trio.csv")) + " --split country");
    EXPECT_EQ(split.status, 2);
    EXPECT_TRUE(contains(split.out, "DegenerateTable")) << split.out;
    const auto methods = run("compare --input " + q(data_path("trio.csv")) + " --methods");
    ASSERT_EQ(methods.status, 0) << methods.out;
    EXPECT_TRUE(contains(methods.out, "cramers_v = 1.000")) << methods.out;
}

TEST(cli, decompose) {
    const auto r = run("decompose 9.81 9.54 9.03");
    ASSERT_EQ(r.status, 0);
    EXPECT_TRUE(contains(r.out, "total = 0.78"));
    EXPECT_TRUE(contains(r.out, "data_effect = 0.27"));
    EXPECT_TRUE(contains(r.out, "model_effect = 0.51"));
    EXPECT_TRUE(contains(r.out, "model_share = 65.4%"));
    EXPECT_TRUE(contains(r.out, "data_share = 34.6%"));
    EXPECT_TRUE(contains(run("decompose 9 9 9").out, "data_share = undefined"));
}

TEST(cli, bootstrap_deterministic) {
    const std::string base = "bootstrap --input " + q(data_path("trio.csv")) + " --draws 200 --seed 11";
    const auto a = run(base, false);
    const auto b = run(base + " --threads 3", false);
    ASSERT_EQ(a.status, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_TRUE(contains(a.out, "name,point,lower,upper,draws,coverage,seed"));
    EXPECT_NE(a.out, run("bootstrap --input " + q(data_path("trio.csv")) + " --draws 200 --seed 12", false).out);
}

TEST(cli, zcurve) {
    const auto r = run("zcurve --scores " + q(data_path("china_z_groups.csv")), false);
    ASSERT_EQ(r.status, 0);
    EXPECT_TRUE(contains(r.out, "CN,1,Tsinghua University,11.005"));
    EXPECT_TRUE(contains(r.out, "CN,203,Capital Medical University,-12.944"));
    const auto from_records = run("zcurve --input " + q(data_path("trio.csv")), false);
    ASSERT_EQ(from_records.status, 0);
    EXPECT_TRUE(contains(from_records.out, "CN,1,Tsinghua University,"));
}
