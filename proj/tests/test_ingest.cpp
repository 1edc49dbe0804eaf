#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ranksig;
using namespace ranksig::testing;

namespace {

const std::string header = "name,country,period,field,counting,p,t_top10,pp_top10,ci_lower,ci_upper\n";

std::vector<institution_record> parse(const std::string& text, const dataset_selector& sel = {}) {
    std::istringstream in(text);
    return parse_records(in, sel);
}

errc parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return errc::invalid_statistic;
}

} // namespace

TEST(ingest, tsinghua_zhejiang_table_row) {
    auto recs = parse(header + "Tsinghua University,CN,2015-2018,All sciences,frac,19902,2738,0.1376,,\n");
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].name, "Tsinghua University");
    EXPECT_DOUBLE_EQ(recs[0].p, 19902);
    EXPECT_DOUBLE_EQ(recs[0].t_top10, 2738);
    EXPECT_DOUBLE_EQ(recs[0].pp_top10, 0.1376);
    EXPECT_EQ(recs[0].counting, counting_method::fractional);
    EXPECT_FALSE(recs[0].ci_lower.has_value());
    EXPECT_TRUE(recs[0].t_supplied);
}

TEST(ingest, degenerate_institution_is_valid) {
    auto recs = parse(header + "Empty U,XX,2015-2018,All sciences,full,0,0,0,,\n");
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].p, 0.0);
    EXPECT_EQ(recs[0].counting, counting_method::full);
}

TEST(ingest, missing_t_is_derived) {
    auto recs = parse(header + "A,XX,2015-2018,All sciences,frac,1000,,0.138,,\n");
    EXPECT_DOUBLE_EQ(recs[0].t_top10, 138.0);
    EXPECT_FALSE(recs[0].t_supplied);
}

TEST(ingest, percent_unit_and_crlf) {
    auto recs = parse("#pp_unit=percent\r\n" + std::string("name,country,period,field,counting,p,t_top10,pp_top10,ci_lower,ci_upper\r\n") +
                      "A,XX,2015-2018,All sciences,frac,1000,,13.8,13.0,14.5\r\n");
    EXPECT_NEAR(recs[0].pp_top10, 0.138, 1e-15);
    EXPECT_NEAR(*recs[0].ci_lower, 0.130, 1e-15);
    EXPECT_NEAR(*recs[0].ci_upper, 0.145, 1e-15);
}

TEST(ingest, quoted_names) {
    auto recs = parse(header + "\"University of California, Berkeley\",US,2015-2018,All sciences,frac,100,20,0.2,,\n");
    EXPECT_EQ(recs[0].name, "University of California, Berkeley");
}

TEST(ingest, selector_filters_and_no_match) {
    const std::string text = header + "A,CN,2015-2018,All sciences,frac,100,10,0.1,,\n" +
                             "B,US,2015-2018,All sciences,frac,100,10,0.1,,\n" +
                             "A,CN,2014-2017,All sciences,frac,90,9,0.1,,\n" +
                             "A,CN,2015-2018,All sciences,full,120,12,0.1,,\n";
    dataset_selector sel;
    sel.period = "2015-2018";
    sel.counting = counting_method::fractional;
    EXPECT_EQ(parse(text, sel).size(), 2u);
    sel.countries = {"US"};
    auto us = parse(text, sel);
    ASSERT_EQ(us.size(), 1u);
    EXPECT_EQ(us[0].name, "B");
    sel.countries = {"DE"};
    try {
        parse(text, sel);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::no_match);
    }
}

TEST(ingest, dedup_keeps_first_and_conflict_raises) {
    auto recs = parse(header + "A,CN,2015-2018,All sciences,frac,100,10,0.1,,\n" + "B,CN,2015-2018,All sciences,frac,50,5,0.1,,\n" +
                      "A,CN,2015-2018,All sciences,frac,100,10,0.1,,\n");
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].name, "A");
    EXPECT_EQ(recs[1].name, "B");
    EXPECT_EQ(parse_error(header + "A,CN,2015-2018,All sciences,frac,100,10,0.1,,\n" +
                          "A,CN,2015-2018,All sciences,frac,100,11,0.11,,\n"),
              errc::duplicate_record);
}

TEST(ingest, error_paths) {
    EXPECT_EQ(parse_error(""), errc::malformed_row);
    EXPECT_EQ(parse_error("name,p\nA,1\n"), errc::malformed_row);
    EXPECT_EQ(parse_error(header + "A,CN,2015-2018,All sciences,frac,100,10\n"), errc::malformed_row);
    EXPECT_EQ(parse_error(header + "A,CN,2015-2018,All sciences,half,100,10,0.1,,\n"), errc::malformed_row);
    EXPECT_EQ(parse_error(header + "A,CN,2015-2018,All sciences,frac,abc,10,0.1,,\n"), errc::malformed_row);
    EXPECT_EQ(parse_error(header + "\"A,CN,2015-2018,All sciences,frac,100,10,0.1,,\n"), errc::malformed_row);
    EXPECT_EQ(parse_error("#pp_unit=permille\n" + header), errc::malformed_row);
    // t > p
    EXPECT_EQ(parse_error(header + "A,CN,2015-2018,All sciences,frac,100,101,0.1,,\n"), errc::invariant_violation);
    // pp outside [0,1]
    EXPECT_EQ(parse_error(header + "A,CN,2015-2018,All sciences,frac,100,,1.5,,\n"), errc::invariant_violation);
    // CI does not bracket pp
    EXPECT_EQ(parse_error(header + "A,CN,2015-2018,All sciences,frac,100,10,0.1,0.11,0.12\n"), errc::invariant_violation);
    // only one bound
    EXPECT_EQ(parse_error(header + "A,CN,2015-2018,All sciences,frac,100,10,0.1,0.09,\n"), errc::invariant_violation);
    // t inconsistent with pp * p beyond 0.5 + 0.005 p
    EXPECT_EQ(parse_error(header + "A,CN,2015-2018,All sciences,frac,1000,150,0.1,,\n"), errc::invariant_violation);
    EXPECT_EQ(parse_error(header + "A,CN,2015-2018,All sciences,frac,-1,0,0,,\n"), errc::invariant_violation);
}

TEST(ingest, malformed_row_reports_line_number) {
    try {
        parse(header + "A,CN,2015-2018,All sciences,frac,100,10,0.1,,\n\nB,CN,2015\n");
        FAIL();
    } catch (const error& e) {
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    }
}

TEST(ingest, consistency_tolerance_boundary) {
    // |2738 - 0.1376 * 19902| = 0.4752, inside 0.5 + 99.51
    EXPECT_NO_THROW(parse(header + "T,CN,2015-2018,All sciences,frac,19902,2738,0.1376,,\n"));
    // 0.5 + 0.005 * 100 = 1.0 exactly at the boundary
    EXPECT_NO_THROW(parse(header + "A,CN,2015-2018,All sciences,frac,100,11,0.1,,\n"));
    EXPECT_EQ(parse_error(header + "A,CN,2015-2018,All sciences,frac,100,11.01,0.1,,\n"), errc::invariant_violation);
}

TEST(ingest, round_trip_property) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<institution_record> recs;
        for (int i = 0; i < 8; ++i) {
            auto r = random_record(rng, "Inst \"" + std::to_string(trial) + "\", no. " + std::to_string(i));
            r.counting = u(rng) < 0.5 ? counting_method::fractional : counting_method::full;
            r.p += u(rng); // fractional counts
            r.t_top10 = std::min(r.t_top10, r.p);
            r.pp_top10 = r.t_top10 / r.p;
            if (u(rng) < 0.3) {
                r.t_supplied = false;
                r.t_top10 = r.pp_top10 * r.p;
            }
            if (u(rng) < 0.5) {
                r.ci_lower = r.pp_top10 * 0.9;
                r.ci_upper = std::min(1.0, r.pp_top10 * 1.1 + 1e-3);
            }
            recs.push_back(r);
        }
        std::stringstream buf;
        write_records(buf, recs);
        auto back = parse_records(buf, {});
        ASSERT_EQ(back.size(), recs.size());
        for (std::size_t i = 0; i < recs.size(); ++i) {
            EXPECT_EQ(back[i].name, recs[i].name);
            EXPECT_EQ(back[i].country, recs[i].country);
            EXPECT_EQ(back[i].period, recs[i].period);
            EXPECT_EQ(back[i].field, recs[i].field);
            EXPECT_EQ(back[i].counting, recs[i].counting);
            EXPECT_NEAR(back[i].p, recs[i].p, 1e-9);
            EXPECT_NEAR(back[i].t_top10, recs[i].t_top10, 1e-9);
            EXPECT_NEAR(back[i].pp_top10, recs[i].pp_top10, 1e-9);
            EXPECT_EQ(back[i].ci_lower.has_value(), recs[i].ci_lower.has_value());
            if (recs[i].ci_lower) {
                EXPECT_NEAR(*back[i].ci_lower, *recs[i].ci_lower, 1e-9);
                EXPECT_NEAR(*back[i].ci_upper, *recs[i].ci_upper, 1e-9);
            }
        }
    }
}

// Fuzzed rows: each either parses into a record meeting every invariant or
// raises; nothing invalid slips through.
TEST(ingest, fuzzed_rows_never_pass_silently) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.2, 1.2);
    std::uniform_real_distribution<double> size(-10.0, 2000.0);
    int accepted = 0, rejected = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        const double p = size(rng);
        const double pp = u(rng);
        const double t = u(rng) * p;
        const bool with_t = u(rng) < 0.6;
        const bool with_ci = u(rng) < 0.5;
        const double lo = pp + (u(rng) - 0.5) * 0.2;
        const double hi = pp + (u(rng) - 0.3) * 0.2;
        std::ostringstream row;
        row << std::setprecision(17) << "X,CN,2015-2018,All sciences,frac," << p << ',';
        if (with_t) row << t;
        row << ',' << pp << ',';
        if (with_ci) row << lo << ',' << hi;
        else row << ',';
        try {
            auto recs = parse(header + row.str() + "\n");
            ++accepted;
            const auto& r = recs.at(0);
            EXPECT_GE(r.p, 0.0);
            EXPECT_GE(r.t_top10, 0.0);
            EXPECT_LE(r.t_top10, r.p);
            EXPECT_GE(r.pp_top10, 0.0);
            EXPECT_LE(r.pp_top10, 1.0);
            if (r.ci_lower) {
                EXPECT_LE(0.0, *r.ci_lower);
                EXPECT_LE(*r.ci_lower, r.pp_top10);
                EXPECT_LE(r.pp_top10, *r.ci_upper);
                EXPECT_LE(*r.ci_upper, 1.0);
            }
            if (r.t_supplied) {
                EXPECT_LE(std::abs(r.t_top10 - r.pp_top10 * r.p), 0.5 + 0.005 * r.p);
            }
        } catch (const error& e) {
            ++rejected;
            EXPECT_TRUE(e.code() == errc::invariant_violation || e.code() == errc::malformed_row);
        }
    }
    EXPECT_GT(accepted, 100);
    EXPECT_GT(rejected, 100);
}

TEST(ingest, scores_and_labels) {
    std::istringstream scores("name,z,category\nA,1.5,CN\nB,-2,US\n");
    auto s = parse_scores(scores);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[1].category, "US");
    EXPECT_DOUBLE_EQ(s[1].z, -2.0);

    std::istringstream bad("name,z\nA,x\n");
    EXPECT_THROW(parse_scores(bad), error);

    std::istringstream labels("name,label\nA,high\nB,low\n");
    auto l = parse_labels(labels);
    ASSERT_EQ(l.size(), 2u);
    EXPECT_EQ(l[0].second, "high");

    std::istringstream dup("name,label\nA,high\nA,low\n");
    EXPECT_THROW(parse_labels(dup), error);
}

TEST(ingest, shipped_fixture_parses) {
    std::ifstream in(data_path("trio.csv"));
    auto recs = parse_records(in, {});
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0].name, "Tsinghua University");
    EXPECT_DOUBLE_EQ(recs[1].t_top10, 2604);
}
