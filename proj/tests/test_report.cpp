#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "twas/errors.hpp"
#include "twas/report.hpp"
#include "twas/tsv.hpp"

#include <algorithm>
#include <sstream>

using namespace twas;

namespace {

std::vector<std::vector<std::string>> rows_of(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        for (auto f : tsv::split(line))
            fields.emplace_back(f);
        rows.push_back(fields);
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name)
{
    const auto it = std::find(header.begin(), header.end(), name);
    REQUIRE(it != header.end());
    return static_cast<std::size_t>(it - header.begin());
}

} // namespace

TEST_CASE("empty results give a header-only table")
{
    std::ostringstream out;
    write_results_table(std::span<const TwasResult>{}, out);
    CHECK(out.str() == "GENE\tTISSUE\tCHR\tNSNPS\tMODEL\tTWAS_Z\tTWAS_P\tLOG10P\tSTATUS\tBP\n");
    std::ostringstream adj;
    write_results_table(std::span<const AnnotatedResult>{}, adj, true);
    CHECK(adj.str() == "GENE\tTISSUE\tCHR\tNSNPS\tMODEL\tTWAS_Z\tTWAS_P\tLOG10P\tSTATUS\tBONF_REJECT\tBH_REJECT\t"
                       "BONF_THRESHOLD\tBH_KSTAR\tM_USED\tBP\n");
}

TEST_CASE("published rows re-serialize in the same p-value style")
{
    const auto results = testing::as_results(testing::kBonferroniHits);
    std::ostringstream out;
    write_results_table(results, out, false);
    const auto rows = rows_of(out.str());
    REQUIRE(rows.size() == 19);
    const auto gene = column(rows[0], "GENE");
    const auto p = column(rows[0], "TWAS_P");
    const auto z = column(rows[0], "TWAS_Z");
    for (const auto& r : testing::kBonferroniHits) {
        char expected[32];
        std::snprintf(expected, sizeof(expected), "%.2E", r.p);
        const auto it = std::find_if(rows.begin() + 1, rows.end(), [&](const auto& row) {
            return row[gene] == r.gene && row[p] == expected;
        });
        CHECK(it != rows.end());
    }
    CHECK(rows[1][p] == "4.92E-34");
    CHECK(rows[1][z] == "-12.1626");
}

TEST_CASE("rows are grouped by tissue, sorted by p, untestable last")
{
    std::vector<AnnotatedResult> rows;
    auto add = [&](const char* gene, const char* tissue, std::optional<double> p) {
        AnnotatedResult a;
        a.result.gene = gene;
        a.result.tissue = tissue;
        a.result.chrom = 1;
        a.result.bp = 100;
        if (p) {
            a.result.p = *p;
            a.result.log10_p = std::log10(*p);
            a.result.z_twas = 2.0;
            a.result.status = TestStatus::ok;
        }
        rows.push_back(a);
    };
    add("A", "T2", 0.5);
    add("B", "T1", 1e-3);
    add("C", "T2", std::nullopt);
    add("D", "T2", 1e-8);
    add("E", "T1", 0.2);
    std::ostringstream out;
    write_results_table(rows, out, false);
    const auto table = rows_of(out.str());
    std::vector<std::string> order;
    for (std::size_t i = 1; i < table.size(); ++i)
        order.push_back(table[i][0]);
    CHECK(order == std::vector<std::string>{"D", "A", "C", "B", "E"});
    const auto& untestable = table[3];
    CHECK(untestable[column(table[0], "TWAS_Z")] == "NA");
    CHECK(untestable[column(table[0], "TWAS_P")] == "NA");
    CHECK(untestable[column(table[0], "STATUS")] == "not_testable");
}

TEST_CASE("results table round trip")
{
    auto results = testing::as_results(testing::kBhAdditionalHits);
    for (std::size_t i = 0; i < results.size(); ++i) {
        results[i].result.bp = static_cast<std::int64_t>(1000 * (i + 1));
        results[i].annotation.bh_reject = true;
        results[i].annotation.bonf_reject = false;
        results[i].annotation.bonf_threshold = 0.05 / 15000;
        results[i].annotation.bh_kstar = 34;
        results[i].annotation.m_used = 15000;
    }
    AnnotatedResult na;
    na.result.gene = "NOPE";
    na.result.tissue = "Brain (CMC) RNA-seq";
    na.result.chrom = 3;
    results.push_back(na);

    std::ostringstream out;
    write_results_table(results, out, true);
    std::istringstream in(out.str());
    const auto back = parse_results_table(in, "r.tsv");
    REQUIRE(back.size() == results.size());
    for (const auto& b : back) {
        if (b.result.gene == "NOPE") {
            CHECK(!b.result.p);
            CHECK(b.result.status == TestStatus::not_testable);
            CHECK(!b.result.bp);
            continue;
        }
        // p comes back to at least three significant digits.
        const auto match = std::find_if(results.begin(), results.end(), [&](const AnnotatedResult& r) {
            return r.result.gene == b.result.gene && r.result.z_twas == b.result.z_twas;
        });
        REQUIRE(match != results.end());
        CHECK(tsv::format_scientific(*b.result.p, 3) == tsv::format_scientific(*match->result.p, 3));
        // LOG10P carries 10 significant digits.
        CHECK(std::abs(*b.result.p - *match->result.p) <= 1e-8 * *match->result.p);
        CHECK(b.result.bp == match->result.bp);
        CHECK(b.annotation.bh_reject == true);
        CHECK(b.annotation.bonf_reject == false);
        CHECK(b.annotation.m_used == 15000);
        CHECK(b.annotation.bh_kstar == 34);
        CHECK(*b.annotation.bonf_threshold == doctest::Approx(0.05 / 15000).epsilon(1e-5));
    }

    // Re-writing the parsed table reproduces it byte for byte.
    std::ostringstream again;
    write_results_table(back, again, true);
    CHECK(again.str() == out.str());
}

TEST_CASE("parse_results_table rejects malformed tables")
{
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return parse_results_table(in, "r.tsv");
    };
    const std::string head = "GENE\tTISSUE\tCHR\tNSNPS\tMODEL\tTWAS_Z\tTWAS_P\tLOG10P\tSTATUS\n";
    CHECK_THROWS_AS(parse("GENE\tTISSUE\n"), Error);
    CHECK_THROWS_AS(parse(head + "G\tT\t1\t2\tbslmm\t1\t0.3\t-0.5\tok\n"), Error);
    CHECK_THROWS_AS(parse(head + "G\tT\t1\t2\tlasso\t1\t0.3\t-0.5\tfine\n"), Error);
    CHECK_THROWS_AS(parse(head + "G\tT\t1\t2\tlasso\tNA\tNA\tNA\tok\n"), Error);
    CHECK_THROWS_AS(parse(head + "G\tT\t1\t2\tlasso\t1\t1.5\tNA\tok\n"), Error);
    const auto ok = parse(head + "G\tT\t1\t2\tlasso\t1\t0.317\t-0.498515546\tok\n");
    REQUIRE(ok.size() == 1);
    CHECK(*ok[0].result.p == doctest::Approx(0.3173105).epsilon(1e-8));
    CHECK(!ok[0].result.bp);
}

TEST_CASE("position plot data")
{
    std::vector<AnnotatedResult> rows(3);
    rows[0].result.gene = "B";
    rows[0].result.chrom = 19;
    rows[0].result.bp = 500;
    rows[0].result.p = 1e-6;
    rows[0].result.log10_p = -6.0;
    rows[0].annotation.bonf_reject = true;
    rows[1].result.gene = "A";
    rows[1].result.chrom = 19;
    rows[1].result.bp = 100;
    rows[1].result.p = 1.0;
    rows[1].result.log10_p = 0.0;
    rows[1].annotation.bh_reject = false;
    rows[2].result.gene = "untested";
    rows[2].result.chrom = 1;
    std::ostringstream out;
    write_position_plot_data(rows, out);
    CHECK(out.str() == "GENE\tCHR\tBP\tNEGLOG10P\tREJECTED\nA\t19\t100\t0\t0\nB\t19\t500\t6\t1\n");

    rows[1].result.bp.reset();
    std::ostringstream bad;
    try {
        write_position_plot_data(rows, bad);
        FAIL("expected MissingColumn");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingColumn);
        CHECK(std::string(e.what()).find("BP") != std::string::npos);
    }
}

TEST_CASE("threshold line and SVG")
{
    CHECK(bonferroni_line(0.05, 15000) == doctest::Approx(5.477).epsilon(1e-4));
    CHECK_THROWS_AS(bonferroni_line(0.05, 0), Error);

    auto rows = testing::as_results(testing::kBonferroniHits);
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i].result.bp = static_cast<std::int64_t>(1'000'000 + 1000 * i);
    std::ostringstream svg;
    write_position_svg(rows, bonferroni_line(0.05, 15000), svg);
    const auto text = svg.str();
    CHECK(text.rfind("<svg", 0) == 0);
    CHECK(text.find("</svg>") != std::string::npos);
    std::size_t circles = 0;
    for (std::size_t pos = 0; (pos = text.find("<circle", pos)) != std::string::npos; ++pos)
        ++circles;
    CHECK(circles == rows.size());
    CHECK(text.find("stroke=\"red\"") != std::string::npos);
}

TEST_CASE("unique gene counts")
{
    auto first = testing::as_results(testing::kBonferroniHits);
    auto second = testing::as_results(testing::kBhAdditionalHits);
    CHECK(unique_gene_count(first, false) == 15);
    CHECK(unique_gene_count(second, false) == 29);
    CHECK(unique_gene_count(std::span<const AnnotatedResult>{}, false) == 0);

    std::mt19937_64 gen(3);
    std::shuffle(first.begin(), first.end(), gen);
    for (auto& r : first)
        r.result.tissue = "same";
    CHECK(unique_gene_count(first, false) == 15);

    CHECK(unique_gene_count(first, true) == 0);
    first[0].annotation.bh_reject = true;
    first[1].annotation.bonf_reject = true;
    first[2].annotation.bonf_reject = false;
    CHECK(unique_gene_count(first, true) == (first[0].result.gene == first[1].result.gene ? 1u : 2u));
}
