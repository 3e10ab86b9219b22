#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "twas/cli.hpp"
#include "twas/ingest.hpp"
#include "twas/ld.hpp"
#include "twas/report.hpp"
#include "twas/weights.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "twas");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = twas::cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream f(path);
    f << text;
}

} // namespace

TEST_CASE("help and usage errors")
{
    const auto help = run({"adjust", "--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("--method") != std::string::npos);

    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);

    const auto dir = testing::scratch_dir("cli_usage");
    write_file(dir / "x.tsv", "x\n");
    const auto unknown = run({"adjust", "--results", (dir / "x.tsv").string(), "--bogus"});
    CHECK(unknown.code == 1);

    const auto missing = run({"assoc", "--weights", (dir / "x.tsv").string(), "--ld", (dir / "x.tsv").string()});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("--gwas") != std::string::npos);

    const auto bad_method = run({"adjust", "--results", (dir / "x.tsv").string(), "--method", "holm"});
    CHECK(bad_method.code == 1);
    const auto bad_m = run({"adjust", "--results", (dir / "x.tsv").string(), "--m", "0"});
    CHECK(bad_m.code == 1);
    const auto bad_threads = run({"adjust", "--results", (dir / "x.tsv").string(), "--threads", "0"});
    CHECK(bad_threads.code == 1);
}

TEST_CASE("data errors exit with code 2 and a coded message")
{
    const auto dir = testing::scratch_dir("cli_data");
    write_file(dir / "bad.tsv", "GENE\tTISSUE\n");
    const auto r = run({"adjust", "--results", (dir / "bad.tsv").string()});
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: ", 0) == 0);
    CHECK(r.err.find("MissingColumn") != std::string::npos);
}

TEST_CASE("compute-ld writes a valid matrix")
{
    const auto dir = testing::scratch_dir("cli_ld");
    write_file(dir / "g.tsv", "IID\trs1\trs2\trs3\n"
                              "i1\t0\t0\t2\n"
                              "i2\t1\t1\t1\n"
                              "i3\t2\t2\t0\n"
                              "i4\t1\t2\t1\n"
                              "i5\t0\t0\t1\n");
    write_file(dir / "s.tsv", "SNP\tCHR\tBP\tA1\tA2\n"
                              "rs1\t1\t100\tA\tG\n"
                              "rs2\t1\t200\tC\tT\n"
                              "rs3\t1\t300\tA\tC\n");
    const auto r = run({"compute-ld", "--genotypes", (dir / "g.tsv").string(), "--snp-info",
                        (dir / "s.tsv").string(), "--ld-shrink", "0.1"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    const auto ld = twas::parse_ld_matrix(in, "stdout");
    REQUIRE(ld.size() == 3);
    CHECK(ld.values(0, 0) == doctest::Approx(1.0));
    CHECK(ld.values(0, 1) == doctest::Approx(ld.values(1, 0)));
    CHECK(std::abs(ld.values(0, 1)) < 0.9 + 1e-12);
}

TEST_CASE("simulate, train, assoc, adjust, report pipeline")
{
    const auto dir = testing::scratch_dir("cli_pipeline");
    const auto data = dir / "data";
    const auto sim = run({"simulate", "--dataset-out", data.string(), "--genes", "8", "--seed", "11"});
    REQUIRE_MESSAGE(sim.code == 0, sim.err);
    for (const char* f : {"expr_genotypes.tsv", "expr_snps.tsv", "ref_genotypes.tsv", "ref_snps.tsv",
                          "expression.tsv", "gwas.tsv", "truth.tsv"})
        CHECK(fs::exists(data / f));

    const auto weights = dir / "weights.tsv";
    const auto train = run({"train", "--genotypes", (data / "expr_genotypes.tsv").string(), "--snp-info",
                            (data / "expr_snps.tsv").string(), "--expression", (data / "expression.tsv").string(),
                            "--log", (dir / "train_log.tsv").string(), "--out", weights.string()});
    REQUIRE_MESSAGE(train.code == 0, train.err);
    CHECK(train.out.empty());
    CHECK(fs::exists(dir / "train_log.tsv"));
    const auto panel = twas::parse_weight_panel(weights);
    CHECK(!panel.empty());

    const auto assoc = run({"assoc", "--gwas", (data / "gwas.tsv").string(), "--weights", weights.string(),
                            "--ld", (data / "ref_genotypes.tsv").string(), "--ld-snps",
                            (data / "ref_snps.tsv").string()});
    REQUIRE_MESSAGE(assoc.code == 0, assoc.err);
    const auto results_path = dir / "results.tsv";
    write_file(results_path, assoc.out);
    const auto results = twas::parse_results_table(results_path.string());
    CHECK(results.size() == panel.size());

    const auto adjust = run({"adjust", "--results", results_path.string(), "--out", (dir / "adj.tsv").string()});
    REQUIRE_MESSAGE(adjust.code == 0, adjust.err);
    const auto adjusted = twas::parse_results_table((dir / "adj.tsv").string());
    REQUIRE(adjusted.size() == results.size());
    for (const auto& a : adjusted) {
        if (a.result.status != twas::TestStatus::ok)
            continue;
        CHECK(a.annotation.m_used);
        CHECK(a.annotation.bonf_reject);
        CHECK(a.annotation.bh_reject);
        if (*a.annotation.bonf_reject)
            CHECK(*a.annotation.bh_reject);
    }

    const auto report = run({"report", "--results", (dir / "adj.tsv").string(), "--plot-data",
                             (dir / "plot.tsv").string(), "--svg", (dir / "plot.svg").string()});
    REQUIRE_MESSAGE(report.code == 0, report.err);
    CHECK(report.out == testing::slurp(dir / "adj.tsv"));
    CHECK(testing::slurp(dir / "plot.tsv").rfind("GENE\tCHR\tBP\tNEGLOG10P\tREJECTED\n", 0) == 0);
    CHECK(testing::slurp(dir / "plot.svg").find("</svg>") != std::string::npos);

    // Strong-effect genes should be found.
    std::ifstream truth(data / "truth.tsv");
    std::string line;
    std::getline(truth, line);
    int expected = 0, found = 0;
    while (std::getline(truth, line)) {
        std::istringstream fields(line);
        std::string gene, scenario, chrom, tss, detected;
        fields >> gene >> scenario >> chrom >> tss >> detected;
        if (detected != "1")
            continue;
        ++expected;
        for (const auto& a : adjusted)
            if (a.result.gene == gene && a.annotation.bonf_reject.value_or(false)) {
                ++found;
                break;
            }
    }
    CHECK(expected > 0);
    CHECK(found == expected);
    MESSAGE("detected " << found << " of " << expected);
}
