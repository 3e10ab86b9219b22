#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "twas/assoc.hpp"
#include "twas/errors.hpp"
#include "twas/ld.hpp"
#include "twas/normal.hpp"
#include "twas/sim.hpp"

#include <limits>

using namespace twas;

namespace {

struct TailValue {
    double z;
    double p;       // erfc(z / sqrt 2), 20-digit reference
    double log10_p;
};

// Reference values from arbitrary-precision evaluation.
const TailValue kTail[] = {
    {0.5, 0.61707507745197379272, -0.20966199360125957926},
    {1.0, 0.31731050786291410283, -0.49851554582798930482},
    {2.0, 0.045500263896358414401, -1.3419860844769558528},
    {5.0, 5.7330314375838782335e-7, -6.2416156767266733011},
    {8.0, 1.2441921148543568247e-15, -14.905112555353173363},
    {8.5, 1.8959069644406636708e-17, -16.722182978085185206},
    {10.0, 1.5239706048321052132e-23, -22.817023409822094699},
    {15.0, 7.3419323986255017716e-51, -50.134189618611530172},
    {20.0, 5.5072482372124673902e-89, -88.259065347411610725},
    {30.0, 9.8134278542963741191e-198, -197.00817926599696819},
    {37.0, 1.1451142445049153645e-299, -298.94115118294594048},
    {38.0, 5.7708567201375686167e-316, -315.2387597082985267},
    {40.0, 0.0, -349.13597646368186089}, // p = 7.31e-350, below the double range
};

LdMatrix ld_of(const Eigen::MatrixXd& values)
{
    LdMatrix ld;
    for (Eigen::Index j = 0; j < values.rows(); ++j)
        ld.snp_ids.push_back("rs" + std::to_string(j + 1));
    ld.values = values;
    return ld;
}

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out(i++) = x;
    return out;
}

// Independent evaluation of the statistic with explicit loops.
double direct_twas(const Eigen::VectorXd& w, const Eigen::VectorXd& z, const Eigen::MatrixXd& s)
{
    double num = 0, den = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        num += w(i) * z(i);
        for (Eigen::Index j = 0; j < w.size(); ++j)
            den += w(i) * s(i, j) * w(j);
    }
    return num / std::sqrt(den);
}

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

struct Fixture {
    GeneWeightSet weights;
    GwasSummary gwas;
    LdMatrix ld;
};

// p SNPs with random weights, z-scores and LD; GWAS alleles match.
Fixture random_fixture(std::mt19937_64& gen, int p)
{
    Fixture f;
    f.weights.gene = "G";
    f.weights.tissue = "T";
    f.weights.chrom = 1;
    f.weights.tss = 5000;
    f.weights.model = ModelKind::lasso;
    std::vector<GwasEntry> entries;
    const auto w = testing::random_vector(gen, p);
    const Eigen::VectorXd z = testing::random_vector(gen, p) * 2.0;
    for (int j = 0; j < p; ++j) {
        SnpRecord s{"rs" + std::to_string(j + 1), 1, 1000 + j, 'A', 'C'};
        f.weights.snps.push_back(s);
        f.weights.weights.push_back(w(j));
        entries.push_back({s, z(j)});
    }
    f.gwas = GwasSummary(entries);
    f.ld = ld_of(testing::random_correlation(gen, p));
    return f;
}

} // namespace

TEST_CASE("z_to_p against arbitrary-precision references")
{
    for (const auto& t : kTail) {
        for (double sign : {1.0, -1.0}) {
            const auto pv = z_to_p(sign * t.z);
            CHECK(std::abs(pv.log10_p - t.log10_p) <= 1e-12 * std::abs(t.log10_p));
            if (t.p >= std::numeric_limits<double>::min())
                CHECK(std::abs(pv.p - t.p) <= 1e-11 * t.p);
        }
    }
    // Subnormal range: still accurate to the available precision.
    CHECK(std::abs(z_to_p(38.0).p - 5.7708567201375686167e-316) <= 1e-6 * 5.7708567201375686167e-316);
}

TEST_CASE("z_to_p edge cases")
{
    CHECK(z_to_p(0.0).p == 1.0);
    CHECK(z_to_p(0.0).log10_p == 0.0);
    CHECK(z_to_p(-0.0).p == 1.0);
    const auto huge = z_to_p(40.0);
    CHECK(huge.p == std::numeric_limits<double>::denorm_min());
    CHECK(huge.log10_p == doctest::Approx(-349.13597646368186089).epsilon(1e-12));
    CHECK(z_to_p(1e6).log10_p < -1e11);
    CHECK(std::isfinite(z_to_p(1e150).log10_p));
    CHECK(code_of([] { z_to_p(std::nan("")); }) == ErrorCode::NonFiniteZ);
    CHECK(code_of([] { z_to_p(std::numeric_limits<double>::infinity()); }) == ErrorCode::NonFiniteZ);
}

TEST_CASE("z_to_p is symmetric and monotone")
{
    double prev_log = 1.0;
    double prev_p = 2.0;
    for (int k = 0; k <= 80; ++k) {
        const double z = 0.5 * k;
        const auto a = z_to_p(z);
        const auto b = z_to_p(-z);
        CHECK(a.p == b.p);
        CHECK(a.log10_p == b.log10_p);
        CHECK(a.log10_p < prev_log);
        CHECK(a.p <= prev_p);
        if (a.p > std::numeric_limits<double>::denorm_min())
            CHECK(a.p < prev_p);
        CHECK(a.p > 0.0);
        CHECK(a.p <= 1.0);
        if (a.p >= std::numeric_limits<double>::min())
            CHECK(std::abs(std::log10(a.p) - a.log10_p) <= 1e-9 * std::max(1.0, std::abs(a.log10_p)));
        prev_log = a.log10_p;
        prev_p = a.p;
    }
}

TEST_CASE("z_to_p agrees with the published p-values")
{
    for (const auto* rows : {&testing::kBonferroniHits, &testing::kBhAdditionalHits}) {
        for (const auto& r : *rows) {
            CAPTURE(r.gene);
            CHECK(std::abs(z_to_p(r.z).p - r.p) <= 0.02 * r.p);
        }
    }
}

TEST_CASE("normal quantile inverts the upper tail")
{
    for (double p : {1e-300, 1e-20, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1 - 1e-10}) {
        const double x = normal::quantile(p);
        CHECK(normal::cdf(x) == doctest::Approx(p).epsilon(1e-9));
    }
    CHECK(normal::quantile(0.5) == 0.0);
    CHECK_THROWS_AS(normal::quantile(0.0), Error);
    CHECK_THROWS_AS(normal::quantile(1.0), Error);
}

TEST_CASE("twas_z analytic cases")
{
    CHECK(twas_z(vec({1}), vec({2.5}), ld_of(Eigen::MatrixXd::Ones(1, 1))) == doctest::Approx(2.5));
    CHECK(twas_z(vec({0.5, 0.5}), vec({2, 2}), ld_of(Eigen::MatrixXd::Identity(2, 2))) ==
          doctest::Approx(2.828427).epsilon(1e-6));
    CHECK(twas_z(vec({1, 1}), vec({3, 3}), ld_of(Eigen::MatrixXd::Ones(2, 2))) == doctest::Approx(3.0));
    CHECK(code_of([] { twas_z(vec({0, 0}), vec({1, 1}), ld_of(Eigen::MatrixXd::Identity(2, 2))); }) ==
          ErrorCode::DenominatorTooSmall);
    CHECK(code_of([] { twas_z(vec({1e-5}), vec({1}), ld_of(Eigen::MatrixXd::Identity(1, 1))); }) ==
          ErrorCode::DenominatorTooSmall);
    CHECK(code_of([] { twas_z(vec({1, 1}), vec({1}), ld_of(Eigen::MatrixXd::Identity(2, 2))); }) ==
          ErrorCode::DimensionMismatch);
    CHECK(code_of([] { twas_z(vec({1, 1}), vec({1, 1}), ld_of(Eigen::MatrixXd::Identity(3, 3))); }) ==
          ErrorCode::DimensionMismatch);
}

TEST_CASE("twas_z properties on random instances")
{
    std::mt19937_64 gen(31);
    for (int rep = 0; rep < 200; ++rep) {
        const int p = 1 + rep % 50;
        const auto w = testing::random_vector(gen, p);
        const Eigen::VectorXd z = testing::random_vector(gen, p) * 3.0;
        const auto ld = shrink_ld(ld_of(testing::random_correlation(gen, p)), 0.1);
        const double base = twas_z(w, z, ld);
        CHECK(std::abs(base - direct_twas(w, z, ld.values)) <= 1e-8 * std::max(1.0, std::abs(base)));
        CHECK(std::abs(twas_z(0.1 * w, z, ld) - base) <= 1e-8);
        CHECK(std::abs(twas_z(3.0 * w, z, ld) - base) <= 1e-8);
        CHECK(std::abs(twas_z(-w, z, ld) + base) <= 1e-8);
        // Flipping the orientation of every SNP negates both w and z.
        CHECK(std::abs(twas_z(-w, -z, ld) - base) <= 1e-8);
        const double bound = z.cwiseAbs().maxCoeff() * w.cwiseAbs().sum() / std::sqrt(w.dot(ld.values * w));
        CHECK(std::abs(base) <= bound + 1e-9);

        const auto id = ld_of(Eigen::MatrixXd::Identity(p, p));
        CHECK(std::abs(twas_z(w, z, id) - w.dot(z) / w.norm()) <= 1e-8);
    }
}

TEST_CASE("run_gene: one-hot weight returns the harmonized z")
{
    std::mt19937_64 gen(32);
    auto f = random_fixture(gen, 10);
    std::fill(f.weights.weights.begin(), f.weights.weights.end(), 0.0);
    f.weights.weights[6] = 0.7;
    AssocOptions opts;
    opts.ld_shrink = 0.0;
    const auto r = run_gene(f.weights, f.gwas, MatrixLdSource(ld_of(Eigen::MatrixXd::Identity(10, 10))), opts);
    REQUIRE(r.z_twas);
    CHECK(*r.z_twas == doctest::Approx(f.gwas.find("rs7")->z).epsilon(1e-12));
    CHECK(r.status == TestStatus::ok);
    CHECK(r.n_snps_used == 10);
    CHECK(r.bp == 5000);
    CHECK(*r.p == doctest::Approx(z_to_p(*r.z_twas).p));

    // Report the GWAS allele the other way round: the z is negated back.
    std::vector<GwasEntry> flipped(f.gwas.entries().begin(), f.gwas.entries().end());
    std::swap(flipped[6].snp.a1, flipped[6].snp.a2);
    flipped[6].z = -flipped[6].z;
    const auto r2 = run_gene(f.weights, GwasSummary(flipped),
                             MatrixLdSource(ld_of(Eigen::MatrixXd::Identity(10, 10))), opts);
    CHECK(*r2.z_twas == doctest::Approx(*r.z_twas).epsilon(1e-12));
}

TEST_CASE("run_gene: dropped SNPs match a direct subset recomputation")
{
    std::mt19937_64 gen(33);
    for (int rep = 0; rep < 100; ++rep) {
        const int p = 10 + rep % 40;
        auto f = random_fixture(gen, p);
        // Drop two SNPs: one missing from the GWAS, one with mismatched alleles.
        std::vector<GwasEntry> entries;
        for (const auto& e : f.gwas.entries()) {
            if (e.snp.id == "rs3")
                continue;
            auto copy = e;
            if (e.snp.id == "rs5")
                copy.snp.a2 = 'G';
            entries.push_back(copy);
        }
        AssocOptions opts;
        opts.ld_shrink = 0.1;
        const auto r = run_gene(f.weights, GwasSummary(entries), MatrixLdSource(f.ld), opts);

        std::vector<std::size_t> keep;
        for (int j = 0; j < p; ++j)
            if (j != 2 && j != 4)
                keep.push_back(static_cast<std::size_t>(j));
        const auto k = static_cast<Eigen::Index>(keep.size());
        Eigen::VectorXd w(k), z(k);
        Eigen::MatrixXd s(k, k);
        for (Eigen::Index a = 0; a < k; ++a) {
            w(a) = f.weights.weights[keep[static_cast<std::size_t>(a)]];
            z(a) = f.gwas.entries()[keep[static_cast<std::size_t>(a)]].z;
            for (Eigen::Index b = 0; b < k; ++b) {
                const double raw = f.ld.values(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(a)]),
                                               static_cast<Eigen::Index>(keep[static_cast<std::size_t>(b)]));
                s(a, b) = a == b ? 1.0 : 0.9 * raw;
            }
        }
        REQUIRE(r.z_twas);
        CHECK(r.n_snps_used == p - 2);
        CHECK(std::abs(*r.z_twas - direct_twas(w, z, s)) <= 1e-8);
    }
}

TEST_CASE("run_gene statuses")
{
    std::mt19937_64 gen(34);
    auto f = random_fixture(gen, 4);
    const MatrixLdSource src(f.ld);

    const auto none = run_gene(f.weights, GwasSummary{}, src);
    CHECK(none.status == TestStatus::not_testable);
    CHECK(!none.z_twas);
    CHECK(!none.p);

    // Most of the weight sits on a SNP absent from the GWAS.
    f.weights.weights = {10.0, 0.1, 0.1, 0.1};
    std::vector<GwasEntry> partial(f.gwas.entries().begin() + 1, f.gwas.entries().end());
    const auto degraded = run_gene(f.weights, GwasSummary(partial), src);
    CHECK(degraded.status == TestStatus::degraded);
    CHECK(degraded.z_twas.has_value());
    CHECK(degraded.n_snps_used == 3);

    // Ambiguous SNPs are removed.
    auto amb = f;
    std::vector<GwasEntry> entries(f.gwas.entries().begin(), f.gwas.entries().end());
    for (auto& e : entries)
        e.snp.a2 = 'T';
    for (auto& s : amb.weights.snps)
        s.a2 = 'T';
    CHECK(run_gene(amb.weights, GwasSummary(entries), src).status == TestStatus::not_testable);

    // A zero weight vector has no variance.
    auto zero = f;
    std::fill(zero.weights.weights.begin(), zero.weights.weights.end(), 0.0);
    CHECK(run_gene(zero.weights, f.gwas, src).status == TestStatus::not_testable);

    // Weight SNPs missing from the LD source are dropped jointly.
    LdMatrix small = f.ld;
    const std::size_t idx[] = {0, 1};
    small = subset_ld(f.ld, idx);
    f.weights.weights = {1.0, 1.0, 0.1, 0.1};
    const auto r = run_gene(f.weights, f.gwas, MatrixLdSource(small));
    CHECK(r.n_snps_used == 2);
    CHECK(r.status == TestStatus::ok);
}

TEST_CASE("PanelLdSource orients reference LD to the requested alleles")
{
    auto panel = sim::gen_genotypes(300, 4, 0.6, 0.3, 9);
    std::vector<SnpRecord> request = panel.snps;
    const auto direct = estimate_ld(standardize_columns(panel));

    // Reference coded on the other allele for SNP 2.
    auto swapped = panel;
    std::swap(swapped.snps[1].a1, swapped.snps[1].a2);
    swapped.dosages.col(1) = (2.0 - swapped.dosages.col(1).array()).matrix();
    const auto lk = PanelLdSource(swapped).lookup(request);
    REQUIRE(lk.available.size() == 4);
    CHECK((lk.ld.values - direct.values).cwiseAbs().maxCoeff() < 1e-12);

    // Mismatched alleles and unknown SNPs are unavailable.
    auto bad = panel;
    for (char c : {'A', 'C', 'G', 'T'}) {
        if (c != bad.snps[2].a1 && c != bad.snps[2].a2 && !is_strand_ambiguous(bad.snps[2].a1, c)) {
            bad.snps[2].a2 = c;
            break;
        }
    }
    request.push_back({"rs_unknown", 1, 5, 'A', 'C'});
    const auto lk2 = PanelLdSource(bad).lookup(request);
    CHECK(lk2.available == std::vector<std::size_t>{0, 1, 3});
    CHECK(lk2.ld.size() == 3);
}

TEST_CASE("run_panel keeps order and is schedule independent")
{
    std::mt19937_64 gen(35);
    WeightPanel panel;
    std::vector<GwasEntry> entries;
    std::vector<std::string> ids;
    for (int g = 0; g < 100; ++g) {
        auto f = random_fixture(gen, 3 + g % 5);
        f.weights.gene = "G" + std::to_string(g);
        for (auto& s : f.weights.snps) {
            s.id = f.weights.gene + "_" + s.id;
        }
        for (std::size_t j = 0; j < f.weights.snps.size(); ++j)
            entries.push_back({f.weights.snps[j], f.gwas.entries()[j].z});
        panel.push_back(f.weights);
    }
    const GwasSummary gwas(entries);
    std::vector<SnpRecord> all;
    for (const auto& e : entries)
        all.push_back(e.snp);
    LdMatrix ld;
    for (const auto& s : all)
        ld.snp_ids.push_back(s.id);
    ld.values = testing::random_correlation(gen, static_cast<int>(all.size()), 2000);

    AssocOptions one, eight;
    eight.threads = 8;
    CHECK(run_panel({}, gwas, MatrixLdSource(ld), one).empty());
    const auto a = run_panel(panel, gwas, MatrixLdSource(ld), one);
    const auto b = run_panel(panel, gwas, MatrixLdSource(ld), eight);
    REQUIRE(a.size() == 100);
    for (std::size_t g = 0; g < a.size(); ++g) {
        CHECK(a[g].gene == panel[g].gene);
        CHECK(a[g].z_twas == b[g].z_twas);
        CHECK(a[g].status == b[g].status);
    }
}
