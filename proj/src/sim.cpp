#include "twas/sim.hpp"

#include "twas/assoc.hpp"
#include "twas/errors.hpp"
#include "twas/normal.hpp"
#include "twas/parallel.hpp"
#include "twas/rng.hpp"
#include "twas/tsv.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

namespace twas::sim {

namespace {

// Non-ambiguous allele pairs, cycled over SNPs.
constexpr std::array<std::pair<char, char>, 8> kAllelePairs{
    {{'A', 'C'}, {'A', 'G'}, {'C', 'A'}, {'C', 'T'}, {'G', 'A'}, {'G', 'T'}, {'T', 'C'}, {'T', 'G'}}};

std::vector<SnpRecord> make_snps(const std::string& prefix, std::size_t p, int chrom, std::int64_t first_pos)
{
    std::vector<SnpRecord> snps;
    snps.reserve(p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto& [a1, a2] = kAllelePairs[j % kAllelePairs.size()];
        snps.push_back({prefix + std::to_string(j + 1), chrom, first_pos + static_cast<std::int64_t>(j) * 1000, a1, a2});
    }
    return snps;
}

// Column-standardized copy; zero-variance columns become zero.
Eigen::MatrixXd standardized(const Eigen::MatrixXd& x)
{
    Eigen::MatrixXd out(x.rows(), x.cols());
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const double var = (x.col(j).array() - mean).square().sum() / (n - 1.0);
        if (var > 1e-12)
            out.col(j) = (x.col(j).array() - mean) / std::sqrt(var);
        else
            out.col(j).setZero();
    }
    return out;
}

Eigen::VectorXd normal_vector(Eigen::Index n, std::uint64_t seed)
{
    Rng rng(seed);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = rng.normal();
    return v;
}

Eigen::VectorXd standardize_vector(const Eigen::VectorXd& v)
{
    const double n = static_cast<double>(v.size());
    const double mean = v.mean();
    const double var = (v.array() - mean).square().sum() / (n - 1.0);
    if (!(var > 0.0))
        return Eigen::VectorXd::Zero(v.size());
    return (v.array() - mean) / std::sqrt(var);
}

std::vector<std::string> sample_ids(const std::string& prefix, std::size_t n)
{
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        ids.push_back(prefix + std::to_string(i + 1));
    return ids;
}

// Effect vectors implied by the scenario label.
struct Effects {
    Eigen::VectorXd w;        // cis SNP -> expression
    double b = 0.0;           // expression -> trait
    Eigen::VectorXd d_cis;    // cis SNP -> trait
    Eigen::VectorXd d_unlinked;
};

Effects effects_for(const ScenarioSpec& spec)
{
    const auto p = static_cast<Eigen::Index>(spec.p);
    const auto c = static_cast<Eigen::Index>(eqtl_index(spec));
    Effects e;
    e.w = Eigen::VectorXd::Zero(p);
    e.d_cis = Eigen::VectorXd::Zero(p);
    e.d_unlinked = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.n_unlinked));
    const char l = spec.label;
    if (l != 'A' && l != 'C')
        e.w(c) = spec.w_effect;
    if (l == 'E' || l == 'F')
        e.b = spec.b_effect;
    if ((l == 'C' || l == 'D') && spec.n_unlinked > 0)
        e.d_unlinked(0) = spec.d_effect;
    if (l == 'F' || l == 'G')
        e.d_cis(c) = spec.d_effect;
    if (l == 'H')
        e.d_cis(c + 1) = spec.d_effect;
    return e;
}

} // namespace

bool is_null_scenario(char label) noexcept
{
    return label >= 'A' && label <= 'D';
}

ScenarioSpec default_scenario(char label)
{
    ScenarioSpec spec;
    spec.label = label;
    spec.b_effect = (label == 'E' || label == 'F') ? 0.3 : 0.0;
    spec.d_effect = (label == 'A' || label == 'B' || label == 'E') ? 0.0 : 0.3;
    return spec;
}

void validate(const ScenarioSpec& spec)
{
    auto fail = [](const std::string& what) { throw Error(ErrorCode::ParamOutOfRange, what); };
    const char l = spec.label;
    if (l < 'A' || l > 'H')
        fail(std::string("scenario label must be A-H, got '") + l + "'");
    if (spec.n_expr < 2)
        fail("n_expr must be >= 2");
    if (spec.n_gwas < 3)
        fail("n_gwas must be >= 3");
    if (spec.p < 2)
        fail("p must be >= 2");
    if (!(spec.rho > -1.0 && spec.rho < 1.0))
        fail("rho must be in (-1,1)");
    if (!(spec.maf > 0.0 && spec.maf <= 0.5))
        fail("maf must be in (0,0.5]");
    if (!std::isfinite(spec.w_effect) || !std::isfinite(spec.b_effect) || !std::isfinite(spec.d_effect))
        fail("effects must be finite");
    if (is_null_scenario(l) && spec.b_effect != 0.0)
        fail(std::string("null scenario ") + l + " requires b_effect = 0");
    if ((l == 'E' || l == 'F') && spec.b_effect == 0.0)
        fail(std::string("scenario ") + l + " requires b_effect != 0");
    if ((l == 'C' || l == 'D' || l == 'F' || l == 'G' || l == 'H') && spec.d_effect == 0.0)
        fail(std::string("scenario ") + l + " requires d_effect != 0");
    if ((l == 'C' || l == 'D') && spec.n_unlinked == 0)
        fail(std::string("scenario ") + l + " requires n_unlinked >= 1");
    if (l != 'A' && l != 'C' && spec.w_effect == 0.0)
        fail(std::string("scenario ") + l + " requires w_effect != 0");
}

ScenarioSpec parse_scenario_config(std::istream& in, const std::string& source, const ScenarioSpec& defaults)
{
    ScenarioSpec spec = defaults;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto where = source + ":" + std::to_string(line_no);
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::MalformedRecord, where + ": expected key=value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        auto number = [&]() {
            auto v = tsv::parse_double(value);
            if (!v)
                throw Error(ErrorCode::MalformedRecord, where + ": " + key + " is not a number");
            return *v;
        };
        auto count = [&]() {
            auto v = tsv::parse_int(value);
            if (!v || *v < 0)
                throw Error(ErrorCode::MalformedRecord, where + ": " + key + " is not a non-negative integer");
            return static_cast<std::size_t>(*v);
        };

        if (key == "label") {
            if (value.size() != 1)
                throw Error(ErrorCode::ParamOutOfRange, where + ": label must be one letter A-H");
            spec.label = value.front();
        } else if (key == "n_expr") {
            spec.n_expr = count();
        } else if (key == "n_gwas") {
            spec.n_gwas = count();
        } else if (key == "p") {
            spec.p = count();
        } else if (key == "n_unlinked") {
            spec.n_unlinked = count();
        } else if (key == "rho") {
            spec.rho = number();
        } else if (key == "maf") {
            spec.maf = number();
        } else if (key == "w_effect") {
            spec.w_effect = number();
        } else if (key == "b_effect") {
            spec.b_effect = number();
        } else if (key == "d_effect") {
            spec.d_effect = number();
        } else if (key == "seed") {
            spec.seed = count();
        } else {
            throw Error(ErrorCode::ParamOutOfRange, where + ": unknown key '" + key + "'");
        }
    }
    return spec;
}

ScenarioSpec parse_scenario_config(const std::filesystem::path& path, const ScenarioSpec& defaults)
{
    auto in = tsv::open_input(path);
    return parse_scenario_config(in, path.string(), defaults);
}

std::size_t eqtl_index(const ScenarioSpec& spec) noexcept
{
    return spec.p >= 2 ? (spec.p - 1) / 2 : 0;
}

GenotypePanel gen_genotypes(std::size_t n, std::size_t p, double rho, double maf, std::uint64_t seed)
{
    if (n < 1 || p < 1)
        throw Error(ErrorCode::ParamOutOfRange, "genotype panel needs n >= 1 and p >= 1");
    if (!(rho > -1.0 && rho < 1.0))
        throw Error(ErrorCode::ParamOutOfRange, "rho must be in (-1,1), got " + std::to_string(rho));
    if (!(maf > 0.0 && maf <= 0.5))
        throw Error(ErrorCode::ParamOutOfRange, "maf must be in (0,0.5], got " + std::to_string(maf));

    const double cut = normal::quantile(1.0 - maf);
    const double innovation = std::sqrt(1.0 - rho * rho);
    Rng rng(seed);

    GenotypePanel panel;
    panel.sample_ids = sample_ids("S", n);
    panel.snps = make_snps("rs", p, 1, 1000000);
    panel.dosages.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        panel.dosages.row(i).setZero();
        for (int hap = 0; hap < 2; ++hap) {
            double g = rng.normal();
            for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j) {
                if (j > 0)
                    g = rho * g + innovation * rng.normal();
                if (g > cut)
                    panel.dosages(i, j) += 1.0;
            }
        }
    }
    return panel;
}

GwasScan gwas_scan(const GenotypePanel& panel, const Eigen::VectorXd& trait)
{
    const auto n = panel.dosages.rows();
    if (trait.size() != n)
        throw Error(ErrorCode::LengthMismatch, "trait has " + std::to_string(trait.size()) + " values for " +
                                                   std::to_string(n) + " genotyped samples");
    if (n < 3)
        throw Error(ErrorCode::TooFewSamples, "a GWAS scan needs at least 3 samples");

    const Eigen::VectorXd yc = trait.array() - trait.mean();
    const double syy = yc.squaredNorm();
    const double dof = static_cast<double>(n - 2);

    GwasScan scan;
    std::vector<GwasEntry> entries;
    entries.reserve(panel.snps.size());
    for (Eigen::Index j = 0; j < panel.dosages.cols(); ++j) {
        const Eigen::VectorXd xc = panel.dosages.col(j).array() - panel.dosages.col(j).mean();
        const double sxx = xc.squaredNorm();
        double z = 0.0;
        ScanFlag flag = ScanFlag::ok;
        if (!(sxx > 1e-12) || !(syy > 1e-12)) {
            flag = ScanFlag::zero_variance;
        } else {
            const double r = std::clamp(xc.dot(yc) / std::sqrt(sxx * syy), -1.0, 1.0);
            const double one_minus = 1.0 - r * r;
            if (one_minus <= 0.0) {
                z = std::copysign(kMaxAbsZ, r);
                flag = ScanFlag::saturated;
            } else {
                z = r * std::sqrt(dof) / std::sqrt(one_minus);
                if (std::abs(z) > kMaxAbsZ) {
                    z = std::copysign(kMaxAbsZ, z);
                    flag = ScanFlag::saturated;
                }
            }
        }
        entries.push_back({panel.snps[static_cast<std::size_t>(j)], z});
        scan.flags.push_back(flag);
    }
    scan.summary = GwasSummary(std::move(entries));
    return scan;
}

ScenarioData gen_scenario(const ScenarioSpec& spec)
{
    validate(spec);
    const auto effects = effects_for(spec);
    const auto n_expr = static_cast<Eigen::Index>(spec.n_expr);
    const auto n_gwas = static_cast<Eigen::Index>(spec.n_gwas);

    // Expression cohort.
    const auto expr_panel = gen_genotypes(spec.n_expr, spec.p, spec.rho, spec.maf, derive_seed(spec.seed, {1}));
    const Eigen::VectorXd expr = standardized(expr_panel.dosages) * effects.w + normal_vector(n_expr, derive_seed(spec.seed, {4}));

    // Independent GWAS cohort.
    const auto gwas_panel = gen_genotypes(spec.n_gwas, spec.p, spec.rho, spec.maf, derive_seed(spec.seed, {2}));
    const Eigen::MatrixXd xg = standardized(gwas_panel.dosages);
    const Eigen::VectorXd expr_g = standardize_vector(xg * effects.w + normal_vector(n_gwas, derive_seed(spec.seed, {5})));
    Eigen::VectorXd trait = effects.b * expr_g + xg * effects.d_cis + normal_vector(n_gwas, derive_seed(spec.seed, {6}));
    if (spec.n_unlinked > 0) {
        const auto unlinked =
            gen_genotypes(spec.n_gwas, spec.n_unlinked, 0.0, spec.maf, derive_seed(spec.seed, {3}));
        trait += standardized(unlinked.dosages) * effects.d_unlinked;
    }
    trait = standardize_vector(trait);

    ScenarioData data;
    data.expression = make_training_set(expr_panel, expr, "SIM" + std::string(1, spec.label), "simulated", 1,
                                        expr_panel.snps[eqtl_index(spec)].pos);
    data.gwas = gwas_scan(gwas_panel, trait).summary;
    data.gwas_ld = estimate_ld(standardize_columns(gwas_panel));
    data.true_weights = effects.w;
    data.expected_detected = !is_null_scenario(spec.label);
    return data;
}

SuiteReport run_suite(std::span<const ScenarioSpec> specs, const SuiteOptions& options)
{
    if (options.replicates == 0)
        throw Error(ErrorCode::ParamOutOfRange, "the suite needs at least one replicate");
    if (!(options.alpha > 0.0 && options.alpha < 1.0))
        throw Error(ErrorCode::ParamOutOfRange, "alpha must be in (0,1)");
    for (const auto& s : specs)
        validate(s);

    AssocOptions assoc;
    assoc.ld_shrink = options.ld_shrink;

    SuiteReport report;
    for (const auto& base : specs) {
        ScenarioOutcome outcome;
        outcome.label = base.label;
        outcome.replicates = options.replicates;
        outcome.z.assign(options.replicates, std::numeric_limits<double>::quiet_NaN());
        std::vector<char> rejected(options.replicates, 0);

        parallel_for(options.replicates, options.threads, [&](std::size_t r) {
            ScenarioSpec spec = base;
            spec.seed = derive_seed(options.seed, {static_cast<std::uint64_t>(base.label), r});
            try {
                const auto data = gen_scenario(spec);
                const auto& ts = data.expression;

                GeneWeightSet weights;
                weights.gene = ts.gene;
                weights.tissue = ts.tissue;
                weights.chrom = ts.chrom;
                weights.tss = ts.tss;
                if (options.fixed_weights) {
                    // Fixed weights index the full cis block.
                    std::vector<SnpRecord> all;
                    for (const auto& e : data.gwas.entries())
                        all.push_back(e.snp);
                    if (static_cast<std::size_t>(options.fixed_weights->size()) != all.size())
                        throw Error(ErrorCode::DimensionMismatch, "fixed weights do not match the cis block");
                    weights.snps = std::move(all);
                    weights.weights.assign(options.fixed_weights->data(),
                                           options.fixed_weights->data() + options.fixed_weights->size());
                } else {
                    auto grid = default_model_grid(ts);
                    grid.lambdas = default_penalty_grid(ts, options.penalty_grid);
                    const auto cv = cross_validate(ts, options.folds, derive_seed(spec.seed, {7}), grid);
                    const auto selection = select_model(cv, options.min_r2);
                    const auto* chosen = std::get_if<GeneWeightSet>(&selection);
                    if (chosen == nullptr)
                        return;
                    weights = *chosen;
                }

                const auto result = run_gene(weights, data.gwas, MatrixLdSource(data.gwas_ld), assoc);
                if (!result.z_twas)
                    return;
                outcome.z[r] = *result.z_twas;
                rejected[r] = *result.p <= options.alpha ? 1 : 0;
            } catch (const Error&) {
                // A failed replicate counts as untested.
            }
        });

        double sum = 0.0;
        for (std::size_t r = 0; r < options.replicates; ++r) {
            if (std::isnan(outcome.z[r]))
                continue;
            ++outcome.tested;
            sum += outcome.z[r];
            outcome.rejections += static_cast<std::size_t>(rejected[r]);
        }
        outcome.rejection_rate = static_cast<double>(outcome.rejections) / static_cast<double>(options.replicates);
        if (outcome.tested > 0)
            outcome.mean_z = sum / static_cast<double>(outcome.tested);
        if (outcome.tested > 1) {
            double ss = 0.0;
            for (double z : outcome.z) {
                if (!std::isnan(z))
                    ss += (z - outcome.mean_z) * (z - outcome.mean_z);
            }
            outcome.var_z = ss / static_cast<double>(outcome.tested - 1);
        }
        report.scenarios.push_back(std::move(outcome));
    }
    return report;
}

void write_suite_report(const SuiteReport& report, std::ostream& out)
{
    out << "SCENARIO\tREPLICATES\tREJECT_RATE\tMEAN_Z\tVAR_Z\n";
    for (const auto& s : report.scenarios) {
        out << s.label << '\t' << s.replicates << '\t' << tsv::format_general(s.rejection_rate, 6) << '\t'
            << tsv::format_general(s.mean_z, 6) << '\t' << tsv::format_general(s.var_z, 6) << '\n';
    }
}

void write_dataset(const DatasetSpec& spec, const std::filesystem::path& dir)
{
    if (spec.n_genes == 0 || spec.tissues.empty())
        throw Error(ErrorCode::ParamOutOfRange, "dataset needs at least one gene and one tissue");
    if (spec.n_ref < 2)
        throw Error(ErrorCode::ParamOutOfRange, "reference panel needs at least 2 samples");
    constexpr std::string_view kLabels = "ABCDEFGH";
    std::filesystem::create_directories(dir);

    const auto& base = spec.base;
    const auto p = static_cast<Eigen::Index>(base.p);
    const auto n_expr = static_cast<Eigen::Index>(base.n_expr);
    const auto n_gwas = static_cast<Eigen::Index>(base.n_gwas);
    const auto n_ref = static_cast<Eigen::Index>(spec.n_ref);
    const auto genes = static_cast<Eigen::Index>(spec.n_genes);

    GenotypePanel expr_panel, gwas_cis, ref_panel, gwas_unlinked;
    expr_panel.sample_ids = sample_ids("E", base.n_expr);
    gwas_cis.sample_ids = sample_ids("G", base.n_gwas);
    gwas_unlinked.sample_ids = gwas_cis.sample_ids;
    ref_panel.sample_ids = sample_ids("R", spec.n_ref);
    expr_panel.dosages.resize(n_expr, genes * p);
    gwas_cis.dosages.resize(n_gwas, genes * p);
    ref_panel.dosages.resize(n_ref, genes * p);
    const auto u = static_cast<Eigen::Index>(base.n_unlinked);
    gwas_unlinked.dosages.resize(n_gwas, genes * u);

    ExpressionTable expression;
    expression.sample_ids = expr_panel.sample_ids;
    Eigen::VectorXd trait = normal_vector(n_gwas, derive_seed(base.seed, {99}));

    std::ofstream truth = tsv::open_output(dir / "truth.tsv");
    truth << "GENE\tSCENARIO\tCHR\tTSS\tEXPECTED_DETECTED\n";

    for (Eigen::Index g = 0; g < genes; ++g) {
        ScenarioSpec gs = default_scenario(kLabels[static_cast<std::size_t>(g) % kLabels.size()]);
        gs.n_expr = base.n_expr;
        gs.n_gwas = base.n_gwas;
        gs.p = base.p;
        gs.n_unlinked = base.n_unlinked;
        gs.rho = base.rho;
        gs.maf = base.maf;
        gs.seed = derive_seed(base.seed, {static_cast<std::uint64_t>(g)});
        validate(gs);
        const auto effects = effects_for(gs);

        const std::string gene = "GENE" + std::to_string(g + 1);
        const int chrom = 1 + static_cast<int>(g % 22);
        const std::int64_t tss = 1000000 * (g / 22 + 1) + 500000;
        auto snps = make_snps("rs" + std::to_string(g + 1) + "_", base.p, chrom, tss - (p / 2) * 1000);
        auto unlinked_snps = make_snps("ru" + std::to_string(g + 1) + "_", base.n_unlinked, chrom,
                                       tss + 2000000);
        truth << gene << '\t' << gs.label << '\t' << chrom << '\t' << tss << '\t'
              << (is_null_scenario(gs.label) ? 0 : 1) << '\n';

        const auto xe = gen_genotypes(base.n_expr, base.p, base.rho, base.maf, derive_seed(gs.seed, {1})).dosages;
        const auto xg = gen_genotypes(base.n_gwas, base.p, base.rho, base.maf, derive_seed(gs.seed, {2})).dosages;
        const auto xr = gen_genotypes(spec.n_ref, base.p, base.rho, base.maf, derive_seed(gs.seed, {8})).dosages;
        expr_panel.dosages.middleCols(g * p, p) = xe;
        gwas_cis.dosages.middleCols(g * p, p) = xg;
        ref_panel.dosages.middleCols(g * p, p) = xr;
        for (const auto& s : snps) {
            expr_panel.snps.push_back(s);
            gwas_cis.snps.push_back(s);
            ref_panel.snps.push_back(s);
        }

        const Eigen::MatrixXd xes = standardized(xe);
        for (std::size_t t = 0; t < spec.tissues.size(); ++t) {
            ExpressionTrait tr;
            tr.gene = gene;
            tr.tissue = spec.tissues[t];
            tr.chrom = chrom;
            tr.tss = tss;
            tr.values = xes * effects.w + normal_vector(n_expr, derive_seed(gs.seed, {4, t}));
            expression.traits.push_back(std::move(tr));
        }

        const Eigen::MatrixXd xgs = standardized(xg);
        const Eigen::VectorXd expr_g = standardize_vector(xgs * effects.w + normal_vector(n_gwas, derive_seed(gs.seed, {5})));
        trait += effects.b * expr_g + xgs * effects.d_cis;
        if (u > 0) {
            const auto xu = gen_genotypes(base.n_gwas, base.n_unlinked, 0.0, base.maf, derive_seed(gs.seed, {3})).dosages;
            gwas_unlinked.dosages.middleCols(g * u, u) = xu;
            trait += standardized(xu) * effects.d_unlinked;
            for (const auto& s : unlinked_snps)
                gwas_unlinked.snps.push_back(s);
        }
    }

    // GWAS over cis and unlinked SNPs. Every fifth SNP is reported on the
    // opposite allele to exercise harmonization.
    GenotypePanel gwas_all;
    gwas_all.sample_ids = gwas_cis.sample_ids;
    gwas_all.snps = gwas_cis.snps;
    gwas_all.snps.insert(gwas_all.snps.end(), gwas_unlinked.snps.begin(), gwas_unlinked.snps.end());
    gwas_all.dosages.resize(n_gwas, gwas_cis.dosages.cols() + gwas_unlinked.dosages.cols());
    gwas_all.dosages << gwas_cis.dosages, gwas_unlinked.dosages;
    auto scan = gwas_scan(gwas_all, standardize_vector(trait));
    std::vector<GwasEntry> entries(scan.summary.entries().begin(), scan.summary.entries().end());
    for (std::size_t j = 0; j < entries.size(); ++j) {
        if (j % 5 == 3) {
            std::swap(entries[j].snp.a1, entries[j].snp.a2);
            entries[j].z = -entries[j].z;
        }
    }
    write_gwas(GwasSummary(std::move(entries)), dir / "gwas.tsv");

    {
        auto d = tsv::open_output(dir / "expr_genotypes.tsv");
        auto i = tsv::open_output(dir / "expr_snps.tsv");
        write_genotypes(expr_panel, d, i);
    }
    {
        auto d = tsv::open_output(dir / "ref_genotypes.tsv");
        auto i = tsv::open_output(dir / "ref_snps.tsv");
        write_genotypes(ref_panel, d, i);
    }
    {
        auto out = tsv::open_output(dir / "expression.tsv");
        write_expression(expression, out);
    }
}

} // namespace twas::sim
