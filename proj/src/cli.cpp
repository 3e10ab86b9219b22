#include "twas/cli.hpp"

#include "twas/assoc.hpp"
#include "twas/errors.hpp"
#include "twas/expr_train.hpp"
#include "twas/ingest.hpp"
#include "twas/ld.hpp"
#include "twas/mtp.hpp"
#include "twas/report.hpp"
#include "twas/sim.hpp"
#include "twas/tsv.hpp"
#include "twas/weights.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <ostream>

namespace twas::cli {

namespace {

struct Common {
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out = "-";
};

void add_common(CLI::App& sub, Common& common)
{
    sub.add_option("--seed", common.seed, "Random seed")->envname("TWAS_SEED")->capture_default_str();
    sub.add_option("--threads", common.threads, "Worker threads")
        ->envname("TWAS_THREADS")
        ->check(CLI::Range(1, 1024))
        ->capture_default_str();
    sub.add_option("--out", common.out, "Output path, '-' for stdout")->capture_default_str();
}

// Writes through `fn` to stdout or to a file.
void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& fn)
{
    if (path == "-") {
        fn(out);
        out.flush();
        return;
    }
    auto file = tsv::open_output(path);
    fn(file);
    file.flush();
    if (!file)
        throw Error(ErrorCode::IoError, "failed writing " + path);
}

std::optional<std::size_t> parse_m(const std::string& text)
{
    if (text == "auto")
        return std::nullopt;
    const auto v = tsv::parse_int(text);
    if (!v || *v < 1)
        throw Error(ErrorCode::ParamOutOfRange, "--m must be 'auto' or a positive integer, got '" + text + "'");
    return static_cast<std::size_t>(*v);
}

const auto kMValidator = CLI::Validator(
    [](std::string& s) -> std::string {
        if (s == "auto")
            return {};
        const auto v = tsv::parse_int(s);
        return (v && *v >= 1) ? std::string() : "must be 'auto' or a positive integer";
    },
    "auto|INT");

} // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Gene-level association from GWAS summary statistics and expression weights", "twas"};
    app.require_subcommand(1);
    app.set_config("--run-config", "", "Optional config file (flags take precedence)");

    Common common;

    // compute-ld
    auto* ld_cmd = app.add_subcommand("compute-ld", "Estimate an LD matrix from reference genotypes");
    std::string ld_geno, ld_info;
    double ld_cmd_shrink = 0.0;
    ld_cmd->add_option("--genotypes", ld_geno, "Genotype dosage TSV")->required()->check(CLI::ExistingFile);
    ld_cmd->add_option("--snp-info", ld_info, "SNP info TSV")->required()->check(CLI::ExistingFile);
    ld_cmd->add_option("--ld-shrink", ld_cmd_shrink, "Shrinkage toward the identity")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    add_common(*ld_cmd, common);

    // train
    auto* train_cmd = app.add_subcommand("train", "Fit expression weights by cross-validated model selection");
    std::string tr_geno, tr_info, tr_expr, tr_log;
    TrainOptions train;
    train_cmd->add_option("--genotypes", tr_geno, "Genotype dosage TSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--snp-info", tr_info, "SNP info TSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--expression", tr_expr, "Expression TSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--folds", train.folds, "Cross-validation folds")
        ->check(CLI::Range(2, 1000))
        ->capture_default_str();
    train_cmd->add_option("--min-r2", train.min_r2, "Minimum cross-validated R2 to keep a gene")->capture_default_str();
    train_cmd->add_option("--cis-window", train.cis_window, "cis window half-width in bp")
        ->check(CLI::Range(std::int64_t{0}, std::int64_t{1} << 40))
        ->capture_default_str();
    train_cmd->add_option("--enet-mix", train.enet_mix, "Elastic-net L1 fraction")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    train_cmd->add_option("--ld-shrink", train.ld_shrink, "Shrinkage for marginal-LD weights")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    train_cmd->add_option("--log", tr_log, "Training log TSV");
    add_common(*train_cmd, common);

    // assoc
    auto* assoc_cmd = app.add_subcommand("assoc", "Compute gene-level association statistics");
    std::string as_gwas, as_weights, as_ld, as_ld_snps;
    AssocOptions assoc;
    assoc_cmd->add_option("--gwas", as_gwas, "GWAS summary TSV")->required()->check(CLI::ExistingFile);
    assoc_cmd->add_option("--weights", as_weights, "Weight panel TSV")->required()->check(CLI::ExistingFile);
    assoc_cmd->add_option("--ld", as_ld, "LD matrix TSV, or reference genotypes with --ld-snps")
        ->required()
        ->check(CLI::ExistingFile);
    assoc_cmd->add_option("--ld-snps", as_ld_snps, "SNP info for reference genotypes given in --ld")
        ->check(CLI::ExistingFile);
    assoc_cmd->add_option("--ld-shrink", assoc.ld_shrink, "LD shrinkage toward the identity")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    add_common(*assoc_cmd, common);

    // adjust
    auto* adjust_cmd = app.add_subcommand("adjust", "Multiple-testing adjustment of a results table");
    std::string ad_results, ad_method = "both", ad_m = "auto";
    double ad_alpha = 0.05;
    bool ad_per_tissue = false;
    adjust_cmd->add_option("--results", ad_results, "Results TSV")->required()->check(CLI::ExistingFile);
    adjust_cmd->add_option("--method", ad_method, "bonferroni, bh or both")
        ->check(CLI::IsMember({"bonferroni", "bh", "both"}))
        ->capture_default_str();
    adjust_cmd->add_option("--alpha", ad_alpha, "Family-wise or FDR level")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    adjust_cmd->add_option("--m", ad_m, "Number of tests: auto or an integer")->check(kMValidator)->capture_default_str();
    adjust_cmd->add_flag("--per-tissue", ad_per_tissue, "Adjust within each tissue separately");
    add_common(*adjust_cmd, common);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Run the scenario suite or write a synthetic dataset");
    std::string sim_config, sim_scenarios, sim_dataset;
    std::size_t sim_replicates = 200, sim_genes = 16;
    double sim_alpha = 0.05;
    sim_cmd->add_option("--config", sim_config, "Scenario key=value file")->check(CLI::ExistingFile);
    sim_cmd->add_option("--scenarios", sim_scenarios, "Scenario letters, e.g. ABEH (default A-H)");
    sim_cmd->add_option("--replicates", sim_replicates, "Replicates per scenario")
        ->check(CLI::Range(std::size_t{1}, std::size_t{10000000}))
        ->capture_default_str();
    sim_cmd->add_option("--alpha", sim_alpha, "Rejection level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    sim_cmd->add_option("--dataset-out", sim_dataset, "Write a multi-gene dataset to this directory instead");
    sim_cmd->add_option("--genes", sim_genes, "Genes in the dataset")
        ->check(CLI::Range(std::size_t{1}, std::size_t{100000}))
        ->capture_default_str();
    add_common(*sim_cmd, common);

    // report
    auto* report_cmd = app.add_subcommand("report", "Sorted results table and position plot data");
    std::string rp_results, rp_plot, rp_svg, rp_m = "auto";
    double rp_alpha = 0.05;
    report_cmd->add_option("--results", rp_results, "Results TSV")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--plot-data", rp_plot, "Position plot TSV");
    report_cmd->add_option("--svg", rp_svg, "Static SVG scatter");
    report_cmd->add_option("--alpha", rp_alpha, "Level of the threshold line")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    report_cmd->add_option("--m", rp_m, "Tests behind the threshold line: auto or an integer")
        ->check(kMValidator)
        ->capture_default_str();
    add_common(*report_cmd, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (ld_cmd->parsed()) {
            const auto panel = parse_genotypes(ld_geno, ld_info);
            const auto std_geno = standardize_columns(panel);
            for (const auto& id : std_geno.excluded_ids)
                err << "warning: " << id << " has no variance and is left out of the LD matrix\n";
            const auto ld = shrink_ld(estimate_ld(std_geno), ld_cmd_shrink);
            emit(common.out, out, [&](std::ostream& o) { write_ld_matrix(ld, o); });
        } else if (train_cmd->parsed()) {
            train.seed = common.seed;
            train.threads = common.threads;
            const auto panel = parse_genotypes(tr_geno, tr_info);
            const auto expression = parse_expression(tr_expr);
            const auto outcomes = train_panel(panel, expression, train);
            WeightPanel weights;
            std::size_t skipped = 0;
            for (const auto& o : outcomes) {
                if (const auto* w = std::get_if<GeneWeightSet>(&o.selection))
                    weights.push_back(*w);
                else
                    ++skipped;
            }
            emit(common.out, out, [&](std::ostream& o) { write_weight_panel(weights, o); });
            if (!tr_log.empty())
                emit(tr_log, out, [&](std::ostream& o) { write_training_log(outcomes, o); });
            err << "trained " << weights.size() << " of " << outcomes.size() << " gene-tissue pairs; " << skipped
                << " skipped\n";
        } else if (assoc_cmd->parsed()) {
            assoc.threads = common.threads;
            const auto gwas = parse_gwas(as_gwas);
            const auto weights = parse_weight_panel(as_weights);
            std::unique_ptr<LdSource> source;
            if (!as_ld_snps.empty()) {
                source = std::make_unique<PanelLdSource>(parse_genotypes(as_ld, as_ld_snps));
            } else {
                auto ld = parse_ld_matrix(as_ld);
                source = std::make_unique<MatrixLdSource>(std::move(ld));
            }
            const auto results = run_panel(weights, gwas, *source, assoc);
            emit(common.out, out, [&](std::ostream& o) { write_results_table(results, o); });
        } else if (adjust_cmd->parsed()) {
            auto rows = parse_results_table(ad_results);
            const MMode mode{parse_m(ad_m)};
            if (ad_method == "bonferroni" || ad_method == "both")
                rows = adjust_per_tissue(rows, AdjustMethod::bonferroni, ad_alpha, mode, ad_per_tissue);
            if (ad_method == "bh" || ad_method == "both")
                rows = adjust_per_tissue(rows, AdjustMethod::bh, ad_alpha, mode, ad_per_tissue);
            emit(common.out, out, [&](std::ostream& o) { write_results_table(rows, o, true); });
        } else if (sim_cmd->parsed()) {
            std::optional<sim::ScenarioSpec> configured;
            if (!sim_config.empty())
                configured = sim::parse_scenario_config(std::filesystem::path(sim_config));
            std::string labels = sim_scenarios;
            if (labels.empty())
                labels = configured ? std::string(1, configured->label) : "ABCDEFGH";

            if (!sim_dataset.empty()) {
                sim::DatasetSpec spec;
                spec.n_genes = sim_genes;
                if (configured)
                    spec.base = *configured;
                spec.base.seed = common.seed;
                sim::write_dataset(spec, sim_dataset);
                err << "wrote dataset with " << sim_genes << " genes to " << sim_dataset << "\n";
            } else {
                std::vector<sim::ScenarioSpec> specs;
                for (char label : labels) {
                    if (!sim_config.empty()) {
                        auto s = sim::parse_scenario_config(std::filesystem::path(sim_config),
                                                            sim::default_scenario(label));
                        s.label = label;
                        specs.push_back(s);
                    } else {
                        specs.push_back(sim::default_scenario(label));
                    }
                }
                sim::SuiteOptions options;
                options.replicates = sim_replicates;
                options.alpha = sim_alpha;
                options.seed = common.seed;
                options.threads = common.threads;
                const auto report = sim::run_suite(specs, options);
                emit(common.out, out, [&](std::ostream& o) { sim::write_suite_report(report, o); });
            }
        } else if (report_cmd->parsed()) {
            const auto rows = parse_results_table(rp_results);
            const bool adjusted = std::any_of(rows.begin(), rows.end(), [](const AnnotatedResult& r) {
                return r.annotation.m_used.has_value();
            });
            emit(common.out, out, [&](std::ostream& o) { write_results_table(rows, o, adjusted); });

            std::size_t testable = 0, m_auto = 0;
            for (const auto& r : rows) {
                if (r.result.p)
                    ++testable;
                m_auto = std::max(m_auto, r.annotation.m_used.value_or(0));
            }
            if (!rp_plot.empty())
                emit(rp_plot, out, [&](std::ostream& o) { write_position_plot_data(rows, o); });
            if (!rp_svg.empty()) {
                const std::size_t m = parse_m(rp_m).value_or(m_auto > 0 ? m_auto : std::max<std::size_t>(testable, 1));
                const double line = bonferroni_line(rp_alpha, m);
                emit(rp_svg, out, [&](std::ostream& o) { write_position_svg(rows, line, o); });
            }
            err << rows.size() << " results, " << testable << " testable, " << unique_gene_count(rows, false)
                << " genes, " << unique_gene_count(rows, true) << " genes rejected\n";
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace twas::cli
