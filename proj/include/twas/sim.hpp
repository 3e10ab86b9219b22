#pragma once

#include "twas/expr_train.hpp"
#include "twas/ingest.hpp"
#include "twas/ld.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace twas::sim {

// Parameters of one causal scenario. The label decides which effects are
// active:
//   A  nothing                       E  w, b
//   B  w                             F  w, b, d on the eQTL SNP
//   C  d on an unlinked block        G  w, d on the eQTL SNP (pleiotropy)
//   D  w, d on an unlinked block     H  w, d on its LD neighbour (linkage)
// A-D are null for TWAS; E-H are expected to be detected.
struct ScenarioSpec {
    char label = 'A';
    std::size_t n_expr = 500;
    std::size_t n_gwas = 2000;
    std::size_t p = 20;          // cis SNPs
    std::size_t n_unlinked = 5;  // independent SNPs carrying d in C and D
    double rho = 0.5;            // AR(1) latent correlation between adjacent SNPs
    double maf = 0.3;
    double w_effect = 0.5;       // SNP -> expression, per standardized genotype
    double b_effect = 0.0;       // expression -> trait
    double d_effect = 0.0;       // SNP -> trait
    std::uint64_t seed = 1;
};

bool is_null_scenario(char label) noexcept;

// The frozen strong-effect parameters used for power and calibration runs.
ScenarioSpec default_scenario(char label);

// Throws ParamOutOfRange.
void validate(const ScenarioSpec& spec);

// Flat key=value file; '#' starts a comment. Unknown keys are errors.
ScenarioSpec parse_scenario_config(std::istream& in, const std::string& source,
                                   const ScenarioSpec& defaults = ScenarioSpec{});
ScenarioSpec parse_scenario_config(const std::filesystem::path& path, const ScenarioSpec& defaults = ScenarioSpec{});

// Index of the causal eQTL SNP within the cis block.
std::size_t eqtl_index(const ScenarioSpec& spec) noexcept;

// Dosages are sums of two haplotypes; a haplotype carries the minor allele
// where an AR(1) Gaussian vector exceeds the upper maf quantile.
GenotypePanel gen_genotypes(std::size_t n, std::size_t p, double rho, double maf, std::uint64_t seed);

enum class ScanFlag { ok, zero_variance, saturated };

struct GwasScan {
    GwasSummary summary;
    std::vector<ScanFlag> flags;
};

inline constexpr double kMaxAbsZ = 40.0;

// z_j = r_j sqrt(n-2) / sqrt(1-r_j^2), clamped to |z| <= 40.
GwasScan gwas_scan(const GenotypePanel& panel, const Eigen::VectorXd& trait);

struct ScenarioData {
    TrainingSet expression;     // expression cohort, standardized
    GwasSummary gwas;           // cis SNPs of the GWAS cohort
    LdMatrix gwas_ld;           // in-sample LD of the GWAS cohort (cis SNPs)
    Eigen::VectorXd true_weights;
    bool expected_detected = false;
};

ScenarioData gen_scenario(const ScenarioSpec& spec);

struct SuiteOptions {
    std::size_t replicates = 200;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    int threads = 1;
    int folds = 5;
    double min_r2 = -1.0;     // every replicate is tested by default
    double ld_shrink = 0.0;   // exact in-sample LD
    int penalty_grid = 20;
    // When set, replaces trained weights (null calibration of the statistic).
    std::optional<Eigen::VectorXd> fixed_weights;
};

struct ScenarioOutcome {
    char label = 'A';
    std::size_t replicates = 0;
    std::size_t tested = 0;
    std::size_t rejections = 0;
    double rejection_rate = 0.0; // over all replicates; untested count as accepted
    double mean_z = 0.0;         // over tested replicates
    double var_z = 0.0;
    std::vector<double> z;       // per replicate, NaN when untested
};

struct SuiteReport {
    std::vector<ScenarioOutcome> scenarios;
};

// Replicate r of a scenario uses seed derive_seed(options.seed, {label, r}),
// so output is identical for any thread count. Throws ParamOutOfRange for
// zero replicates.
SuiteReport run_suite(std::span<const ScenarioSpec> specs, const SuiteOptions& options);

// SCENARIO REPLICATES REJECT_RATE MEAN_Z VAR_Z
void write_suite_report(const SuiteReport& report, std::ostream& out);

// Multi-gene dataset for the command-line pipeline.
struct DatasetSpec {
    std::size_t n_genes = 16;
    std::size_t n_ref = 1000;
    std::vector<std::string> tissues{"Adipose_sim", "Blood_sim"};
    ScenarioSpec base = default_scenario('E');
};

// Writes expr_genotypes.tsv, expr_snps.tsv, expression.tsv, gwas.tsv,
// ref_genotypes.tsv, ref_snps.tsv and truth.tsv into `dir`. Gene g follows
// scenario "ABCDEFGH"[g % 8].
void write_dataset(const DatasetSpec& spec, const std::filesystem::path& dir);

} // namespace twas::sim
