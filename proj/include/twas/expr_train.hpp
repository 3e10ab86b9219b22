#pragma once

#include "twas/ingest.hpp"
#include "twas/ld.hpp"
#include "twas/weights.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace twas {

// Standardized cis genotypes and expression for one gene in one tissue.
struct TrainingSet {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::string gene;
    std::string tissue;
    int chrom = 0;
    std::int64_t tss = 0;
    std::vector<SnpRecord> snps; // one per column of x
};

// Standardizes both sides (sample variance); zero-variance SNP columns are
// dropped. Throws TooFewSamples when n < 2 and ValueOutOfRange when the
// expression is constant.
TrainingSet make_training_set(const GenotypePanel& cis_panel, const Eigen::VectorXd& expression, std::string gene,
                              std::string tissue, int chrom, std::int64_t tss);

// Throws ValueOutOfRange, EmptyPanel or TooFewSamples (n < 2k).
void validate_training_set(const TrainingSet& ts, int folds);

// Sufficient statistics of a least-squares problem, scaled by 1/n:
// gram = X'X/n, xty = X'y/n, yty = y'y/n.
struct GramSystem {
    Eigen::MatrixXd gram;
    Eigen::VectorXd xty;
    double yty = 0.0;
    double n = 0.0;

    static GramSystem from_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
};

// (1/2n)||y - X b||^2 + lambda (mix ||b||_1 + (1-mix)/2 ||b||^2)
double elastic_net_objective(const GramSystem& sys, const Eigen::VectorXd& beta, double lambda, double mix);

// Largest violation of the elastic-net optimality conditions at beta.
double kkt_violation(const GramSystem& sys, const Eigen::VectorXd& beta, double lambda, double mix);

struct ModelFit {
    ModelKind kind = ModelKind::top1;
    Eigen::VectorXd coefficients;
    double penalty = 0.0;
    double mix = 0.0;
    double cv_r2 = 0.0;
};

// Covariance between expression and each standardized SNP.
struct EqtlCovariances {
    Eigen::VectorXd values;
};

EqtlCovariances eqtl_covariances(const TrainingSet& ts);

// Single SNP with the largest |corr(x_j, y)|; lowest index wins ties.
ModelFit fit_top1(const TrainingSet& ts);
ModelFit fit_top1(const GramSystem& sys);

// Solves (X'X/n + lambda I) b = X'y/n. Throws LambdaOutOfRange unless lambda > 0.
ModelFit fit_ridge(const TrainingSet& ts, double lambda);
ModelFit fit_ridge(const GramSystem& sys, double lambda);

struct ElasticNetOptions {
    int max_sweeps = 10000;
    double tolerance = 1e-7;
    std::optional<Eigen::VectorXd> warm_start;
    bool record_objective = false;
};

struct ElasticNetSolution {
    Eigen::VectorXd beta;
    int sweeps = 0;
    double objective = 0.0;
    double kkt = 0.0;
    std::vector<double> objective_trace; // after each full sweep, if recorded
};

// Cyclic coordinate descent. Converged once a full sweep moves no
// coefficient by more than `tolerance` and the optimality conditions hold to
// the same tolerance. Throws NoConvergence after max_sweeps.
ElasticNetSolution solve_elastic_net(const GramSystem& sys, double lambda, double mix,
                                     const ElasticNetOptions& options = {});

// mix = 1 is the lasso.
ModelFit fit_elastic_net(const TrainingSet& ts, double lambda, double mix, const ElasticNetOptions& options = {});

// W = Sigma_ss^{-1} Sigma_es. Propagates SingularMatrix.
ModelFit marginal_ld_weights(const EqtlCovariances& cov, const LdMatrix& ld);

// Candidate models for cross-validation.
struct ModelGrid {
    std::vector<ModelKind> kinds;
    std::vector<double> lambdas; // descending
    double enet_mix = 0.5;
    double ld_shrink = 0.1;
};

// `count` log-spaced values from max_j |x_j'y|/n down to that times `ratio`.
std::vector<double> default_penalty_grid(const TrainingSet& ts, int count = 20, double ratio = 1e-3);
ModelGrid default_model_grid(const TrainingSet& ts);

// Individual i goes to fold (pi(i) mod k) under a seeded permutation pi.
std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed);

struct CvEntry {
    ModelKind kind = ModelKind::top1;
    double cv_r2 = 0.0;
    ModelFit fit; // refit on all samples with the inner-selected penalty
};

struct CvReport {
    std::string gene;
    std::string tissue;
    int chrom = 0;
    std::int64_t tss = 0;
    std::vector<SnpRecord> snps;
    std::vector<CvEntry> entries;
};

// k-fold cross-validated r^2 per model; penalties are picked by an inner
// k-fold search inside each training fold. Throws TooFewSamples (n < 2k).
CvReport cross_validate(const TrainingSet& ts, int k, std::uint64_t seed, const ModelGrid& grid);

struct Skipped {
    std::string gene;
    std::string tissue;
    std::string reason;
};

using Selection = std::variant<GeneWeightSet, Skipped>;

// Highest cv_r2 among models with a nonzero fit; ties go to
// elastic_net > lasso > ridge > marginal_ld > top1. Skipped when the best
// cv_r2 <= min_r2.
Selection select_model(const CvReport& report, double min_r2);

// ---- gene-level training driver ----

// One expression trait: a gene in a tissue, with values per sample.
struct ExpressionTrait {
    std::string gene;
    std::string tissue;
    int chrom = 0;
    std::int64_t tss = 0;
    Eigen::VectorXd values;
};

struct ExpressionTable {
    std::vector<std::string> sample_ids;
    std::vector<ExpressionTrait> traits;
};

// Header: GENE TISSUE CHR TSS <IID...>; one row per gene-tissue pair.
ExpressionTable parse_expression(std::istream& in, const std::string& source);
ExpressionTable parse_expression(const std::filesystem::path& path);
void write_expression(const ExpressionTable& table, std::ostream& out);

struct TrainOptions {
    int folds = 5;
    double min_r2 = 0.01;
    std::int64_t cis_window = 500000;
    std::uint64_t seed = 1;
    double enet_mix = 0.5;
    double ld_shrink = 0.1;
    int threads = 1;
};

struct TrainOutcome {
    CvReport report;
    Selection selection;
};

// Slices the cis window, standardizes and cross-validates. The CV seed is
// derived from (options.seed, gene, tissue). Never throws for data problems
// of a single gene; those come back as Skipped.
TrainOutcome train_gene(const GenotypePanel& panel, const ExpressionTrait& trait, const TrainOptions& options);

// Matches expression samples to genotype rows by IID; throws IdMismatch for
// expression samples without genotypes.
std::vector<TrainOutcome> train_panel(const GenotypePanel& panel, const ExpressionTable& expression,
                                      const TrainOptions& options);

// GENE TISSUE MODEL LAMBDA CVR2 SELECTED
void write_training_log(const std::vector<TrainOutcome>& outcomes, std::ostream& out);

} // namespace twas
