#include "twas/expr_train.hpp"

#include "twas/errors.hpp"
#include "twas/parallel.hpp"
#include "twas/rng.hpp"
#include "twas/tsv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace twas {

namespace {

double soft_threshold(double value, double threshold)
{
    if (value > threshold)
        return value - threshold;
    if (value < -threshold)
        return value + threshold;
    return 0.0;
}

// Rank in the fixed tie order; lower wins.
int tie_rank(ModelKind kind)
{
    switch (kind) {
    case ModelKind::elastic_net: return 0;
    case ModelKind::lasso: return 1;
    case ModelKind::ridge: return 2;
    case ModelKind::marginal_ld: return 3;
    case ModelKind::top1: return 4;
    }
    return 5;
}

} // namespace

TrainingSet make_training_set(const GenotypePanel& cis_panel, const Eigen::VectorXd& expression, std::string gene,
                              std::string tissue, int chrom, std::int64_t tss)
{
    if (static_cast<std::size_t>(expression.size()) != cis_panel.sample_count())
        throw Error(ErrorCode::LengthMismatch, gene + ": expression has " + std::to_string(expression.size()) +
                                                   " samples, genotypes " + std::to_string(cis_panel.sample_count()));
    const auto std_geno = standardize_columns(cis_panel);

    const double n = static_cast<double>(expression.size());
    const double mean = expression.mean();
    const double var = (expression.array() - mean).square().sum() / (n - 1.0);
    if (!(var > 1e-12))
        throw Error(ErrorCode::ValueOutOfRange, gene + "/" + tissue + ": expression is constant");

    TrainingSet ts;
    ts.x = std_geno.matrix;
    ts.y = (expression.array() - mean) / std::sqrt(var);
    ts.gene = std::move(gene);
    ts.tissue = std::move(tissue);
    ts.chrom = chrom;
    ts.tss = tss;
    for (auto j : std_geno.kept_columns)
        ts.snps.push_back(cis_panel.snps[j]);
    return ts;
}

void validate_training_set(const TrainingSet& ts, int folds)
{
    const auto n = ts.x.rows();
    if (ts.x.cols() < 1)
        throw Error(ErrorCode::EmptyPanel, ts.gene + ": no cis SNPs");
    if (ts.y.size() != n)
        throw Error(ErrorCode::LengthMismatch, ts.gene + ": expression and genotype sample counts differ");
    if (folds < 2)
        throw Error(ErrorCode::ParamOutOfRange, "cross-validation needs k >= 2 folds");
    if (n < 2 * folds)
        throw Error(ErrorCode::TooFewSamples, ts.gene + ": " + std::to_string(n) + " samples for " +
                                                  std::to_string(folds) + "-fold cross-validation");
    const double mean = ts.y.mean();
    const double var = (ts.y.array() - mean).square().sum() / static_cast<double>(n - 1);
    if (std::abs(mean) > 1e-9 || std::abs(var - 1.0) > 1e-9)
        throw Error(ErrorCode::ValueOutOfRange, ts.gene + ": expression is not standardized");
}

GramSystem GramSystem::from_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
{
    GramSystem sys;
    sys.n = static_cast<double>(x.rows());
    sys.gram = x.transpose() * x / sys.n;
    sys.gram = 0.5 * (sys.gram + sys.gram.transpose()).eval();
    sys.xty = x.transpose() * y / sys.n;
    sys.yty = y.squaredNorm() / sys.n;
    return sys;
}

double elastic_net_objective(const GramSystem& sys, const Eigen::VectorXd& beta, double lambda, double mix)
{
    const double loss = 0.5 * (sys.yty - 2.0 * sys.xty.dot(beta) + beta.dot(sys.gram * beta));
    const double penalty = lambda * (mix * beta.lpNorm<1>() + 0.5 * (1.0 - mix) * beta.squaredNorm());
    return loss + penalty;
}

namespace {

double kkt_from_product(const GramSystem& sys, const Eigen::VectorXd& beta, const Eigen::VectorXd& gram_beta,
                        double lambda, double mix)
{
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        // x_j'r/n - (1-mix) lambda b_j
        const double g = sys.xty(j) - gram_beta(j) - (1.0 - mix) * lambda * beta(j);
        const double v = beta(j) == 0.0 ? std::max(0.0, std::abs(g) - mix * lambda)
                                        : std::abs(g - mix * lambda * (beta(j) > 0.0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

} // namespace

double kkt_violation(const GramSystem& sys, const Eigen::VectorXd& beta, double lambda, double mix)
{
    return kkt_from_product(sys, beta, sys.gram * beta, lambda, mix);
}

ModelFit fit_top1(const GramSystem& sys)
{
    const auto p = sys.xty.size();
    Eigen::Index best = -1;
    double best_score = -1.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!(sys.gram(j, j) > 0.0))
            continue;
        const double score = std::abs(sys.xty(j)) / std::sqrt(sys.gram(j, j));
        if (score > best_score) {
            best_score = score;
            best = j;
        }
    }
    ModelFit fit;
    fit.kind = ModelKind::top1;
    fit.coefficients = Eigen::VectorXd::Zero(p);
    if (best >= 0)
        fit.coefficients(best) = sys.xty(best) / sys.gram(best, best);
    return fit;
}

ModelFit fit_top1(const TrainingSet& ts)
{
    return fit_top1(GramSystem::from_data(ts.x, ts.y));
}

ModelFit fit_ridge(const GramSystem& sys, double lambda)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw Error(ErrorCode::LambdaOutOfRange, "ridge penalty must be positive, got " + std::to_string(lambda));
    Eigen::MatrixXd a = sys.gram;
    a.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    ModelFit fit;
    fit.kind = ModelKind::ridge;
    fit.penalty = lambda;
    fit.coefficients = llt.solve(sys.xty);
    fit.coefficients += llt.solve(sys.xty - a * fit.coefficients);
    return fit;
}

ModelFit fit_ridge(const TrainingSet& ts, double lambda)
{
    return fit_ridge(GramSystem::from_data(ts.x, ts.y), lambda);
}

ElasticNetSolution solve_elastic_net(const GramSystem& sys, double lambda, double mix,
                                     const ElasticNetOptions& options)
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw Error(ErrorCode::LambdaOutOfRange, "elastic-net penalty must be >= 0, got " + std::to_string(lambda));
    if (!(mix >= 0.0 && mix <= 1.0))
        throw Error(ErrorCode::ParamOutOfRange, "elastic-net mix must be in [0,1], got " + std::to_string(mix));

    const auto p = sys.xty.size();
    ElasticNetSolution sol;
    sol.beta = options.warm_start ? *options.warm_start : Eigen::VectorXd::Zero(p);
    if (sol.beta.size() != p)
        throw Error(ErrorCode::DimensionMismatch, "warm start length differs from predictor count");

    const double l1 = mix * lambda;
    const double l2 = (1.0 - mix) * lambda;
    Eigen::VectorXd gram_beta = sys.gram * sol.beta;

    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double denom = sys.gram(j, j) + l2;
            const double old = sol.beta(j);
            double updated = 0.0;
            if (denom > 0.0) {
                const double partial = sys.xty(j) - gram_beta(j) + sys.gram(j, j) * old;
                updated = soft_threshold(partial, l1) / denom;
            }
            const double delta = updated - old;
            if (delta != 0.0) {
                sol.beta(j) = updated;
                gram_beta.noalias() += sys.gram.col(j) * delta;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        sol.sweeps = sweep;
        if (options.record_objective)
            sol.objective_trace.push_back(elastic_net_objective(sys, sol.beta, lambda, mix));

        if (max_change <= options.tolerance) {
            // Refresh the running product before judging optimality.
            gram_beta = sys.gram * sol.beta;
            sol.kkt = kkt_from_product(sys, sol.beta, gram_beta, lambda, mix);
            if (sol.kkt <= options.tolerance) {
                sol.objective = elastic_net_objective(sys, sol.beta, lambda, mix);
                return sol;
            }
        }
    }
    sol.kkt = kkt_violation(sys, sol.beta, lambda, mix);
    throw Error(ErrorCode::NoConvergence, "coordinate descent did not converge in " +
                                              std::to_string(options.max_sweeps) + " sweeps (KKT gap " +
                                              std::to_string(sol.kkt) + ")");
}

ModelFit fit_elastic_net(const TrainingSet& ts, double lambda, double mix, const ElasticNetOptions& options)
{
    auto sol = solve_elastic_net(GramSystem::from_data(ts.x, ts.y), lambda, mix, options);
    ModelFit fit;
    fit.kind = mix == 1.0 ? ModelKind::lasso : ModelKind::elastic_net;
    fit.coefficients = std::move(sol.beta);
    fit.penalty = lambda;
    fit.mix = mix;
    return fit;
}

EqtlCovariances eqtl_covariances(const TrainingSet& ts)
{
    const double denom = static_cast<double>(ts.x.rows() - 1);
    return {ts.x.transpose() * ts.y / denom};
}

ModelFit marginal_ld_weights(const EqtlCovariances& cov, const LdMatrix& ld)
{
    ModelFit fit;
    fit.kind = ModelKind::marginal_ld;
    fit.coefficients = ld_solve(ld, cov.values);
    fit.penalty = ld.shrinkage;
    return fit;
}

std::vector<double> default_penalty_grid(const TrainingSet& ts, int count, double ratio)
{
    const double n = static_cast<double>(ts.x.rows());
    double lambda_max = (ts.x.transpose() * ts.y).cwiseAbs().maxCoeff() / n;
    if (!(lambda_max > 0.0))
        lambda_max = 1.0;
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        grid.push_back(lambda_max * std::pow(ratio, t));
    }
    return grid;
}

ModelGrid default_model_grid(const TrainingSet& ts)
{
    ModelGrid grid;
    grid.kinds = {ModelKind::top1, ModelKind::ridge, ModelKind::lasso, ModelKind::elastic_net,
                  ModelKind::marginal_ld};
    grid.lambdas = default_penalty_grid(ts);
    return grid;
}

std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed)
{
    if (k < 2)
        throw Error(ErrorCode::ParamOutOfRange, "fold count must be >= 2");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    std::vector<int> folds(n);
    for (std::size_t i = 0; i < n; ++i)
        folds[i] = static_cast<int>(perm[i] % static_cast<std::size_t>(k));
    return folds;
}

namespace {

// Unnormalized sums over a set of rows.
struct RowSums {
    Eigen::MatrixXd xtx;
    Eigen::VectorXd xty;
    double yty = 0.0;
    double n = 0.0;

    static RowSums over(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows)
    {
        Eigen::MatrixXd xs(static_cast<Eigen::Index>(rows.size()), x.cols());
        Eigen::VectorXd ys(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            xs.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
            ys(static_cast<Eigen::Index>(r)) = y(rows[r]);
        }
        RowSums s;
        s.xtx = xs.transpose() * xs;
        s.xty = xs.transpose() * ys;
        s.yty = ys.squaredNorm();
        s.n = static_cast<double>(rows.size());
        return s;
    }

    RowSums minus(const RowSums& other) const
    {
        return {xtx - other.xtx, xty - other.xty, yty - other.yty, n - other.n};
    }

    GramSystem normalized() const
    {
        GramSystem sys;
        sys.n = n;
        sys.gram = 0.5 * (xtx + xtx.transpose()) / n;
        sys.xty = xty / n;
        sys.yty = yty / n;
        return sys;
    }
};

// A training sample (all of it, or an outer training fold) with its inner
// folds prepared for penalty selection.
struct TrainingSplit {
    GramSystem full;
    std::vector<GramSystem> inner_train;
    std::vector<std::vector<Eigen::Index>> inner_test_rows;
};

TrainingSplit prepare_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows,
                            int k, std::uint64_t seed)
{
    TrainingSplit split;
    const auto total = RowSums::over(x, y, rows);
    split.full = total.normalized();
    const auto inner = fold_assignment(rows.size(), k, seed);
    split.inner_test_rows.resize(static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < rows.size(); ++r)
        split.inner_test_rows[static_cast<std::size_t>(inner[r])].push_back(rows[r]);
    for (const auto& test_rows : split.inner_test_rows)
        split.inner_train.push_back(total.minus(RowSums::over(x, y, test_rows)).normalized());
    return split;
}

GramSystem correlation_system(const GramSystem& sys, Eigen::VectorXd& scale)
{
    // Rescale to unit diagonal and unit y variance; scale maps back.
    const auto p = sys.gram.rows();
    Eigen::VectorXd sd = sys.gram.diagonal().cwiseMax(1e-300).cwiseSqrt();
    const double ysd = std::sqrt(std::max(sys.yty, 1e-300));
    GramSystem out = sys;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            out.gram(i, j) = sys.gram(i, j) / (sd(i) * sd(j));
    out.gram.diagonal().setOnes();
    out.xty = sys.xty.cwiseQuotient(sd) / ysd;
    scale = sd.cwiseInverse() * ysd;
    return out;
}

// Fits one model kind on a Gram system at one penalty.
Eigen::VectorXd fit_on(const GramSystem& sys, ModelKind kind, double lambda, const ModelGrid& grid,
                       const Eigen::VectorXd* warm)
{
    switch (kind) {
    case ModelKind::top1:
        return fit_top1(sys).coefficients;
    case ModelKind::ridge:
        return fit_ridge(sys, lambda).coefficients;
    case ModelKind::lasso:
    case ModelKind::elastic_net: {
        ElasticNetOptions opt;
        if (warm != nullptr)
            opt.warm_start = *warm;
        const double mix = kind == ModelKind::lasso ? 1.0 : grid.enet_mix;
        return solve_elastic_net(sys, lambda, mix, opt).beta;
    }
    case ModelKind::marginal_ld: {
        Eigen::VectorXd scale;
        const auto corr = correlation_system(sys, scale);
        LdMatrix ld;
        ld.values = corr.gram;
        ld.snp_ids.resize(static_cast<std::size_t>(corr.gram.rows()));
        ld = shrink_ld(ld, grid.ld_shrink);
        return marginal_ld_weights({corr.xty}, ld).coefficients.cwiseProduct(scale);
    }
    }
    return {};
}

bool is_penalized(ModelKind kind)
{
    return kind == ModelKind::ridge || kind == ModelKind::lasso || kind == ModelKind::elastic_net;
}

// Inner k-fold choice of penalty; ties keep the larger penalty.
double select_penalty(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TrainingSplit& split, ModelKind kind,
                      const ModelGrid& grid)
{
    std::vector<double> ss_res(grid.lambdas.size(), 0.0);
    for (std::size_t f = 0; f < split.inner_train.size(); ++f) {
        const auto& rows = split.inner_test_rows[f];
        if (rows.empty())
            continue;
        Eigen::VectorXd warm = Eigen::VectorXd::Zero(x.cols());
        for (std::size_t l = 0; l < grid.lambdas.size(); ++l) {
            warm = fit_on(split.inner_train[f], kind, grid.lambdas[l], grid, &warm);
            for (auto r : rows) {
                const double resid = y(r) - x.row(r).dot(warm);
                ss_res[l] += resid * resid;
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t l = 1; l < ss_res.size(); ++l) {
        if (ss_res[l] < ss_res[best])
            best = l;
    }
    return grid.lambdas[best];
}

ModelFit fit_selected(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TrainingSplit& split,
                      ModelKind kind, const ModelGrid& grid)
{
    ModelFit fit;
    fit.kind = kind;
    if (is_penalized(kind)) {
        fit.penalty = select_penalty(x, y, split, kind, grid);
        fit.mix = kind == ModelKind::lasso ? 1.0 : kind == ModelKind::elastic_net ? grid.enet_mix : 0.0;
    } else if (kind == ModelKind::marginal_ld) {
        fit.penalty = grid.ld_shrink;
    }
    fit.coefficients = fit_on(split.full, kind, fit.penalty, grid, nullptr);
    return fit;
}

} // namespace

CvReport cross_validate(const TrainingSet& ts, int k, std::uint64_t seed, const ModelGrid& grid)
{
    const auto n = ts.x.rows();
    if (k < 2)
        throw Error(ErrorCode::ParamOutOfRange, "cross-validation needs k >= 2 folds");
    if (n < 2 * k)
        throw Error(ErrorCode::TooFewSamples, ts.gene + ": " + std::to_string(n) + " samples for " +
                                                  std::to_string(k) + "-fold cross-validation");
    if (ts.x.cols() < 1)
        throw Error(ErrorCode::EmptyPanel, ts.gene + ": no cis SNPs");
    for (auto kind : grid.kinds) {
        if (is_penalized(kind) && grid.lambdas.empty())
            throw Error(ErrorCode::ParamOutOfRange, "penalized model requested with an empty penalty grid");
    }

    const auto outer = fold_assignment(static_cast<std::size_t>(n), k, seed);
    std::vector<std::vector<Eigen::Index>> test_rows(static_cast<std::size_t>(k));
    std::vector<std::vector<Eigen::Index>> train_rows(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int f = 0; f < k; ++f)
            (outer[static_cast<std::size_t>(i)] == f ? test_rows : train_rows)[static_cast<std::size_t>(f)].push_back(i);
    }

    std::vector<TrainingSplit> splits;
    splits.reserve(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f)
        splits.push_back(prepare_split(ts.x, ts.y, train_rows[static_cast<std::size_t>(f)], k,
                                       derive_seed(seed, {static_cast<std::uint64_t>(f) + 1})));

    std::vector<Eigen::Index> all_rows(static_cast<std::size_t>(n));
    std::iota(all_rows.begin(), all_rows.end(), Eigen::Index{0});
    const auto whole = prepare_split(ts.x, ts.y, all_rows, k, derive_seed(seed, {0}));

    const double y_mean = ts.y.mean();
    const double ss_tot = (ts.y.array() - y_mean).square().sum();

    CvReport report;
    report.gene = ts.gene;
    report.tissue = ts.tissue;
    report.chrom = ts.chrom;
    report.tss = ts.tss;
    report.snps = ts.snps;

    for (auto kind : grid.kinds) {
        double ss_res = 0.0;
        for (int f = 0; f < k; ++f) {
            const auto fit = fit_selected(ts.x, ts.y, splits[static_cast<std::size_t>(f)], kind, grid);
            for (auto r : test_rows[static_cast<std::size_t>(f)]) {
                const double resid = ts.y(r) - ts.x.row(r).dot(fit.coefficients);
                ss_res += resid * resid;
            }
        }
        CvEntry entry;
        entry.kind = kind;
        entry.cv_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
        entry.fit = fit_selected(ts.x, ts.y, whole, kind, grid);
        entry.fit.cv_r2 = entry.cv_r2;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

Selection select_model(const CvReport& report, double min_r2)
{
    const CvEntry* best = nullptr;
    for (const auto& e : report.entries) {
        if (e.fit.coefficients.size() == 0 || e.fit.coefficients.isZero(0.0) || !std::isfinite(e.cv_r2))
            continue;
        if (best == nullptr || e.cv_r2 > best->cv_r2 ||
            (e.cv_r2 == best->cv_r2 && tie_rank(e.kind) < tie_rank(best->kind)))
            best = &e;
    }
    if (best == nullptr)
        return Skipped{report.gene, report.tissue, "no model produced a nonzero weight"};
    if (!(best->cv_r2 > min_r2)) {
        return Skipped{report.gene, report.tissue,
                       "best cv_r2 " + tsv::format_general(best->cv_r2, 4) + " (" + std::string(to_string(best->kind)) +
                           ") <= min_r2 " + tsv::format_general(min_r2, 4)};
    }

    GeneWeightSet set;
    set.gene = report.gene;
    set.tissue = report.tissue;
    set.chrom = report.chrom;
    set.tss = report.tss;
    set.snps = report.snps;
    set.weights.assign(best->fit.coefficients.data(), best->fit.coefficients.data() + best->fit.coefficients.size());
    set.model = best->kind;
    set.cv_r2 = best->cv_r2;
    return set;
}

ExpressionTable parse_expression(std::istream& in, const std::string& source)
{
    tsv::Reader reader(in, source);
    const auto& header = reader.header();
    constexpr std::array<std::string_view, 4> fixed{"GENE", "TISSUE", "CHR", "TSS"};
    for (std::size_t c = 0; c < fixed.size(); ++c) {
        if (header.size() <= c || header[c] != fixed[c])
            throw Error(ErrorCode::MissingColumn, source + ":1: column " + std::to_string(c + 1) + " must be " +
                                                      std::string(fixed[c]));
    }
    ExpressionTable table;
    table.sample_ids.assign(header.begin() + 4, header.end());
    const auto n = static_cast<Eigen::Index>(table.sample_ids.size());
    while (reader.next()) {
        const auto& f = reader.fields();
        ExpressionTrait trait;
        trait.gene = std::string(f[0]);
        trait.tissue = std::string(f[1]);
        trait.chrom = static_cast<int>(reader.integer(2, "CHR"));
        trait.tss = reader.integer(3, "TSS");
        trait.values.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(i) + 4;
            trait.values(i) = reader.number(c, header[c]);
            if (!std::isfinite(trait.values(i)))
                throw Error(ErrorCode::ValueOutOfRange, reader.where() + ": non-finite expression value");
        }
        table.traits.push_back(std::move(trait));
    }
    return table;
}

ExpressionTable parse_expression(const std::filesystem::path& path)
{
    auto in = tsv::open_input(path);
    return parse_expression(in, path.string());
}

void write_expression(const ExpressionTable& table, std::ostream& out)
{
    out << "GENE\tTISSUE\tCHR\tTSS";
    for (const auto& id : table.sample_ids)
        out << '\t' << id;
    out << '\n';
    for (const auto& t : table.traits) {
        out << t.gene << '\t' << t.tissue << '\t' << t.chrom << '\t' << t.tss;
        for (Eigen::Index i = 0; i < t.values.size(); ++i)
            out << '\t' << tsv::format_shortest(t.values(i));
        out << '\n';
    }
}

TrainOutcome train_gene(const GenotypePanel& panel, const ExpressionTrait& trait, const TrainOptions& options)
{
    TrainOutcome outcome;
    outcome.report.gene = trait.gene;
    outcome.report.tissue = trait.tissue;
    outcome.report.chrom = trait.chrom;
    outcome.report.tss = trait.tss;

    std::vector<std::size_t> cis;
    for (std::size_t j = 0; j < panel.snps.size(); ++j) {
        const auto& s = panel.snps[j];
        if (s.chrom == trait.chrom && std::abs(s.pos - trait.tss) <= options.cis_window)
            cis.push_back(j);
    }
    if (cis.empty()) {
        outcome.selection = Skipped{trait.gene, trait.tissue, "no SNPs in the cis window"};
        return outcome;
    }

    try {
        const auto ts = make_training_set(select_snps(panel, cis), trait.values, trait.gene, trait.tissue,
                                          trait.chrom, trait.tss);
        validate_training_set(ts, options.folds);
        auto grid = default_model_grid(ts);
        grid.enet_mix = options.enet_mix;
        grid.ld_shrink = options.ld_shrink;
        const auto seed = derive_seed(options.seed, {hash_string(trait.gene + '\t' + trait.tissue)});
        outcome.report = cross_validate(ts, options.folds, seed, grid);
        outcome.selection = select_model(outcome.report, options.min_r2);
    } catch (const Error& e) {
        outcome.selection = Skipped{trait.gene, trait.tissue, e.what()};
    }
    return outcome;
}

std::vector<TrainOutcome> train_panel(const GenotypePanel& panel, const ExpressionTable& expression,
                                      const TrainOptions& options)
{
    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < panel.sample_ids.size(); ++i)
        row_of.emplace(panel.sample_ids[i], i);

    GenotypePanel aligned;
    aligned.snps = panel.snps;
    aligned.sample_ids = expression.sample_ids;
    aligned.dosages.resize(static_cast<Eigen::Index>(expression.sample_ids.size()), panel.dosages.cols());
    for (std::size_t i = 0; i < expression.sample_ids.size(); ++i) {
        auto it = row_of.find(expression.sample_ids[i]);
        if (it == row_of.end())
            throw Error(ErrorCode::IdMismatch, "expression sample " + expression.sample_ids[i] + " has no genotypes");
        aligned.dosages.row(static_cast<Eigen::Index>(i)) = panel.dosages.row(static_cast<Eigen::Index>(it->second));
    }

    std::vector<TrainOutcome> outcomes(expression.traits.size());
    parallel_for(expression.traits.size(), options.threads,
                 [&](std::size_t g) { outcomes[g] = train_gene(aligned, expression.traits[g], options); });
    return outcomes;
}

void write_training_log(const std::vector<TrainOutcome>& outcomes, std::ostream& out)
{
    out << "GENE\tTISSUE\tMODEL\tLAMBDA\tCVR2\tSELECTED\n";
    for (const auto& o : outcomes) {
        const auto* chosen = std::get_if<GeneWeightSet>(&o.selection);
        if (o.report.entries.empty()) {
            out << o.report.gene << '\t' << o.report.tissue << "\tNA\tNA\tNA\t0\n";
            continue;
        }
        for (const auto& e : o.report.entries) {
            const bool selected = chosen != nullptr && chosen->model == e.kind;
            out << o.report.gene << '\t' << o.report.tissue << '\t' << to_string(e.kind) << '\t'
                << tsv::format_general(e.fit.penalty, 6) << '\t' << tsv::format_general(e.cv_r2, 6) << '\t'
                << (selected ? 1 : 0) << '\n';
        }
    }
}

} // namespace twas
