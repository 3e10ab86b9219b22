#include "twas/assoc.hpp"

#include "twas/errors.hpp"
#include "twas/normal.hpp"
#include "twas/parallel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace twas {

std::string_view to_string(TestStatus status) noexcept
{
    switch (status) {
    case TestStatus::ok: return "ok";
    case TestStatus::degraded: return "degraded";
    case TestStatus::not_testable: return "not_testable";
    }
    return "unknown";
}

std::optional<TestStatus> parse_test_status(std::string_view text) noexcept
{
    for (auto s : {TestStatus::ok, TestStatus::degraded, TestStatus::not_testable}) {
        if (text == to_string(s))
            return s;
    }
    return std::nullopt;
}

PValue z_to_p(double z)
{
    if (!std::isfinite(z))
        throw Error(ErrorCode::NonFiniteZ, "cannot convert a non-finite z to a p-value");
    const double x = std::abs(z);
    if (x == 0.0)
        return {1.0, 0.0};
    if (x < 8.0) {
        const double p = std::erfc(x / std::numbers::sqrt2);
        return {p, std::log10(p)};
    }
    const double ln_p = std::numbers::ln2 + normal::log_upper_tail(x);
    const double p = std::max(std::exp(ln_p), std::numeric_limits<double>::denorm_min());
    return {p, ln_p / std::numbers::ln10};
}

double twas_z(const Eigen::VectorXd& w, const Eigen::VectorXd& z, const LdMatrix& ld, double min_variance)
{
    if (w.size() != z.size() || ld.values.rows() != w.size() || ld.values.cols() != w.size())
        throw Error(ErrorCode::DimensionMismatch, "weights " + std::to_string(w.size()) + ", z " +
                                                      std::to_string(z.size()) + ", LD " +
                                                      std::to_string(ld.values.rows()));
    const double variance = w.dot(ld.values * w);
    if (!(variance >= min_variance))
        throw Error(ErrorCode::DenominatorTooSmall, "w' Sigma w = " + std::to_string(variance));
    return w.dot(z) / std::sqrt(variance);
}

PanelLdSource::PanelLdSource(GenotypePanel panel) : panel_(std::move(panel))
{
    for (std::size_t j = 0; j < panel_.snps.size(); ++j)
        index_.emplace(panel_.snps[j].id, j);
}

LdLookup PanelLdSource::lookup(std::span<const SnpRecord> snps) const
{
    std::vector<std::size_t> requested;
    std::vector<std::string> ids;
    Eigen::MatrixXd x(panel_.dosages.rows(), static_cast<Eigen::Index>(snps.size()));
    Eigen::Index used = 0;
    for (std::size_t k = 0; k < snps.size(); ++k) {
        auto it = index_.find(snps[k].id);
        if (it == index_.end())
            continue;
        const auto action = harmonize_snp(snps[k], panel_.snps[it->second]).action;
        if (action != HarmonizeAction::keep && action != HarmonizeAction::flip_sign)
            continue;
        const auto col = panel_.dosages.col(static_cast<Eigen::Index>(it->second));
        // Flipped reference SNPs count the other allele: 2 - dosage.
        if (action == HarmonizeAction::keep)
            x.col(used) = col;
        else
            x.col(used) = (2.0 - col.array()).matrix();
        ++used;
        requested.push_back(k);
        ids.push_back(snps[k].id);
    }
    x.conservativeResize(Eigen::NoChange, used);

    LdLookup out;
    if (used == 0 || x.rows() < 2)
        return out;
    const auto std_geno = standardize_columns(x, ids);
    if (std_geno.kept_columns.empty())
        return out;
    for (auto c : std_geno.kept_columns)
        out.available.push_back(requested[c]);
    out.ld = estimate_ld(std_geno);
    return out;
}

MatrixLdSource::MatrixLdSource(LdMatrix ld) : ld_(std::move(ld))
{
    for (std::size_t j = 0; j < ld_.snp_ids.size(); ++j)
        index_.emplace(ld_.snp_ids[j], j);
}

LdLookup MatrixLdSource::lookup(std::span<const SnpRecord> snps) const
{
    LdLookup out;
    std::vector<std::size_t> rows;
    for (std::size_t k = 0; k < snps.size(); ++k) {
        auto it = index_.find(snps[k].id);
        if (it == index_.end())
            continue;
        out.available.push_back(k);
        rows.push_back(it->second);
    }
    out.ld = subset_ld(ld_, rows);
    return out;
}

TwasResult run_gene(const GeneWeightSet& weights, const GwasSummary& gwas, const LdSource& ld_source,
                    const AssocOptions& options)
{
    TwasResult result;
    result.gene = weights.gene;
    result.tissue = weights.tissue;
    result.chrom = weights.chrom;
    result.bp = weights.tss;
    result.model = weights.model;
    result.status = TestStatus::not_testable;

    // Weight SNPs with a usable, harmonized GWAS z.
    std::vector<SnpRecord> matched;
    std::vector<double> matched_w;
    std::vector<double> matched_z;
    double total_abs = 0.0;
    for (std::size_t j = 0; j < weights.snps.size(); ++j) {
        total_abs += std::abs(weights.weights[j]);
        const auto* entry = gwas.find(weights.snps[j].id);
        if (entry == nullptr)
            continue;
        const auto action = harmonize_snp(weights.snps[j], entry->snp).action;
        if (action == HarmonizeAction::keep || action == HarmonizeAction::flip_sign) {
            matched.push_back(weights.snps[j]);
            matched_w.push_back(weights.weights[j]);
            matched_z.push_back(action == HarmonizeAction::keep ? entry->z : -entry->z);
        }
    }
    if (matched.empty())
        return result;

    const auto lookup = ld_source.lookup(matched);
    const auto used = static_cast<Eigen::Index>(lookup.available.size());
    result.n_snps_used = static_cast<int>(used);
    if (used == 0)
        return result;

    Eigen::VectorXd w(used), z(used);
    double kept_abs = 0.0;
    for (Eigen::Index k = 0; k < used; ++k) {
        const auto src = lookup.available[static_cast<std::size_t>(k)];
        w(k) = matched_w[src];
        z(k) = matched_z[src];
        kept_abs += std::abs(w(k));
    }
    const auto ld = shrink_ld(lookup.ld, options.ld_shrink);

    try {
        const double stat = twas_z(w, z, ld, options.min_variance);
        const auto pv = z_to_p(stat);
        result.z_twas = stat;
        result.p = pv.p;
        result.log10_p = pv.log10_p;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DenominatorTooSmall)
            throw;
        return result;
    }

    const double removed = total_abs - kept_abs;
    result.status = total_abs > 0.0 && removed > options.degraded_fraction * total_abs ? TestStatus::degraded
                                                                                        : TestStatus::ok;
    return result;
}

std::vector<TwasResult> run_panel(const WeightPanel& panel, const GwasSummary& gwas, const LdSource& ld_source,
                                  const AssocOptions& options)
{
    std::vector<TwasResult> results(panel.size());
    parallel_for(panel.size(), options.threads,
                 [&](std::size_t g) { results[g] = run_gene(panel[g], gwas, ld_source, options); });
    return results;
}

} // namespace twas
