#pragma once

#include "twas/ingest.hpp"
#include "twas/ld.hpp"
#include "twas/weights.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace twas {

enum class TestStatus { ok, degraded, not_testable };

std::string_view to_string(TestStatus status) noexcept;
std::optional<TestStatus> parse_test_status(std::string_view text) noexcept;

struct TwasResult {
    std::string gene;
    std::string tissue;
    int chrom = 0;
    std::optional<std::int64_t> bp; // gene position (TSS) when known
    int n_snps_used = 0;
    ModelKind model = ModelKind::top1;
    std::optional<double> z_twas; // absent when not_testable
    std::optional<double> p;
    std::optional<double> log10_p;
    TestStatus status = TestStatus::not_testable;
};

struct PValue {
    double p = 1.0;
    double log10_p = 0.0;
};

// Two-sided normal p-value 2 Phi(-|z|), evaluated in log space. log10_p is
// exact even where p underflows; p is then floored at the smallest
// positive double. Throws NonFiniteZ.
PValue z_to_p(double z);

inline constexpr double kMinTwasVariance = 1e-8;

// (w.z) / sqrt(w' Sigma w). Throws DimensionMismatch, or DenominatorTooSmall
// when w' Sigma w < min_variance.
double twas_z(const Eigen::VectorXd& w, const Eigen::VectorXd& z, const LdMatrix& ld,
              double min_variance = kMinTwasVariance);

// LD among a requested SNP list. `available` indexes the requested SNPs the
// source could supply (ascending); `ld` covers exactly those, unshrunk and
// oriented to the requested effect alleles.
struct LdLookup {
    std::vector<std::size_t> available;
    LdMatrix ld;
};

class LdSource {
public:
    virtual ~LdSource() = default;
    virtual LdLookup lookup(std::span<const SnpRecord> snps) const = 0;
};

// LD computed on demand from reference genotypes. Reference alleles are
// harmonized to the request; ambiguous, mismatched and monomorphic SNPs are
// unavailable.
class PanelLdSource final : public LdSource {
public:
    explicit PanelLdSource(GenotypePanel panel);
    LdLookup lookup(std::span<const SnpRecord> snps) const override;

private:
    GenotypePanel panel_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Precomputed LD, assumed coded on the same effect alleles as the weights.
class MatrixLdSource final : public LdSource {
public:
    explicit MatrixLdSource(LdMatrix ld);
    LdLookup lookup(std::span<const SnpRecord> snps) const override;

private:
    LdMatrix ld_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct AssocOptions {
    double ld_shrink = 0.1;
    double min_variance = kMinTwasVariance;
    double degraded_fraction = 0.5; // of sum |w| removed
    int threads = 1;
};

// Harmonizes the weight SNPs against the GWAS, removes SNPs without a GWAS z
// or LD from W and Sigma jointly (no renormalization) and computes Z_TWAS.
TwasResult run_gene(const GeneWeightSet& weights, const GwasSummary& gwas, const LdSource& ld_source,
                    const AssocOptions& options = {});

// One result per weight set, in panel order, for any thread count.
std::vector<TwasResult> run_panel(const WeightPanel& panel, const GwasSummary& gwas, const LdSource& ld_source,
                                  const AssocOptions& options = {});

} // namespace twas
