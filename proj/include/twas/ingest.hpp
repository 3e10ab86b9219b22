#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace twas {

// One biallelic SNP. Dosages and weights count a1, the effect allele.
struct SnpRecord {
    std::string id;
    int chrom = 0;
    std::int64_t pos = 0;
    char a1 = 'N';
    char a2 = 'N';

    bool operator==(const SnpRecord&) const = default;
};

bool is_valid_allele(char allele) noexcept;

// Throws MalformedAllele or ValueOutOfRange; `where` prefixes the message.
void validate_snp(const SnpRecord& snp, std::string_view where);

// Parses a one-letter allele column; throws MalformedAllele.
char parse_allele(std::string_view text, std::string_view where);

struct GwasEntry {
    SnpRecord snp;
    double z = 0.0;
};

// Per-SNP association z-scores, in file order, with an id index.
class GwasSummary {
public:
    GwasSummary() = default;

    // Throws DuplicateSnp or NonFiniteZ.
    explicit GwasSummary(std::vector<GwasEntry> entries);

    std::span<const GwasEntry> entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const GwasEntry* find(std::string_view id) const;

private:
    std::vector<GwasEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

GwasSummary parse_gwas(const std::filesystem::path& path);
GwasSummary parse_gwas(std::istream& in, const std::string& source);

// Header SNP CHR BP A1 A2 Z; z in shortest round-trip form.
void write_gwas(const GwasSummary& gwas, std::ostream& out);
void write_gwas(const GwasSummary& gwas, const std::filesystem::path& path);

// Reference or training genotypes: one row per individual, one column per SNP.
struct GenotypePanel {
    std::vector<std::string> sample_ids;
    std::vector<SnpRecord> snps;
    Eigen::MatrixXd dosages;

    std::size_t sample_count() const { return static_cast<std::size_t>(dosages.rows()); }
    std::size_t snp_count() const { return snps.size(); }
};

std::vector<SnpRecord> parse_snp_info(std::istream& in, const std::string& source);

// Dosage TSV (IID + SNP columns) plus the SNP CHR BP A1 A2 sidecar. Missing
// cells (NA or .) are replaced by the column mean of the observed values.
GenotypePanel parse_genotypes(std::istream& dosages, const std::string& dosage_source,
                              std::istream& snp_info, const std::string& info_source);
GenotypePanel parse_genotypes(const std::filesystem::path& dosages, const std::filesystem::path& snp_info);

void write_genotypes(const GenotypePanel& panel, std::ostream& dosages, std::ostream& snp_info);

// Columns of `panel` restricted to `columns`, in that order.
GenotypePanel select_snps(const GenotypePanel& panel, std::span<const std::size_t> columns);

enum class HarmonizeAction { keep, flip_sign, drop_ambiguous, drop_mismatch };

std::string_view to_string(HarmonizeAction action) noexcept;

struct HarmonizationOutcome {
    HarmonizeAction action = HarmonizeAction::drop_mismatch;
    std::string matched_id;
};

// A/T and C/G pairs read the same on both strands.
bool is_strand_ambiguous(char a1, char a2) noexcept;

// Aligns the GWAS side to the weight side's effect allele. flip_sign tells
// the caller to negate the GWAS z. Throws IdMismatch if ids differ.
HarmonizationOutcome harmonize_snp(const SnpRecord& weight_side, const SnpRecord& gwas_side);

} // namespace twas
