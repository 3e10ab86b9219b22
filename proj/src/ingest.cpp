#include "twas/ingest.hpp"

#include "twas/errors.hpp"
#include "twas/tsv.hpp"

#include <cmath>
#include <ostream>
#include <unordered_set>

namespace twas {

bool is_valid_allele(char allele) noexcept
{
    return allele == 'A' || allele == 'C' || allele == 'G' || allele == 'T';
}

void validate_snp(const SnpRecord& snp, std::string_view where)
{
    const std::string at(where);
    if (snp.id.empty())
        throw Error(ErrorCode::MalformedRecord, at + ": empty SNP id");
    if (snp.chrom < 1 || snp.chrom > 22)
        throw Error(ErrorCode::ValueOutOfRange, at + ": chromosome " + std::to_string(snp.chrom) +
                                                    " outside 1-22 for " + snp.id);
    if (snp.pos < 1)
        throw Error(ErrorCode::ValueOutOfRange, at + ": position must be >= 1 for " + snp.id);
    if (!is_valid_allele(snp.a1) || !is_valid_allele(snp.a2) || snp.a1 == snp.a2)
        throw Error(ErrorCode::MalformedAllele, at + ": alleles " + std::string(1, snp.a1) + "/" +
                                                    std::string(1, snp.a2) + " invalid for " + snp.id);
}

char parse_allele(std::string_view text, std::string_view where)
{
    if (text.size() != 1) {
        throw Error(ErrorCode::MalformedAllele,
                    std::string(where) + ": allele '" + std::string(text) + "' is not a single base");
    }
    const char c = text.front();
    if (!is_valid_allele(c)) {
        throw Error(ErrorCode::MalformedAllele,
                    std::string(where) + ": allele '" + std::string(text) + "' not in {A,C,G,T}");
    }
    return c;
}

GwasSummary::GwasSummary(std::vector<GwasEntry> entries) : entries_(std::move(entries))
{
    index_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (!std::isfinite(e.z))
            throw Error(ErrorCode::NonFiniteZ, "record " + std::to_string(i + 1) + ": z for " + e.snp.id);
        if (!index_.emplace(e.snp.id, i).second)
            throw Error(ErrorCode::DuplicateSnp, "record " + std::to_string(i + 1) + ": " + e.snp.id);
    }
}

const GwasEntry* GwasSummary::find(std::string_view id) const
{
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &entries_[it->second];
}

namespace {

struct SnpColumns {
    std::size_t id, chrom, pos, a1, a2;
};

SnpColumns require_snp_columns(const tsv::Reader& reader, std::string_view pos_column)
{
    return {reader.require("SNP"), reader.require("CHR"), reader.require(pos_column), reader.require("A1"),
            reader.require("A2")};
}

SnpRecord read_snp(const tsv::Reader& reader, const SnpColumns& cols, std::string_view pos_column)
{
    const auto& f = reader.fields();
    const auto where = reader.where();
    SnpRecord snp;
    snp.id = std::string(f[cols.id]);
    snp.chrom = static_cast<int>(reader.integer(cols.chrom, "CHR"));
    snp.pos = reader.integer(cols.pos, pos_column);
    snp.a1 = parse_allele(f[cols.a1], where);
    snp.a2 = parse_allele(f[cols.a2], where);
    validate_snp(snp, where);
    return snp;
}

} // namespace

GwasSummary parse_gwas(std::istream& in, const std::string& source)
{
    tsv::Reader reader(in, source);
    const auto cols = require_snp_columns(reader, "BP");
    const auto z_col = reader.require("Z");

    std::vector<GwasEntry> entries;
    std::unordered_map<std::string, std::size_t> seen;
    while (reader.next()) {
        GwasEntry e;
        e.snp = read_snp(reader, cols, "BP");
        e.z = reader.number(z_col, "Z");
        if (!std::isfinite(e.z))
            throw Error(ErrorCode::NonFiniteZ, reader.where() + ": z for " + e.snp.id + " is not finite");
        auto [it, inserted] = seen.emplace(e.snp.id, reader.line_number());
        if (!inserted) {
            throw Error(ErrorCode::DuplicateSnp, reader.where() + ": " + e.snp.id + " already seen on line " +
                                                     std::to_string(it->second));
        }
        entries.push_back(std::move(e));
    }
    return GwasSummary(std::move(entries));
}

GwasSummary parse_gwas(const std::filesystem::path& path)
{
    auto in = tsv::open_input(path);
    return parse_gwas(in, path.string());
}

void write_gwas(const GwasSummary& gwas, std::ostream& out)
{
    out << "SNP\tCHR\tBP\tA1\tA2\tZ\n";
    for (const auto& e : gwas.entries()) {
        out << e.snp.id << '\t' << e.snp.chrom << '\t' << e.snp.pos << '\t' << e.snp.a1 << '\t' << e.snp.a2
            << '\t' << tsv::format_shortest(e.z) << '\n';
    }
}

void write_gwas(const GwasSummary& gwas, const std::filesystem::path& path)
{
    auto out = tsv::open_output(path);
    write_gwas(gwas, out);
}

std::vector<SnpRecord> parse_snp_info(std::istream& in, const std::string& source)
{
    tsv::Reader reader(in, source);
    const auto cols = require_snp_columns(reader, "BP");
    std::vector<SnpRecord> snps;
    std::unordered_set<std::string> seen;
    while (reader.next()) {
        auto snp = read_snp(reader, cols, "BP");
        if (!seen.insert(snp.id).second)
            throw Error(ErrorCode::DuplicateSnp, reader.where() + ": " + snp.id);
        snps.push_back(std::move(snp));
    }
    return snps;
}

GenotypePanel parse_genotypes(std::istream& dosages, const std::string& dosage_source, std::istream& snp_info,
                              const std::string& info_source)
{
    const auto info = parse_snp_info(snp_info, info_source);
    std::unordered_map<std::string, std::size_t> info_index;
    for (std::size_t i = 0; i < info.size(); ++i)
        info_index.emplace(info[i].id, i);

    tsv::Reader reader(dosages, dosage_source);
    const auto& header = reader.header();
    if (header.front() != "IID")
        throw Error(ErrorCode::MissingColumn, dosage_source + ":1: first column must be IID");

    GenotypePanel panel;
    std::unordered_set<std::string> seen;
    for (std::size_t c = 1; c < header.size(); ++c) {
        auto it = info_index.find(header[c]);
        if (it == info_index.end())
            throw Error(ErrorCode::IdMismatch, dosage_source + ":1: SNP " + header[c] + " absent from " + info_source);
        if (!seen.insert(header[c]).second)
            throw Error(ErrorCode::DuplicateSnp, dosage_source + ":1: " + header[c]);
        panel.snps.push_back(info[it->second]);
    }

    const std::size_t p = panel.snps.size();
    std::vector<double> values;
    std::vector<bool> missing;
    while (reader.next()) {
        const auto& f = reader.fields();
        panel.sample_ids.emplace_back(f[0]);
        for (std::size_t c = 1; c <= p; ++c) {
            if (f[c] == "NA" || f[c] == ".") {
                values.push_back(0.0);
                missing.push_back(true);
                continue;
            }
            const double v = reader.number(c, header[c]);
            if (!(v >= 0.0 && v <= 2.0)) {
                throw Error(ErrorCode::ValueOutOfRange, reader.where() + ": dosage " + std::string(f[c]) +
                                                            " for " + header[c] + " outside [0,2]");
            }
            values.push_back(v);
            missing.push_back(false);
        }
    }

    const std::size_t n = panel.sample_ids.size();
    panel.dosages.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) {
        double sum = 0.0;
        std::size_t observed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!missing[i * p + j]) {
                sum += values[i * p + j];
                ++observed;
            }
        }
        const double mean = observed > 0 ? sum / static_cast<double>(observed) : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            panel.dosages(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                missing[i * p + j] ? mean : values[i * p + j];
        }
    }
    return panel;
}

GenotypePanel parse_genotypes(const std::filesystem::path& dosages, const std::filesystem::path& snp_info)
{
    auto din = tsv::open_input(dosages);
    auto iin = tsv::open_input(snp_info);
    return parse_genotypes(din, dosages.string(), iin, snp_info.string());
}

void write_genotypes(const GenotypePanel& panel, std::ostream& dosages, std::ostream& snp_info)
{
    dosages << "IID";
    for (const auto& s : panel.snps)
        dosages << '\t' << s.id;
    dosages << '\n';
    for (Eigen::Index i = 0; i < panel.dosages.rows(); ++i) {
        dosages << panel.sample_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < panel.dosages.cols(); ++j)
            dosages << '\t' << tsv::format_shortest(panel.dosages(i, j));
        dosages << '\n';
    }

    snp_info << "SNP\tCHR\tBP\tA1\tA2\n";
    for (const auto& s : panel.snps)
        snp_info << s.id << '\t' << s.chrom << '\t' << s.pos << '\t' << s.a1 << '\t' << s.a2 << '\n';
}

GenotypePanel select_snps(const GenotypePanel& panel, std::span<const std::size_t> columns)
{
    GenotypePanel out;
    out.sample_ids = panel.sample_ids;
    out.dosages.resize(panel.dosages.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        out.snps.push_back(panel.snps.at(columns[k]));
        out.dosages.col(static_cast<Eigen::Index>(k)) = panel.dosages.col(static_cast<Eigen::Index>(columns[k]));
    }
    return out;
}

std::string_view to_string(HarmonizeAction action) noexcept
{
    switch (action) {
    case HarmonizeAction::keep: return "keep";
    case HarmonizeAction::flip_sign: return "flip_sign";
    case HarmonizeAction::drop_ambiguous: return "drop_ambiguous";
    case HarmonizeAction::drop_mismatch: return "drop_mismatch";
    }
    return "unknown";
}

bool is_strand_ambiguous(char a1, char a2) noexcept
{
    return (a1 == 'A' && a2 == 'T') || (a1 == 'T' && a2 == 'A') || (a1 == 'C' && a2 == 'G') ||
           (a1 == 'G' && a2 == 'C');
}

HarmonizationOutcome harmonize_snp(const SnpRecord& weight_side, const SnpRecord& gwas_side)
{
    if (weight_side.id != gwas_side.id)
        throw Error(ErrorCode::IdMismatch, "harmonizing " + weight_side.id + " against " + gwas_side.id);

    HarmonizationOutcome out;
    out.matched_id = weight_side.id;
    if (is_strand_ambiguous(weight_side.a1, weight_side.a2) || is_strand_ambiguous(gwas_side.a1, gwas_side.a2))
        out.action = HarmonizeAction::drop_ambiguous;
    else if (weight_side.a1 == gwas_side.a1 && weight_side.a2 == gwas_side.a2)
        out.action = HarmonizeAction::keep;
    else if (weight_side.a1 == gwas_side.a2 && weight_side.a2 == gwas_side.a1)
        out.action = HarmonizeAction::flip_sign;
    else
        out.action = HarmonizeAction::drop_mismatch;
    return out;
}

} // namespace twas
