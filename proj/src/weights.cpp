#include "twas/weights.hpp"

#include "twas/errors.hpp"
#include "twas/tsv.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <unordered_set>

namespace twas {

std::string_view to_string(ModelKind kind) noexcept
{
    switch (kind) {
    case ModelKind::top1: return "top1";
    case ModelKind::ridge: return "ridge";
    case ModelKind::lasso: return "lasso";
    case ModelKind::elastic_net: return "elastic_net";
    case ModelKind::marginal_ld: return "marginal_ld";
    }
    return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept
{
    for (auto kind : {ModelKind::top1, ModelKind::ridge, ModelKind::lasso, ModelKind::elastic_net,
                      ModelKind::marginal_ld}) {
        if (text == to_string(kind))
            return kind;
    }
    return std::nullopt;
}

WeightPanel parse_weight_panel(std::istream& in, const std::string& source)
{
    tsv::Reader reader(in, source);
    const auto gene_col = reader.require("GENE");
    const auto tissue_col = reader.require("TISSUE");
    const auto chr_col = reader.require("CHR");
    const auto tss_col = reader.require("TSS");
    const auto snp_col = reader.require("SNP");
    const auto bp_col = reader.require("BP");
    const auto a1_col = reader.require("A1");
    const auto a2_col = reader.require("A2");
    const auto weight_col = reader.require("WEIGHT");
    const auto model_col = reader.require("MODEL");
    const auto r2_col = reader.require("CVR2");

    WeightPanel panel;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    std::vector<std::unordered_set<std::string>> seen;

    while (reader.next()) {
        const auto& f = reader.fields();
        const auto where = reader.where();
        std::pair key{std::string(f[gene_col]), std::string(f[tissue_col])};
        const int chrom = static_cast<int>(reader.integer(chr_col, "CHR"));
        const auto tss = reader.integer(tss_col, "TSS");
        const auto model = parse_model_kind(f[model_col]);
        if (!model)
            throw Error(ErrorCode::MalformedRecord, where + ": unknown model '" + std::string(f[model_col]) + "'");
        const double cv_r2 = reader.number(r2_col, "CVR2");

        auto [it, inserted] = index.emplace(key, panel.size());
        if (inserted) {
            GeneWeightSet set;
            set.gene = key.first;
            set.tissue = key.second;
            set.chrom = chrom;
            set.tss = tss;
            set.model = *model;
            set.cv_r2 = cv_r2;
            panel.push_back(std::move(set));
            seen.emplace_back();
        }
        auto& set = panel[it->second];
        if (set.chrom != chrom || set.tss != tss || set.model != *model)
            throw Error(ErrorCode::MalformedRecord, where + ": gene annotation differs from earlier rows of " +
                                                        set.gene + "/" + set.tissue);

        SnpRecord snp;
        snp.id = std::string(f[snp_col]);
        snp.chrom = chrom;
        snp.pos = reader.integer(bp_col, "BP");
        snp.a1 = parse_allele(f[a1_col], where);
        snp.a2 = parse_allele(f[a2_col], where);
        validate_snp(snp, where);
        if (!seen[it->second].insert(snp.id).second)
            throw Error(ErrorCode::DuplicateSnp, where + ": " + snp.id + " repeated in " + set.gene);

        const double w = reader.number(weight_col, "WEIGHT");
        if (!std::isfinite(w))
            throw Error(ErrorCode::ValueOutOfRange, where + ": weight is not finite");
        set.snps.push_back(std::move(snp));
        set.weights.push_back(w);
    }
    return panel;
}

WeightPanel parse_weight_panel(const std::filesystem::path& path)
{
    auto in = tsv::open_input(path);
    return parse_weight_panel(in, path.string());
}

void write_weight_panel(const WeightPanel& panel, std::ostream& out)
{
    out << "GENE\tTISSUE\tCHR\tTSS\tSNP\tBP\tA1\tA2\tWEIGHT\tMODEL\tCVR2\n";
    for (const auto& set : panel) {
        const auto r2 = tsv::format_shortest(set.cv_r2);
        for (std::size_t j = 0; j < set.snps.size(); ++j) {
            if (set.weights[j] == 0.0)
                continue;
            const auto& s = set.snps[j];
            out << set.gene << '\t' << set.tissue << '\t' << set.chrom << '\t' << set.tss << '\t' << s.id << '\t'
                << s.pos << '\t' << s.a1 << '\t' << s.a2 << '\t' << tsv::format_shortest(set.weights[j]) << '\t'
                << to_string(set.model) << '\t' << r2 << '\n';
        }
    }
}

void write_weight_panel(const WeightPanel& panel, const std::filesystem::path& path)
{
    auto out = tsv::open_output(path);
    write_weight_panel(panel, out);
}

} // namespace twas
