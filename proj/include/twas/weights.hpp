#pragma once

#include "twas/ingest.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace twas {

enum class ModelKind { top1, ridge, lasso, elastic_net, marginal_ld };

std::string_view to_string(ModelKind kind) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept;

// Expression prediction weights for one gene in one tissue.
struct GeneWeightSet {
    std::string gene;
    std::string tissue;
    int chrom = 0;
    std::int64_t tss = 0;
    std::vector<SnpRecord> snps;
    std::vector<double> weights;
    ModelKind model = ModelKind::top1;
    double cv_r2 = 0.0;
};

using WeightPanel = std::vector<GeneWeightSet>;

// Rows sharing (GENE, TISSUE) form one set; sets keep first-appearance order.
WeightPanel parse_weight_panel(std::istream& in, const std::string& source);
WeightPanel parse_weight_panel(const std::filesystem::path& path);

// One row per nonzero weight:
// GENE TISSUE CHR TSS SNP BP A1 A2 WEIGHT MODEL CVR2
void write_weight_panel(const WeightPanel& panel, std::ostream& out);
void write_weight_panel(const WeightPanel& panel, const std::filesystem::path& path);

} // namespace twas
