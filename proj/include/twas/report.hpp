#pragma once

#include "twas/mtp.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace twas {

// GENE TISSUE CHR NSNPS MODEL TWAS_Z TWAS_P LOG10P STATUS, then the five
// adjustment columns when `with_adjustment` is set, then BP. Rows are
// grouped by tissue (first appearance), ascending p within a tissue, with
// not_testable rows last carrying NA. P uses three significant digits
// (4.92E-34); LOG10P keeps ten so that adjustment on a re-read table is not
// affected by the rounding of P.
void write_results_table(std::span<const AnnotatedResult> results, std::ostream& out, bool with_adjustment);
void write_results_table(std::span<const TwasResult> results, std::ostream& out);

// Accepts tables with or without the adjustment columns and BP. p is
// recovered from LOG10P when that column is finite.
std::vector<AnnotatedResult> parse_results_table(std::istream& in, const std::string& source);
std::vector<AnnotatedResult> parse_results_table(const std::filesystem::path& path);

// -log10(alpha / m)
double bonferroni_line(double alpha, std::size_t m);

// GENE CHR BP NEGLOG10P REJECTED for testable rows, ordered by (CHR, BP).
// REJECTED follows the Bonferroni flag, else the BH flag, else NA. Throws
// MissingColumn when a row has no BP.
void write_position_plot_data(std::span<const AnnotatedResult> results, std::ostream& out);

// Minimal static scatter of -log10 p against position with a horizontal
// line at `threshold` (in -log10 units).
void write_position_svg(std::span<const AnnotatedResult> results, double threshold, std::ostream& out);

// Distinct gene symbols, optionally only among rows rejected by either
// procedure.
std::size_t unique_gene_count(std::span<const AnnotatedResult> results, bool rejected_only);

} // namespace twas
