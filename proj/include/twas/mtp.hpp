#pragma once

#include "twas/assoc.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace twas {

enum class AdjustMethod { bonferroni, bh };

std::string_view to_string(AdjustMethod method) noexcept;

struct AdjustmentOutcome {
    AdjustMethod method = AdjustMethod::bonferroni;
    double alpha = 0.05;
    std::size_t m = 0;
    double threshold = 0.0;  // alpha/m, or k* alpha/m for BH (0 when k* = 0)
    std::size_t k_star = 0;  // BH only
    std::vector<bool> rejected; // input order
};

// Rejects p_i <= alpha/m. m defaults to p.size(); a fixed m must be at least
// p.size(). Throws EmptyInput, POutOfRange or ParamOutOfRange.
AdjustmentOutcome bonferroni(std::span<const double> p, double alpha, std::optional<std::size_t> m = std::nullopt);

// Benjamini-Hochberg step-up: k* is the largest k with P_(k) <= (k/m) alpha,
// and the k* smallest p-values are rejected. Ties sort stably by input order.
AdjustmentOutcome bh_procedure(std::span<const double> p, double alpha, std::optional<std::size_t> m = std::nullopt);

// auto: m = number of tests performed; fixed: m given (e.g. 15000).
struct MMode {
    std::optional<std::size_t> fixed;
};

struct MtpAnnotation {
    std::optional<bool> bonf_reject;
    std::optional<bool> bh_reject;
    std::optional<double> bonf_threshold;
    std::optional<std::size_t> bh_kstar;
    std::optional<std::size_t> m_used;
};

struct AnnotatedResult {
    TwasResult result;
    MtpAnnotation annotation;
};

std::vector<AnnotatedResult> annotate(std::span<const TwasResult> results);

// Runs `method` independently within each tissue (or over everything when
// per_tissue is false) and merges the flags back in input order. Earlier
// annotations from the other method are kept. not_testable rows get no
// flags and never count toward m.
std::vector<AnnotatedResult> adjust_per_tissue(std::span<const AnnotatedResult> results, AdjustMethod method,
                                               double alpha, MMode m_mode, bool per_tissue = true);

} // namespace twas
