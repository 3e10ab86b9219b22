#include "twas/mtp.hpp"

#include "twas/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace twas {

std::string_view to_string(AdjustMethod method) noexcept
{
    return method == AdjustMethod::bonferroni ? "bonferroni" : "bh";
}

namespace {

std::size_t check_inputs(std::span<const double> p, double alpha, std::optional<std::size_t> m)
{
    if (p.empty())
        throw Error(ErrorCode::EmptyInput, "no p-values to adjust");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error(ErrorCode::ParamOutOfRange, "alpha must be in (0,1), got " + std::to_string(alpha));
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 1.0))
            throw Error(ErrorCode::POutOfRange, "p-value " + std::to_string(i + 1) + " is " + std::to_string(p[i]));
    }
    const std::size_t used = m.value_or(p.size());
    if (used < p.size())
        throw Error(ErrorCode::ParamOutOfRange, "m = " + std::to_string(used) + " is below the " +
                                                    std::to_string(p.size()) + " tests given");
    return used;
}

} // namespace

AdjustmentOutcome bonferroni(std::span<const double> p, double alpha, std::optional<std::size_t> m)
{
    AdjustmentOutcome out;
    out.method = AdjustMethod::bonferroni;
    out.alpha = alpha;
    out.m = check_inputs(p, alpha, m);
    out.threshold = alpha / static_cast<double>(out.m);
    out.rejected.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        out.rejected[i] = p[i] <= out.threshold;
    return out;
}

AdjustmentOutcome bh_procedure(std::span<const double> p, double alpha, std::optional<std::size_t> m)
{
    AdjustmentOutcome out;
    out.method = AdjustMethod::bh;
    out.alpha = alpha;
    out.m = check_inputs(p, alpha, m);

    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

    const double m_d = static_cast<double>(out.m);
    for (std::size_t rank = p.size(); rank >= 1; --rank) {
        if (p[order[rank - 1]] <= static_cast<double>(rank) / m_d * alpha) {
            out.k_star = rank;
            break;
        }
    }
    out.threshold = static_cast<double>(out.k_star) / m_d * alpha;
    out.rejected.assign(p.size(), false);
    for (std::size_t rank = 0; rank < out.k_star; ++rank)
        out.rejected[order[rank]] = true;
    return out;
}

std::vector<AnnotatedResult> annotate(std::span<const TwasResult> results)
{
    std::vector<AnnotatedResult> out;
    out.reserve(results.size());
    for (const auto& r : results)
        out.push_back({r, {}});
    return out;
}

std::vector<AnnotatedResult> adjust_per_tissue(std::span<const AnnotatedResult> results, AdjustMethod method,
                                               double alpha, MMode m_mode, bool per_tissue)
{
    std::vector<AnnotatedResult> out(results.begin(), results.end());

    // Group testable rows; std::map keys give a fixed group order.
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& r = out[i].result;
        if (r.status == TestStatus::not_testable || !r.p)
            continue;
        groups[per_tissue ? r.tissue : std::string()].push_back(i);
    }

    for (const auto& [tissue, members] : groups) {
        std::vector<double> p;
        p.reserve(members.size());
        for (auto i : members)
            p.push_back(*out[i].result.p);
        const auto adj = method == AdjustMethod::bonferroni ? bonferroni(p, alpha, m_mode.fixed)
                                                            : bh_procedure(p, alpha, m_mode.fixed);
        for (std::size_t k = 0; k < members.size(); ++k) {
            auto& ann = out[members[k]].annotation;
            ann.m_used = adj.m;
            if (method == AdjustMethod::bonferroni) {
                ann.bonf_reject = adj.rejected[k];
                ann.bonf_threshold = adj.threshold;
            } else {
                ann.bh_reject = adj.rejected[k];
                ann.bh_kstar = adj.k_star;
            }
        }
    }
    return out;
}

} // namespace twas
