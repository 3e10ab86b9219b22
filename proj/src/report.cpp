#include "twas/report.hpp"

#include "twas/errors.hpp"
#include "twas/tsv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

namespace twas {

namespace {

constexpr const char* kBaseColumns[] = {"GENE", "TISSUE", "CHR", "NSNPS", "MODEL", "TWAS_Z", "TWAS_P", "LOG10P", "STATUS"};
constexpr const char* kAdjustColumns[] = {"BONF_REJECT", "BH_REJECT", "BONF_THRESHOLD", "BH_KSTAR", "M_USED"};

std::string flag(const std::optional<bool>& v)
{
    return v ? (*v ? "1" : "0") : "NA";
}

std::string count(const std::optional<std::size_t>& v)
{
    return v ? std::to_string(*v) : "NA";
}

// Table order: tissues by first appearance, ascending p, untestable last.
std::vector<std::size_t> table_order(std::span<const AnnotatedResult> results)
{
    std::unordered_map<std::string, std::size_t> tissue_rank;
    for (const auto& r : results)
        tissue_rank.try_emplace(r.result.tissue, tissue_rank.size());

    std::vector<std::size_t> order(results.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = results[a].result;
        const auto& rb = results[b].result;
        const auto ta = tissue_rank.at(ra.tissue);
        const auto tb = tissue_rank.at(rb.tissue);
        if (ta != tb)
            return ta < tb;
        const bool ha = ra.log10_p.has_value();
        const bool hb = rb.log10_p.has_value();
        if (ha != hb)
            return ha;
        if (!ha)
            return false;
        return *ra.log10_p < *rb.log10_p;
    });
    return order;
}

} // namespace

void write_results_table(std::span<const AnnotatedResult> results, std::ostream& out, bool with_adjustment)
{
    std::string header;
    for (const char* c : kBaseColumns)
        header.append(c).push_back('\t');
    if (with_adjustment) {
        for (const char* c : kAdjustColumns)
            header.append(c).push_back('\t');
    }
    header.append("BP\n");
    out << header;

    for (std::size_t i : table_order(results)) {
        const auto& r = results[i].result;
        const auto& a = results[i].annotation;
        const bool testable = r.z_twas && r.p && r.log10_p;
        out << r.gene << '\t' << r.tissue << '\t' << r.chrom << '\t' << r.n_snps_used << '\t' << to_string(r.model)
            << '\t' << (testable ? tsv::format_general(*r.z_twas, 6) : "NA") << '\t'
            << (testable ? tsv::format_scientific(*r.p, 3) : "NA") << '\t'
            << (testable ? tsv::format_general(*r.log10_p, 10) : "NA") << '\t' << to_string(r.status);
        if (with_adjustment) {
            out << '\t' << flag(a.bonf_reject) << '\t' << flag(a.bh_reject) << '\t'
                << (a.bonf_threshold ? tsv::format_scientific(*a.bonf_threshold, 5) : "NA") << '\t'
                << count(a.bh_kstar) << '\t' << count(a.m_used);
        }
        out << '\t' << (r.bp ? std::to_string(*r.bp) : "NA") << '\n';
    }
}

void write_results_table(std::span<const TwasResult> results, std::ostream& out)
{
    const auto annotated = annotate(results);
    write_results_table(annotated, out, false);
}

std::vector<AnnotatedResult> parse_results_table(std::istream& in, const std::string& source)
{
    tsv::Reader reader(in, source);
    std::vector<std::size_t> base;
    for (const char* c : kBaseColumns)
        base.push_back(reader.require(c));
    std::vector<std::optional<std::size_t>> adjust;
    for (const char* c : kAdjustColumns)
        adjust.push_back(reader.find(c));
    const auto bp_col = reader.find("BP");

    auto is_na = [](std::string_view s) { return s == "NA"; };

    std::vector<AnnotatedResult> out;
    while (reader.next()) {
        const auto& f = reader.fields();
        AnnotatedResult row;
        auto& r = row.result;
        r.gene = std::string(f[base[0]]);
        r.tissue = std::string(f[base[1]]);
        if (r.gene.empty())
            throw Error(ErrorCode::MalformedRecord, reader.where() + ": empty GENE");
        r.chrom = static_cast<int>(reader.integer(base[2], "CHR"));
        r.n_snps_used = static_cast<int>(reader.integer(base[3], "NSNPS"));
        const auto model = parse_model_kind(f[base[4]]);
        if (!model)
            throw Error(ErrorCode::MalformedRecord, reader.where() + ": unknown MODEL '" + std::string(f[base[4]]) + "'");
        r.model = *model;
        const auto status = parse_test_status(f[base[8]]);
        if (!status)
            throw Error(ErrorCode::MalformedRecord, reader.where() + ": unknown STATUS '" + std::string(f[base[8]]) + "'");
        r.status = *status;

        if (!is_na(f[base[5]])) {
            r.z_twas = reader.number(base[5], "TWAS_Z");
            double p = reader.number(base[6], "TWAS_P");
            if (!is_na(f[base[7]])) {
                const double l = reader.number(base[7], "LOG10P");
                r.log10_p = l;
                if (std::isfinite(l) && l <= 0.0)
                    p = std::max(std::pow(10.0, l), std::numeric_limits<double>::denorm_min());
            } else {
                r.log10_p = std::log10(p);
            }
            if (!(p >= 0.0 && p <= 1.0))
                throw Error(ErrorCode::POutOfRange, reader.where() + ": TWAS_P outside [0,1]");
            r.p = p;
        } else if (r.status != TestStatus::not_testable) {
            throw Error(ErrorCode::MalformedRecord, reader.where() + ": NA statistic on a testable row");
        }

        auto read_flag = [&](std::size_t k) -> std::optional<bool> {
            if (!adjust[k] || is_na(f[*adjust[k]]))
                return std::nullopt;
            const auto v = f[*adjust[k]];
            if (v != "0" && v != "1")
                throw Error(ErrorCode::MalformedRecord, reader.where() + ": " + kAdjustColumns[k] + " must be 0, 1 or NA");
            return v == "1";
        };
        auto read_count = [&](std::size_t k) -> std::optional<std::size_t> {
            if (!adjust[k] || is_na(f[*adjust[k]]))
                return std::nullopt;
            const auto v = reader.integer(*adjust[k], kAdjustColumns[k]);
            if (v < 0)
                throw Error(ErrorCode::MalformedRecord, reader.where() + ": negative " + kAdjustColumns[k]);
            return static_cast<std::size_t>(v);
        };
        row.annotation.bonf_reject = read_flag(0);
        row.annotation.bh_reject = read_flag(1);
        if (adjust[2] && !is_na(f[*adjust[2]]))
            row.annotation.bonf_threshold = reader.number(*adjust[2], "BONF_THRESHOLD");
        row.annotation.bh_kstar = read_count(3);
        row.annotation.m_used = read_count(4);

        if (bp_col && !is_na(f[*bp_col]))
            r.bp = reader.integer(*bp_col, "BP");
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<AnnotatedResult> parse_results_table(const std::filesystem::path& path)
{
    auto in = tsv::open_input(path);
    return parse_results_table(in, path.string());
}

double bonferroni_line(double alpha, std::size_t m)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error(ErrorCode::ParamOutOfRange, "alpha must be in (0,1)");
    if (m == 0)
        throw Error(ErrorCode::ParamOutOfRange, "m must be positive");
    return -std::log10(alpha / static_cast<double>(m));
}

namespace {

struct PlotPoint {
    const TwasResult* result;
    std::string rejected;
};

std::vector<PlotPoint> plot_points(std::span<const AnnotatedResult> results)
{
    std::vector<PlotPoint> points;
    for (const auto& row : results) {
        const auto& r = row.result;
        if (!r.log10_p)
            continue;
        if (!r.bp)
            throw Error(ErrorCode::MissingColumn, "BP: no position for gene " + r.gene + " (" + r.tissue + ")");
        const auto& a = row.annotation;
        points.push_back({&r, flag(a.bonf_reject ? a.bonf_reject : a.bh_reject)});
    }
    std::stable_sort(points.begin(), points.end(), [](const PlotPoint& x, const PlotPoint& y) {
        if (x.result->chrom != y.result->chrom)
            return x.result->chrom < y.result->chrom;
        return *x.result->bp < *y.result->bp;
    });
    return points;
}

double neglog10(const TwasResult& r)
{
    return 0.0 - *r.log10_p;
}

} // namespace

void write_position_plot_data(std::span<const AnnotatedResult> results, std::ostream& out)
{
    const auto points = plot_points(results);
    out << "GENE\tCHR\tBP\tNEGLOG10P\tREJECTED\n";
    for (const auto& pt : points) {
        out << pt.result->gene << '\t' << pt.result->chrom << '\t' << *pt.result->bp << '\t'
            << tsv::format_general(neglog10(*pt.result), 6) << '\t' << pt.rejected << '\n';
    }
}

void write_position_svg(std::span<const AnnotatedResult> results, double threshold, std::ostream& out)
{
    const auto points = plot_points(results);
    constexpr double width = 800, height = 400, margin = 50;

    // Chromosomes are laid side by side in order; x is the cumulative position.
    std::vector<std::pair<int, double>> offsets;
    double total = 0.0;
    for (std::size_t i = 0; i < points.size();) {
        const int chrom = points[i].result->chrom;
        double span_end = 0.0;
        std::size_t j = i;
        for (; j < points.size() && points[j].result->chrom == chrom; ++j)
            span_end = std::max(span_end, static_cast<double>(*points[j].result->bp));
        offsets.emplace_back(chrom, total);
        total += span_end + 1.0;
        i = j;
    }
    if (total <= 0.0)
        total = 1.0;
    double y_max = threshold;
    for (const auto& pt : points)
        y_max = std::max(y_max, neglog10(*pt.result));
    y_max = std::max(1.0, y_max * 1.05);

    auto sx = [&](double x) { return margin + x / total * (width - 2 * margin); };
    auto sy = [&](double y) { return height - margin - y / y_max * (height - 2 * margin); };
    auto offset_of = [&](int chrom) {
        for (const auto& [c, o] : offsets)
            if (c == chrom)
                return o;
        return 0.0;
    };
    auto num = [](double v) { return tsv::format_general(v, 6); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << height - margin
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">position</text>\n";
    out << "<text x=\"15\" y=\"" << height / 2 << "\" transform=\"rotate(-90 15 " << height / 2
        << ")\" text-anchor=\"middle\">-log10 p</text>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << num(sy(threshold)) << "\" x2=\"" << width - margin << "\" y2=\""
        << num(sy(threshold)) << "\" stroke=\"red\" stroke-dasharray=\"4 2\"/>\n";
    for (const auto& pt : points) {
        const double x = sx(offset_of(pt.result->chrom) + static_cast<double>(*pt.result->bp));
        const double y = sy(neglog10(*pt.result));
        out << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"3\" fill=\""
            << (pt.rejected == "1" ? "crimson" : "steelblue") << "\"><title>" << pt.result->gene << " ("
            << pt.result->tissue << ")</title></circle>\n";
    }
    out << "</svg>\n";
}

std::size_t unique_gene_count(std::span<const AnnotatedResult> results, bool rejected_only)
{
    std::set<std::string> genes;
    for (const auto& row : results) {
        if (rejected_only && !(row.annotation.bonf_reject.value_or(false) || row.annotation.bh_reject.value_or(false)))
            continue;
        genes.insert(row.result.gene);
    }
    return genes.size();
}

} // namespace twas
