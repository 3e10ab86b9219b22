#include "twas/ld.hpp"

#include "twas/errors.hpp"
#include "twas/tsv.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_set>

namespace twas {

namespace {

constexpr double kMinVariance = 1e-12;

} // namespace

StandardizedGenotypes standardize_columns(const Eigen::MatrixXd& x, std::span<const std::string> ids)
{
    const auto n = x.rows();
    if (n < 2)
        throw Error(ErrorCode::TooFewSamples, "standardization needs at least 2 samples, got " + std::to_string(n));
    if (static_cast<std::size_t>(x.cols()) != ids.size())
        throw Error(ErrorCode::DimensionMismatch, "column count differs from id count");

    StandardizedGenotypes out;
    std::vector<double> means, sds;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const double var = (x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
        if (!(var > kMinVariance)) {
            out.excluded_ids.push_back(ids[static_cast<std::size_t>(j)]);
            continue;
        }
        out.kept_columns.push_back(static_cast<std::size_t>(j));
        out.ids.push_back(ids[static_cast<std::size_t>(j)]);
        means.push_back(mean);
        sds.push_back(std::sqrt(var));
    }

    const auto p = static_cast<Eigen::Index>(out.kept_columns.size());
    out.matrix.resize(n, p);
    out.means = Eigen::Map<const Eigen::VectorXd>(means.data(), p);
    out.sds = Eigen::Map<const Eigen::VectorXd>(sds.data(), p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const auto j = static_cast<Eigen::Index>(out.kept_columns[static_cast<std::size_t>(k)]);
        out.matrix.col(k) = (x.col(j).array() - out.means(k)) / out.sds(k);
    }
    return out;
}

StandardizedGenotypes standardize_columns(const GenotypePanel& panel)
{
    std::vector<std::string> ids;
    ids.reserve(panel.snps.size());
    for (const auto& s : panel.snps)
        ids.push_back(s.id);
    return standardize_columns(panel.dosages, ids);
}

LdMatrix estimate_ld(const StandardizedGenotypes& std_geno)
{
    const auto p = std_geno.matrix.cols();
    if (p < 1)
        throw Error(ErrorCode::EmptyPanel, "no variable SNPs to estimate LD from");
    const auto n = std_geno.matrix.rows();

    LdMatrix ld;
    ld.snp_ids = std_geno.ids;
    const Eigen::MatrixXd cross = std_geno.matrix.transpose() * std_geno.matrix / static_cast<double>(n - 1);
    // a + b == b + a bitwise, so the average is exactly symmetric.
    ld.values = 0.5 * (cross + cross.transpose());
    ld.values = ld.values.cwiseMax(-1.0).cwiseMin(1.0);
    ld.values.diagonal().setOnes();
    ld.shrinkage = 0.0;
    return ld;
}

LdMatrix shrink_ld(const LdMatrix& ld, double lambda)
{
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw Error(ErrorCode::LambdaOutOfRange, "LD shrinkage must be in [0,1], got " + std::to_string(lambda));
    LdMatrix out = ld;
    if (lambda == 0.0)
        return out;
    out.values *= (1.0 - lambda);
    out.values.diagonal().setOnes();
    // Compound shrinkage: (1-b)((1-a)R + aI) + bI = (1-c)R + cI.
    out.shrinkage = 1.0 - (1.0 - ld.shrinkage) * (1.0 - lambda);
    return out;
}

Eigen::VectorXd ld_solve(const LdMatrix& ld, const Eigen::VectorXd& rhs)
{
    if (static_cast<std::size_t>(rhs.size()) != ld.size() || ld.values.rows() != rhs.size())
        throw Error(ErrorCode::DimensionMismatch, "LD is " + std::to_string(ld.size()) + " SNPs, rhs has " +
                                                      std::to_string(rhs.size()));
    Eigen::LLT<Eigen::MatrixXd> llt(ld.values);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::SingularMatrix,
                    "LD matrix is not positive definite (shrinkage " + std::to_string(ld.shrinkage) + ")");
    // Cholesky can "succeed" on a numerically singular matrix; the pivots tell.
    const auto& l = llt.matrixLLT();
    const double max_pivot = l.diagonal().maxCoeff();
    const double min_pivot = l.diagonal().minCoeff();
    if (!(min_pivot > max_pivot * 1e-7))
        throw Error(ErrorCode::SingularMatrix, "LD matrix is numerically singular (shrinkage " +
                                                   std::to_string(ld.shrinkage) + ")");

    Eigen::VectorXd x = llt.solve(rhs);
    x += llt.solve(rhs - ld.values * x);
    return x;
}

LdMatrix subset_ld(const LdMatrix& ld, std::span<const std::size_t> indices)
{
    LdMatrix out;
    out.shrinkage = ld.shrinkage;
    const auto k = static_cast<Eigen::Index>(indices.size());
    out.values.resize(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        out.snp_ids.push_back(ld.snp_ids.at(indices[static_cast<std::size_t>(a)]));
        for (Eigen::Index b = 0; b < k; ++b) {
            out.values(a, b) = ld.values(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(a)]),
                                         static_cast<Eigen::Index>(indices[static_cast<std::size_t>(b)]));
        }
    }
    return out;
}

void validate_ld(const LdMatrix& ld, const std::string& source)
{
    const auto p = static_cast<Eigen::Index>(ld.size());
    if (ld.values.rows() != p || ld.values.cols() != p)
        throw Error(ErrorCode::DimensionMismatch, source + ": LD matrix is not square over its SNP ids");
    for (Eigen::Index i = 0; i < p; ++i) {
        if (ld.values(i, i) != 1.0)
            throw Error(ErrorCode::ValueOutOfRange, source + ": diagonal entry for " +
                                                        ld.snp_ids[static_cast<std::size_t>(i)] + " is not 1");
        for (Eigen::Index j = 0; j < p; ++j) {
            const double v = ld.values(i, j);
            if (!(v >= -1.0 && v <= 1.0))
                throw Error(ErrorCode::ValueOutOfRange, source + ": entry (" + std::to_string(i + 1) + "," +
                                                            std::to_string(j + 1) + ") outside [-1,1]");
            if (std::abs(v - ld.values(j, i)) > 1e-12)
                throw Error(ErrorCode::ValueOutOfRange, source + ": matrix is not symmetric at (" +
                                                            std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
        }
    }
}

LdMatrix parse_ld_matrix(std::istream& in, const std::string& source)
{
    tsv::Reader reader(in, source);
    const auto& header = reader.header();
    if (header.front() != "SNP")
        throw Error(ErrorCode::MissingColumn, source + ":1: first column must be SNP");

    LdMatrix ld;
    ld.snp_ids.assign(header.begin() + 1, header.end());
    std::unordered_set<std::string> unique(ld.snp_ids.begin(), ld.snp_ids.end());
    if (unique.size() != ld.snp_ids.size())
        throw Error(ErrorCode::DuplicateSnp, source + ":1: repeated SNP id in header");

    const auto p = static_cast<Eigen::Index>(ld.snp_ids.size());
    ld.values.resize(p, p);
    Eigen::Index row = 0;
    while (reader.next()) {
        if (row >= p)
            throw Error(ErrorCode::DimensionMismatch, reader.where() + ": more rows than SNP columns");
        if (reader.fields()[0] != ld.snp_ids[static_cast<std::size_t>(row)])
            throw Error(ErrorCode::IdMismatch, reader.where() + ": row id " + std::string(reader.fields()[0]) +
                                                   " does not match column " + ld.snp_ids[static_cast<std::size_t>(row)]);
        for (Eigen::Index j = 0; j < p; ++j)
            ld.values(row, j) = reader.number(static_cast<std::size_t>(j + 1), header[static_cast<std::size_t>(j + 1)]);
        ++row;
    }
    if (row != p)
        throw Error(ErrorCode::DimensionMismatch, source + ": " + std::to_string(row) + " rows for " +
                                                      std::to_string(p) + " SNP columns");
    validate_ld(ld, source);
    return ld;
}

LdMatrix parse_ld_matrix(const std::filesystem::path& path)
{
    auto in = tsv::open_input(path);
    return parse_ld_matrix(in, path.string());
}

void write_ld_matrix(const LdMatrix& ld, std::ostream& out)
{
    out << "SNP";
    for (const auto& id : ld.snp_ids)
        out << '\t' << id;
    out << '\n';
    for (Eigen::Index i = 0; i < ld.values.rows(); ++i) {
        out << ld.snp_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < ld.values.cols(); ++j)
            out << '\t' << tsv::format_shortest(ld.values(i, j));
        out << '\n';
    }
}

void write_ld_matrix(const LdMatrix& ld, const std::filesystem::path& path)
{
    auto out = tsv::open_output(path);
    write_ld_matrix(ld, out);
}

} // namespace twas
