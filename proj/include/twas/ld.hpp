#pragma once

#include "twas/ingest.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace twas {

// SNP-by-SNP correlation matrix, optionally shrunk toward the identity.
struct LdMatrix {
    std::vector<std::string> snp_ids;
    Eigen::MatrixXd values;
    double shrinkage = 0.0;

    std::size_t size() const { return snp_ids.size(); }
};

// Column-standardized genotypes (mean 0, sample variance 1).
struct StandardizedGenotypes {
    Eigen::MatrixXd matrix;
    std::vector<std::string> ids;          // retained columns
    std::vector<std::size_t> kept_columns; // their index in the input
    Eigen::VectorXd means;
    Eigen::VectorXd sds;
    std::vector<std::string> excluded_ids; // zero variance
};

// Sample (n-1) variance convention. Throws TooFewSamples when n < 2.
StandardizedGenotypes standardize_columns(const Eigen::MatrixXd& x, std::span<const std::string> ids);
StandardizedGenotypes standardize_columns(const GenotypePanel& panel);

// (1/(n-1)) X'X with exact unit diagonal. Throws EmptyPanel when no columns.
LdMatrix estimate_ld(const StandardizedGenotypes& std_geno);

// (1-lambda) R + lambda I. Throws LambdaOutOfRange outside [0,1].
LdMatrix shrink_ld(const LdMatrix& ld, double lambda);

// Solves R x = rhs by Cholesky with one refinement step. Throws
// SingularMatrix when R is not numerically positive definite.
Eigen::VectorXd ld_solve(const LdMatrix& ld, const Eigen::VectorXd& rhs);

// Principal submatrix over `indices`, in that order.
LdMatrix subset_ld(const LdMatrix& ld, std::span<const std::size_t> indices);

// Checks symmetry within 1e-12, unit diagonal and entries in [-1,1].
void validate_ld(const LdMatrix& ld, const std::string& source);

// Square TSV: header "SNP id1 id2 ...", then one row per SNP.
LdMatrix parse_ld_matrix(std::istream& in, const std::string& source);
LdMatrix parse_ld_matrix(const std::filesystem::path& path);
void write_ld_matrix(const LdMatrix& ld, std::ostream& out);
void write_ld_matrix(const LdMatrix& ld, const std::filesystem::path& path);

} // namespace twas
