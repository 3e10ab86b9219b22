#pragma once

#include "twas/mtp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

namespace testing {

struct PublishedRow {
    const char* gene;
    int chrom;
    const char* tissue;
    double p;
    double z;
};

// Genes passing the 0.05/15000 Bonferroni cut. Two tissue cells are
// repaired from a wrapped line of the source table.
inline const std::vector<PublishedRow> kBonferroniHits{
    {"PVRL2", 19, "Brain (CMC) RNA-seq", 4.92E-34, -12.1626},
    {"TOMM40", 19, "Whole Blood (YFS) RNA Array", 1.13E-25, 10.4749},
    {"CLPTM1", 19, "Brain (CMC) RNA-seq", 5.73E-17, -8.37061},
    {"CLU", 8, "Brain (CMC) RNA-seq splicing", 1.45E-16, -8.26075},
    {"CR1", 1, "Brain (CMC) RNA-seq", 4.08E-15, 7.8523},
    {"CEACAM19", 19, "Adipose (METSIM) RNA-seq", 3.38E-11, 6.62905},
    {"MS4A6A", 11, "Whole Blood (YFS) RNA Array", 2.92E-10, 6.30316},
    {"TRPC4AP", 20, "Brain (CMC) RNA-seq splicing", 9.43E-10, 6.1188},
    {"MLH3", 14, "Brain (CMC) RNA-seq splicing", 7.86E-09, -5.77148},
    {"MS4A6A", 11, "Peripheral Blood (NTR) RNA Array", 5.72E-08, 5.4272},
    {"PTK2B", 8, "Peripheral Blood (NTR) RNA Array", 9.93E-08, 5.32809},
    {"PVR", 19, "Brain (CMC) RNA-seq", 2.05E-07, -5.19443},
    {"PICALM", 11, "Peripheral Blood (NTR) RNA Array", 2.84E-07, 5.1337},
    {"MS4A4A", 11, "Adipose (METSIM) RNA-seq", 6.11E-07, 4.99},
    {"BIN1", 2, "Whole Blood (YFS) RNA Array", 1.18E-06, 4.859114},
    {"FNBP4", 11, "Whole Blood (YFS) RNA Array", 1.49E-06, -4.81307},
    {"PTK2B", 8, "Whole Blood (YFS) RNA Array", 2.89E-06, 4.6784},
    {"BIN1", 2, "Peripheral Blood (NTR) RNA Array", 3.24E-06, 4.65503},
};

// Additional genes passing Benjamini-Hochberg at 0.05.
inline const std::vector<PublishedRow> kBhAdditionalHits{
    {"PHACTR1", 6, "Whole Blood (YFS) RNA Array", 3.41E-06, -4.64434},
    {"PTPMT1", 11, "Whole Blood (YFS) RNA Array", 4.45E-06, 4.58895},
    {"MTCH2", 11, "Peripheral Blood (NTR) RNA Array", 5.76E-06, 4.535},
    {"C1QTNF4", 11, "Adipose (METSIM) RNA-seq", 8.82E-06, 4.44},
    {"FAM180B", 11, "Brain (CMC) RNA-seq", 1.09E-05, -4.39814},
    {"DMWD", 19, "Whole Blood (YFS) RNA Array", 1.22E-05, 4.3733},
    {"ELL", 19, "Whole Blood (YFS) RNA Array", 1.89E-05, 4.277},
    {"ZNF740", 12, "Brain (CMC) RNA-seq splicing", 2.08E-05, 4.25599},
    {"NYAP1", 7, "Adipose (METSIM) RNA-seq", 2.47E-05, -4.21777},
    {"SDAD1", 4, "Whole Blood (YFS) RNA Array", 3.04E-05, -4.17062},
    {"MTSS1L", 16, "Brain (CMC) RNA-seq splicing", 3.35E-05, 4.14833},
    {"PHKB", 16, "Brain (CMC) RNA-seq", 3.70E-05, -4.1257},
    {"SLC39A13", 11, "Brain (CMC) RNA-seq splicing", 4.01E-05, -4.10667},
    {"CD33", 19, "Whole Blood (YFS) RNA Array", 4.04E-05, 4.1051},
    {"AP2A2", 11, "Brain (CMC) RNA-seq", 4.28E-05, -4.09193},
    {"ZYX", 7, "Adipose (METSIM) RNA-seq", 4.56E-05, -4.07718},
    {"ZNF232", 17, "Brain (CMC) RNA-seq splicing", 4.73E-05, -4.0688},
    {"ZNF232", 17, "Brain (CMC) RNA-seq splicing", 4.76E-05, 4.0671},
    {"DLST", 14, "Peripheral Blood (NTR) RNA Array", 5.26E-05, 4.0436},
    {"TBC1D7", 6, "Adipose (METSIM) RNA-seq", 5.34E-05, 4.0403},
    {"ELL", 19, "Adipose (METSIM) RNA-seq", 5.48E-05, 4.03401},
    {"SLC39A13", 11, "Brain (CMC) RNA-seq splicing", 5.79E-05, -4.02128},
    {"TMCO6", 5, "Whole Blood (YFS) RNA Array", 6.50E-05, 3.9938},
    {"CEL", 9, "Whole Blood (YFS) RNA Array", 6.99E-05, 3.97671},
    {"MYBPC3", 11, "Adipose (METSIM) RNA-seq", 7.05E-05, 3.97},
    {"TBC1D7", 6, "Brain (CMC) RNA-seq splicing", 7.48E-05, -3.96063},
    {"LRRC25", 19, "Peripheral Blood (NTR) RNA Array", 7.74E-05, -3.9523},
    {"TBC1D7", 6, "Brain (CMC) RNA-seq splicing", 8.37E-05, 3.93351},
    {"KIR3DX1", 19, "Peripheral Blood (NTR) RNA Array", 8.87E-05, 3.9195},
    {"SIX5", 19, "Peripheral Blood (NTR) RNA Array", 9.32E-05, 3.9076},
    {"HBEGF", 5, "Whole Blood (YFS) RNA Array", 9.92E-05, -3.8926},
    {"NUP88", 17, "Peripheral Blood (NTR) RNA Array", 1.60E-04, -3.7748},
    {"FAM105B", 5, "Whole Blood (YFS) RNA Array", 1.61E-04, 3.773},
    {"ARL6IP4", 12, "Peripheral Blood (NTR) RNA Array", 2.10E-04, 3.707},
};

inline std::vector<twas::AnnotatedResult> as_results(const std::vector<PublishedRow>& rows)
{
    std::vector<twas::AnnotatedResult> out;
    for (const auto& r : rows) {
        twas::AnnotatedResult a;
        a.result.gene = r.gene;
        a.result.tissue = r.tissue;
        a.result.chrom = r.chrom;
        a.result.n_snps_used = 1;
        a.result.model = twas::ModelKind::elastic_net;
        a.result.z_twas = r.z;
        a.result.p = r.p;
        a.result.log10_p = std::log10(r.p);
        a.result.status = twas::TestStatus::ok;
        out.push_back(a);
    }
    return out;
}

// Correlation matrix of a random n x p Gaussian sample with AR-like mixing.
inline Eigen::MatrixXd random_correlation(std::mt19937_64& gen, int p, int n = 0)
{
    if (n == 0)
        n = 3 * p + 10;
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
        double prev = normal(gen);
        for (int j = 0; j < p; ++j) {
            prev = 0.6 * prev + 0.8 * normal(gen);
            x(i, j) = prev;
        }
    }
    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / double(n - 1);
    Eigen::VectorXd inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
    corr = 0.5 * (corr + corr.transpose()).eval();
    corr.diagonal().setOnes();
    return corr;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& gen, int p)
{
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(p);
    for (int j = 0; j < p; ++j)
        v(j) = normal(gen);
    return v;
}

// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("twas_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace testing
