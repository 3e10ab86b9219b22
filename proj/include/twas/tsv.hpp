#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace twas::tsv {

std::vector<std::string_view> split(std::string_view line);

// Shortest decimal text that parses back to the same double.
std::string format_shortest(double value);

// printf-style "%.<digits-1>E", e.g. 4.92E-34 for three significant digits.
std::string format_scientific(double value, int significant_digits = 3);

std::string format_general(double value, int significant_digits = 6);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

// Header-driven reader. Lines are tab-separated; empty lines are skipped.
class Reader {
public:
    Reader(std::istream& in, std::string source);

    const std::vector<std::string>& header() const { return header_; }
    const std::string& source() const { return source_; }

    // Index of a header column; throws MissingColumn naming the column.
    std::size_t require(std::string_view column) const;
    std::optional<std::size_t> find(std::string_view column) const;

    // Advances to the next data row. Fields stay valid until the next call.
    bool next();
    const std::vector<std::string_view>& fields() const { return fields_; }
    std::size_t line_number() const { return line_number_; }

    // "file:line" prefix for error messages.
    std::string where() const;

    double number(std::size_t column, std::string_view name) const;
    std::int64_t integer(std::size_t column, std::string_view name) const;

private:
    std::istream& in_;
    std::string source_;
    std::vector<std::string> header_;
    std::unordered_map<std::string, std::size_t> columns_;
    std::string line_;
    std::vector<std::string_view> fields_;
    std::size_t line_number_ = 0;
};

std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

} // namespace twas::tsv
