#include "twas/tsv.hpp"

#include "twas/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>

namespace twas::tsv {

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return out;
}

std::string format_shortest(double value)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string format_scientific(double value, int significant_digits)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*E", significant_digits - 1, value);
    return buf;
}

std::string format_general(double value, int significant_digits)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, value);
    return buf;
}

std::optional<double> parse_double(std::string_view text)
{
    if (text.empty())
        return std::nullopt;
    if (text.front() == '+')
        text.remove_prefix(1);
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec == std::errc::result_out_of_range) {
        // Denormal underflow still parses with strtod.
        std::string copy(text);
        value = std::strtod(copy.c_str(), nullptr);
        return value;
    }
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        return std::nullopt;
    return value;
}

std::optional<std::int64_t> parse_int(std::string_view text)
{
    std::int64_t value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        return std::nullopt;
    return value;
}

namespace {

void strip_line_end(std::string& line)
{
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
        line.pop_back();
}

} // namespace

Reader::Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source))
{
    std::string line;
    while (std::getline(in_, line)) {
        ++line_number_;
        strip_line_end(line);
        if (line.empty())
            continue;
        for (auto field : split(line))
            header_.emplace_back(field);
        break;
    }
    if (header_.empty())
        throw Error(ErrorCode::MissingColumn, source_ + ": missing header row");
    for (std::size_t i = 0; i < header_.size(); ++i)
        columns_.emplace(header_[i], i);
}

std::optional<std::size_t> Reader::find(std::string_view column) const
{
    auto it = columns_.find(std::string(column));
    if (it == columns_.end())
        return std::nullopt;
    return it->second;
}

std::size_t Reader::require(std::string_view column) const
{
    auto idx = find(column);
    if (!idx)
        throw Error(ErrorCode::MissingColumn,
                    source_ + ":1: missing required column " + std::string(column));
    return *idx;
}

bool Reader::next()
{
    while (std::getline(in_, line_)) {
        ++line_number_;
        strip_line_end(line_);
        if (line_.empty())
            continue;
        fields_ = split(line_);
        if (fields_.size() != header_.size())
            throw Error(ErrorCode::RaggedRow, where() + ": expected " + std::to_string(header_.size()) +
                                                  " fields, found " + std::to_string(fields_.size()));
        return true;
    }
    return false;
}

std::string Reader::where() const
{
    return source_ + ":" + std::to_string(line_number_);
}

double Reader::number(std::size_t column, std::string_view name) const
{
    auto value = parse_double(fields_.at(column));
    if (!value)
        throw Error(ErrorCode::MalformedRecord,
                    where() + ": column " + std::string(name) + " is not a number: '" +
                        std::string(fields_.at(column)) + "'");
    return *value;
}

std::int64_t Reader::integer(std::size_t column, std::string_view name) const
{
    auto value = parse_int(fields_.at(column));
    if (!value)
        throw Error(ErrorCode::MalformedRecord,
                    where() + ": column " + std::string(name) + " is not an integer: '" +
                        std::string(fields_.at(column)) + "'");
    return *value;
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

} // namespace twas::tsv
