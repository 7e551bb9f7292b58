#pragma once

#include "error.hpp"
#include "point_cloud.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace mfscope {

static_assert(std::endian::native == std::endian::little,
              "binary point files are read and written as native little-endian");

enum class FileFormat { csv, binary };

inline std::optional<FileFormat> parse_format(std::string_view name) noexcept
{
    if (name == "csv")
        return FileFormat::csv;
    if (name == "bin" || name == "binary")
        return FileFormat::binary;
    return std::nullopt;
}

inline constexpr std::array<char, 8> binary_magic{'M', 'F', 'S', 'C', 'O', 'P', 'E', '1'};

/// Shortest text that reads back bit-identically is not required here; 17
/// significant digits always round-trip a binary64.
inline std::string format_double(double value)
{
    std::array<char, 40> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                   std::chars_format::general, 17);
    return std::string(buf.data(), end);
}

namespace detail {

[[noreturn]] inline void throw_io(const std::filesystem::path& path, const char* action)
{
    throw Error(ErrorKind::io, std::string("cannot ") + action + " '" + path.string() +
                                   "': " + std::strerror(errno));
}

inline PointCloud read_csv(std::istream& in, bool skip_header, const std::string& provenance)
{
    std::vector<double> values;
    std::size_t width = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::string line;

    while (std::getline(in, line)) {
        ++line_no;
        if (skip_header && line_no == 1)
            continue;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;

        std::size_t column = 0;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::size_t stop = comma == std::string::npos ? line.size() : comma;
            ++column;
            std::string_view field(line.data() + start, stop - start);
            while (!field.empty() && field.front() == ' ')
                field.remove_prefix(1);
            while (!field.empty() && field.back() == ' ')
                field.remove_suffix(1);
            if (!field.empty() && field.front() == '+')
                field.remove_prefix(1);

            double value = 0.0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
            if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
                throw ParseError(line_no, column, "not a number: '" + std::string(field) + "'");
            if (!std::isfinite(value))
                throw ParseError(line_no, column, "non-finite value");
            values.push_back(value);

            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        if (rows == 0)
            width = column;
        else if (column != width)
            throw ParseError(line_no, std::min(column, width) + 1,
                             "ragged row: expected " + std::to_string(width) + " fields, got " +
                                 std::to_string(column));
        ++rows;
    }
    if (rows == 0)
        throw Error(ErrorKind::empty_input, "no data rows in '" + provenance + "'");

    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
    std::memcpy(m.data(), values.data(), values.size() * sizeof(double));
    return PointCloud(std::move(m), provenance);
}

inline PointCloud read_binary(std::istream& in, const std::string& provenance)
{
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size())) {
        if (in.gcount() == 0)
            throw Error(ErrorKind::empty_input, "empty binary file '" + provenance + "'");
        throw Error(ErrorKind::parse, "truncated header in '" + provenance + "'");
    }
    if (magic != binary_magic)
        throw Error(ErrorKind::parse, "bad magic in '" + provenance + "'");
    std::uint64_t n = 0;
    std::uint64_t d = 0;
    if (!in.read(reinterpret_cast<char*>(&n), 8) || !in.read(reinterpret_cast<char*>(&d), 8))
        throw Error(ErrorKind::parse, "truncated header in '" + provenance + "'");
    if (n == 0 || d == 0)
        throw Error(ErrorKind::empty_input, "binary file declares N=0 or D=0");
    if (d > (std::uint64_t{1} << 32) || n > (std::uint64_t{1} << 40) / d)
        throw Error(ErrorKind::parse, "implausible dimensions in header");

    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    const auto bytes = static_cast<std::streamsize>(n * d * sizeof(double));
    if (!in.read(reinterpret_cast<char*>(m.data()), bytes))
        throw Error(ErrorKind::parse, "truncated payload in '" + provenance + "'");
    if (in.peek() != std::char_traits<char>::eof())
        throw Error(ErrorKind::parse, "trailing bytes after payload in '" + provenance + "'");
    for (std::uint64_t i = 0; i < n; ++i)
        for (std::uint64_t c = 0; c < d; ++c)
            if (!std::isfinite(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c))))
                throw ParseError(i + 1, c + 1, "non-finite value");
    return PointCloud(std::move(m), provenance);
}

} // namespace detail

inline PointCloud load_points(const std::filesystem::path& path, FileFormat format,
                              bool skip_header = false)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        detail::throw_io(path, "open");
    return format == FileFormat::csv ? detail::read_csv(in, skip_header, path.string())
                                     : detail::read_binary(in, path.string());
}

inline void write_csv(std::ostream& out, const PointCloud& cloud)
{
    const Matrix& m = cloud.points();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c)
                out << ',';
            out << format_double(m(i, c));
        }
        out << '\n';
    }
}

inline void write_binary(std::ostream& out, const PointCloud& cloud)
{
    const Matrix& m = cloud.points();
    const std::uint64_t n = cloud.size();
    const std::uint64_t d = cloud.dim();
    out.write(binary_magic.data(), binary_magic.size());
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&d), 8);
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(n * d * sizeof(double)));
}

inline void save_points(const PointCloud& cloud, const std::filesystem::path& path, FileFormat format)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        detail::throw_io(path, "create");
    if (format == FileFormat::csv)
        write_csv(out, cloud);
    else
        write_binary(out, cloud);
    out.flush();
    if (!out)
        detail::throw_io(path, "write");
}

} // namespace mfscope
