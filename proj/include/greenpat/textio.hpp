#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace greenpat {

// Minimal RFC 4180 CSV support: quoted fields, doubled quotes, CRLF tolerated.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // Reads the next record; returns false at end of input. line() is the
    // 1-based physical line where the record started.
    bool next(std::vector<std::string>& fields);
    std::size_t line() const { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t record_line_ = 0;
};

std::string csv_escape(std::string_view field);
std::string csv_join(const std::vector<std::string>& fields);

// Shortest round-trip representation; "" for nullopt.
std::string format_double(double v);
std::string format_optional(const std::optional<double>& v);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace greenpat
