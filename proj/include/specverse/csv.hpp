#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace specverse {

// Minimal strict reader for the delimited formats this project speaks:
// UTF-8, one header row, comma or tab separated (auto-detected from the
// header), no quoting. Every parse failure reports file and line number.
class DelimitedReader {
public:
    DelimitedReader(std::istream& in, std::string source_name);

    char delimiter() const { return delimiter_; }
    const std::vector<std::string>& header() const { return header_; }

    // Column index, or nullopt when the header lacks it.
    std::optional<std::size_t> find_column(std::string_view name) const;
    // Same, but throws a schema error naming the file.
    std::size_t require_column(std::string_view name) const;

    // Reads the next data row into `fields`. Returns false at end of input.
    // Skips blank lines. Throws on a row whose field count differs from the
    // header's.
    bool next_row(std::vector<std::string>& fields);

    std::size_t line_number() const { return line_; }
    const std::string& source_name() const { return source_; }

    // Parse helpers that flag the offending file+line on failure.
    std::int64_t parse_int(const std::string& field, std::string_view column) const;
    double parse_double(const std::string& field, std::string_view column) const;

private:
    std::istream& in_;
    std::string source_;
    char delimiter_ = ',';
    std::vector<std::string> header_;
    std::size_t line_ = 0;
};

// Full-precision decimal formatting (shortest round-trip form), used for all
// machine-readable numeric output.
std::string format_double(double value);
std::string format_rounded(double value, int decimals);
// Rounds to `digits` significant digits; used where two runs must agree
// after last-ulp floating-point noise is discarded.
std::string format_sig(double value, int digits);

void split_line(std::string_view line, char delimiter, std::vector<std::string>& out);

}  // namespace specverse
