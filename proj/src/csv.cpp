#include "specverse/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>

#include "specverse/error.hpp"

namespace specverse {

void split_line(std::string_view line, char delimiter, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delimiter, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

namespace {

void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace

DelimitedReader::DelimitedReader(std::istream& in, std::string source_name)
    : in_(in), source_(std::move(source_name)) {
    std::string line;
    if (!std::getline(in_, line)) {
        throw schema_error(source_ + ": empty file, header row required");
    }
    strip_cr(line);
    ++line_;
    delimiter_ = line.find('\t') != std::string::npos ? '\t' : ',';
    split_line(line, delimiter_, header_);
    for (auto& h : header_) {
        while (!h.empty() && (h.back() == ' ')) h.pop_back();
        while (!h.empty() && (h.front() == ' ')) h.erase(h.begin());
    }
}

std::optional<std::size_t> DelimitedReader::find_column(std::string_view name) const {
    auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header_.begin());
}

std::size_t DelimitedReader::require_column(std::string_view name) const {
    auto idx = find_column(name);
    if (!idx) {
        throw schema_error(source_ + ": missing required column '" + std::string(name) + "'");
    }
    return *idx;
}

bool DelimitedReader::next_row(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
        strip_cr(line);
        ++line_;
        if (line.empty()) continue;
        split_line(line, delimiter_, fields);
        if (fields.size() != header_.size()) {
            throw schema_error(source_ + ":" + std::to_string(line_) + ": expected " +
                               std::to_string(header_.size()) + " fields, got " +
                               std::to_string(fields.size()));
        }
        return true;
    }
    return false;
}

std::int64_t DelimitedReader::parse_int(const std::string& field, std::string_view column) const {
    std::int64_t value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw schema_error(source_ + ":" + std::to_string(line_) + ": column '" +
                           std::string(column) + "': not an integer: '" + field + "'");
    }
    return value;
}

double DelimitedReader::parse_double(const std::string& field, std::string_view column) const {
    double value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw schema_error(source_ + ":" + std::to_string(line_) + ": column '" +
                           std::string(column) + "': not a number: '" + field + "'");
    }
    return value;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

std::string format_rounded(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    // Normalize "-0.0000" to "0.0000" so rendered tables don't depend on the
    // sign of a rounded-away residual.
    std::string s(buf);
    bool all_zero = true;
    for (char c : s) {
        if (c >= '1' && c <= '9') { all_zero = false; break; }
    }
    if (all_zero && !s.empty() && s[0] == '-') s.erase(s.begin());
    return s;
}

std::string format_sig(double value, int digits) {
    if (std::isnan(value)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*e", digits - 1, value);
    std::string s(buf);
    if (s == "-0" || s.rfind("-0e", 0) == 0 || s.rfind("-0.", 0) == 0) {
        // normalize negative zero after rounding
        bool all_zero = true;
        for (char c : s)
            if (c >= '1' && c <= '9') { all_zero = false; break; }
        if (all_zero) s.erase(s.begin());
    }
    return s;
}

}  // namespace specverse
