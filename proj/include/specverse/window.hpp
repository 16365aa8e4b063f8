#pragma once

#include <string>
#include <string_view>

namespace specverse {

// Citation window: either a fixed number of years after the focal paper's
// publication (inclusive of the publication year itself) or a calendar
// horizon admitting every citer published up to that year.
struct WindowSpec {
    enum class Kind { years, horizon };

    Kind kind = Kind::horizon;
    int value = 0;  // t for `years`, calendar year for `horizon`

    static WindowSpec years(int t);
    static WindowSpec horizon(int year);

    bool admits(int focal_year, int citer_year) const {
        if (kind == Kind::years) {
            const int dy = citer_year - focal_year;
            return dy >= 0 && dy <= value;
        }
        return citer_year <= value;
    }

    // "5y" / "horizon:2023"; parse accepts both plus a bare integer as years.
    std::string to_string() const;
    static WindowSpec parse(std::string_view text);

    bool operator==(const WindowSpec&) const = default;
};

}  // namespace specverse
