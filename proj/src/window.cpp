#include "specverse/window.hpp"

#include <charconv>

#include "specverse/error.hpp"

namespace specverse {

WindowSpec WindowSpec::years(int t) {
    if (t < 0) throw validation_error("years window needs t >= 0");
    return WindowSpec{Kind::years, t};
}

WindowSpec WindowSpec::horizon(int year) { return WindowSpec{Kind::horizon, year}; }

std::string WindowSpec::to_string() const {
    if (kind == Kind::years) return std::to_string(value) + "y";
    return "horizon:" + std::to_string(value);
}

WindowSpec WindowSpec::parse(std::string_view text) {
    auto parse_int = [&](std::string_view s) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw schema_error("bad window spec: '" + std::string(text) + "'");
        }
        return v;
    };
    if (text.rfind("horizon:", 0) == 0) return horizon(parse_int(text.substr(8)));
    if (!text.empty() && text.back() == 'y') return years(parse_int(text.substr(0, text.size() - 1)));
    return years(parse_int(text));
}

}  // namespace specverse
