#pragma once

#include <array>
#include <string>
#include <string_view>

namespace gangs {

using Vec2 = std::array<double, 2>;

/// Shortest decimal string that round-trips back to exactly the same double.
/// All file and terminal output of numeric values goes through this, so that
/// identical runs produce byte-identical artifacts.
std::string format_double(double v);

/// Inverse of format_double. Throws std::invalid_argument if `s` is not a
/// full, valid decimal or scientific literal.
double parse_double(std::string_view s);

}  // namespace gangs
