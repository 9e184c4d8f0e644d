#pragma once

#include <string>

namespace lrdlab::detail {

/// Shortest round-trip decimal form with '.' as separator, locale-independent.
std::string format_double(double x);

/// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(const std::string& s);

}  // namespace lrdlab::detail
