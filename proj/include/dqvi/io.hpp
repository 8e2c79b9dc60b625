#pragma once

#include <string>

namespace dqvi {

/// Fixed float formatting for CSV artifacts: 17 significant digits, '.'
/// separator, locale-independent. Identical inputs yield identical bytes.
std::string format_g17(double x);

/// Writes text to path with '\n' line endings, creating parents as needed.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dqvi
