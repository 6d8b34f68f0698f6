#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace planforge {

/// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

std::string_view trim(std::string_view text);

std::vector<std::string_view> split_lines(std::string_view text);

/// Shortest decimal form that parses back to the same double.
std::string format_number(double value);

/// Replaces each `{name}` whose name appears in `values`. Other braces are
/// left untouched and substituted text is never rescanned.
std::string render_template(
    std::string_view tmpl,
    const std::vector<std::pair<std::string_view, std::string_view>>& values);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace planforge
