#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace koop {

// Shortest decimal form that round-trips to the same double. All numeric
// output goes through this so repeated runs produce byte-identical files.
std::string format_double(double v);

// Strict double parse of a whole token; throws data_error on failure.
double parse_double(std::string_view token, const std::string& context);

long parse_long(std::string_view token, const std::string& context);

std::vector<std::string_view> split(std::string_view line, char sep);

std::string_view trim(std::string_view s);

std::string read_text_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view content);

} // namespace koop
