#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace intentscan::io {

// Whole-file read; throws ValidationError naming the path when it cannot be opened.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace intentscan::io
