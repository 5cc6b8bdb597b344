#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace spellscope {

std::string sha256_hex(std::string_view data);
/// Throws Error(Io) if the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace spellscope
