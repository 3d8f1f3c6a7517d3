#pragma once

#include <filesystem>
#include <string>

namespace advca {

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written file. Throws IoError on I/O
// failure.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace advca
