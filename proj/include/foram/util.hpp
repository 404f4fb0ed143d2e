#pragma once

#include <cstdint>
#include <string>

namespace foram {

// Writes via a temp file in the same directory, then renames.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

std::uint64_t hash_file(const std::string& path);

}  // namespace foram
