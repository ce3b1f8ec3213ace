#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace refcat {

// SHA-256 hex digests (OpenSSL backed); used for task fingerprints and
// reproducibility checks.
std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& p);

} // namespace refcat
