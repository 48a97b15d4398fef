#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lexemb {

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

struct FileDigest {
    std::string path;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

FileDigest digest_file(const std::string& path);

}  // namespace lexemb
