#pragma once

#include <string>
#include <string_view>

namespace setgen {

std::string sha1_hex(std::string_view data);
// Same digest as `git hash-object`.
std::string git_blob_hash(std::string_view content);
std::string git_file_hash(const std::string& path);

}  // namespace setgen
