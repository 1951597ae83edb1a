#ifndef VGE_IOUTIL_HPP
#define VGE_IOUTIL_HPP

#include <cstdint>
#include <string>

namespace vge {

// SHA-1 hex digest; content hashes follow the git blob convention
// sha1("blob <len>\0" + content) so they can be cross-checked with git.
std::string sha1_hex(const std::string& data);
std::string git_blob_hash(const std::string& content);

// All artifact writes go through write-temp-then-rename.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Fixed-format float for deterministic text artifacts.
std::string fmt_double(double v);

}  // namespace vge

#endif  // VGE_IOUTIL_HPP
