#pragma once

#include <string>

namespace kgres {

// Hex SHA-1 digest of the bytes.
std::string sha1_hex(const std::string& bytes);

// Git-style blob hash: sha1("blob <size>\0" + content).
std::string git_blob_hash(const std::string& content);

}  // namespace kgres
