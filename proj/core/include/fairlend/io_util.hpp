#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fairlend {

// Writes content to path atomically (temp file in the same directory, then
// rename) so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);  // throws on missing file
bool file_exists(const std::string& path);
void ensure_dir(const std::string& path);  // mkdir -p semantics

// FNV-1a over the canonical config string; names run directories.
uint64_t fnv1a(const std::string& s);
std::string hex64(uint64_t v);

// Shortest decimal representation that round-trips the double bit-exactly.
std::string format_double(double v);

// RFC-3339-ish local timestamp for manifests.
std::string timestamp_now();

// Minimal CSV assembly: quotes nothing (all our fields are numeric or simple
// identifiers), joins with commas.
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace fairlend
