#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lscl/types.hpp"

namespace lscl {

/// Reads a JSONL file of QASample records in file order. Validates every
/// record and rejects duplicate ids. Blank lines are skipped.
std::vector<QASample> load_dataset(const std::filesystem::path& path);

void write_dataset(const std::filesystem::path& path, std::span<const QASample> samples);

/// Source layouts accepted by import_external.
enum class ExternalFormat { MMedBench, Cflue };

ExternalFormat external_format_from_string(std::string_view name);

/// Converts a third-party benchmark file (MMedBench/CFLUE record shape) into
/// QASample values. Missing ids become "<prefix>-<line>".
std::vector<QASample> import_external(const std::filesystem::path& path, ExternalFormat format,
                                      const std::string& domain_tag, Split split,
                                      const std::string& id_prefix);

/// Writes `content` to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace lscl
