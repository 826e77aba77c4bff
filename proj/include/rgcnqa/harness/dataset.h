#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "rgcnqa/graphbuild/instance.h"

namespace rgcnqa {

/// Reads one instance record per line. Blank lines are skipped. Every record
/// is validated; the first bad one raises ValidationError naming its line
/// number and, when readable, its id. An empty source yields an empty list and
/// a warning appended to `warnings`.
std::vector<Instance> parse_dataset(std::istream& in, const std::string& source_name,
                                    std::vector<std::string>* warnings = nullptr);
std::vector<Instance> load_dataset(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// One compact record per line, in input order.
std::string dataset_to_jsonl(const std::vector<Instance>& instances);
void write_dataset(const std::filesystem::path& path, const std::vector<Instance>& instances);

/// Writes `bytes` to `path`, creating parent directories. Throws on I/O failure.
void write_text_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace rgcnqa
