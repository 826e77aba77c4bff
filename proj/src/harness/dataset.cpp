#include "rgcnqa/harness/dataset.h"

#include <fstream>
#include <sstream>

namespace rgcnqa {

std::vector<Instance> parse_dataset(std::istream& in, const std::string& source_name,
                                    std::vector<std::string>* warnings) {
  std::vector<Instance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source_name + " line " + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(where + ": not valid JSON: " + e.what());
    }
    try {
      Instance inst = instance_from_json(rec);
      validate(inst);
      out.push_back(std::move(inst));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (out.empty() && warnings) warnings->push_back(source_name + ": dataset is empty");
  return out;
}

std::vector<Instance> load_dataset(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  return parse_dataset(in, path.string(), warnings);
}

std::string dataset_to_jsonl(const std::vector<Instance>& instances) {
  std::string out;
  for (const auto& inst : instances) out += instance_to_json(inst).dump() + "\n";
  return out;
}

void write_dataset(const std::filesystem::path& path, const std::vector<Instance>& instances) {
  write_text_file(path, dataset_to_jsonl(instances));
}

void write_text_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rgcnqa
