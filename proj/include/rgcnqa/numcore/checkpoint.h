#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rgcnqa/numcore/param.h"

namespace rgcnqa {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint container, version 1, all integers little-endian:
///
///   "RGCNQACK"  u32 version  u64 metadata_len  metadata bytes  u64 tensor_count
///   per tensor: u32 name_len  name  u32 rank  u64 extent[rank]  f64 payload (row-major)
///
/// The metadata string carries the run configuration so a checkpoint can be
/// evaluated without its original config file.
struct Checkpoint {
  std::string metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const ParamSet& params, const std::string& metadata);
Checkpoint decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const ParamSet& params, const std::string& metadata);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint tensors into `params`. The name sets must match exactly
/// and every shape must agree; otherwise nothing is modified.
void load_params(ParamSet& params, const Checkpoint& checkpoint);

}  // namespace rgcnqa
