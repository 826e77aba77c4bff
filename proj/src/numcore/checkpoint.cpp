#include "rgcnqa/numcore/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace rgcnqa {
namespace {

constexpr char kMagic[8] = {'R', 'G', 'C', 'N', 'Q', 'A', 'C', 'K'};

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(std::string("checkpoint truncated while reading ") + what + " at byte " + std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ParamSet& params, const std::string& metadata) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, metadata.size());
  out += metadata;
  put_le<std::uint64_t>(out, params.size());
  for (const auto& entry : params.entries()) {
    const Tensor& v = entry.param->value;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entry.name.size()));
    out += entry.name;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.rank()));
    for (std::size_t e : v.shape()) put_le<std::uint64_t>(out, e);
    for (double x : v.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(sizeof(kMagic), "magic") != std::string_view(kMagic, sizeof(kMagic))) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.metadata = in.take(in.get<std::uint64_t>("metadata length"), "metadata");
  const auto count = in.get<std::uint64_t>("tensor count");
  for (std::uint64_t k = 0; k < count; ++k) {
    std::string name = in.take(in.get<std::uint32_t>("name length"), "name");
    const auto rank = in.get<std::uint32_t>("rank");
    if (rank > 8) throw CheckpointError("tensor " + name + ": implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& e : shape) e = in.get<std::uint64_t>("extent");
    std::vector<double> data(shape_size(shape));
    if (data.size() > bytes.size()) throw CheckpointError("tensor " + name + ": payload larger than file");
    for (double& x : data) x = std::bit_cast<double>(in.get<std::uint64_t>("payload"));
    ck.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (!in.done()) throw CheckpointError("trailing bytes after last tensor");
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const ParamSet& params, const std::string& metadata) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_checkpoint(params, metadata);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

void load_params(ParamSet& params, const Checkpoint& checkpoint) {
  std::set<std::string> seen;
  for (const auto& [name, tensor] : checkpoint.tensors) {
    const Param* p = params.find(name);
    if (p == nullptr) throw CheckpointError("checkpoint tensor " + name + " has no matching parameter");
    if (p->value.shape() != tensor.shape()) {
      throw CheckpointError("checkpoint tensor " + name + " has shape " + shape_str(tensor.shape()) +
                            ", model expects " + shape_str(p->value.shape()));
    }
    if (!seen.insert(name).second) throw CheckpointError("duplicate checkpoint tensor " + name);
  }
  for (const auto& entry : params.entries()) {
    if (!seen.contains(entry.name)) throw CheckpointError("checkpoint lacks parameter " + entry.name);
  }
  for (const auto& [name, tensor] : checkpoint.tensors) params.at(name).value = tensor;
}

}  // namespace rgcnqa
