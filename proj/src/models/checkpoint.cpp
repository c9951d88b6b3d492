#include "bandbridge/models/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "bandbridge/core/error.hpp"
#include "bandbridge/models/model.hpp"

namespace bandbridge::models {

namespace {

constexpr std::array<char, 4> kMagic{'B', 'B', 'C', '1'};

class Writer {
 public:
  template <typename U>
  void put(U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> data) : bytes_(std::move(data)) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return value;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }
  const std::uint8_t* at(std::size_t offset) const { return bytes_.data() + offset; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError(IoError::Kind::CorruptHeader, "BBC1 header truncated");
  }
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelSpec& spec, const ParameterSet<float>& params,
                     std::uint32_t epoch) {
  Writer w;
  w.put_bytes(kMagic.data(), kMagic.size());
  w.put<std::uint16_t>(kCheckpointVersion);
  const std::string spec_json = to_json(spec).dump();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec_json.size()));
  w.put_bytes(spec_json.data(), spec_json.size());
  w.put<std::uint32_t>(epoch);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  std::uint64_t offset = 0;
  for (const auto& p : params.entries()) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(p.name.size()));
    w.put_bytes(p.name.data(), p.name.size());
    const auto& dims = p.value.shape().dims();
    w.put<std::uint8_t>(static_cast<std::uint8_t>(dims.size()));
    for (const auto d : dims) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.put<std::uint64_t>(offset);
    offset += p.value.numel() * 4;
  }
  for (const auto& p : params.entries()) {
    for (const float v : p.value.data()) w.put<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::Open, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(w.bytes.data()), static_cast<std::streamsize>(w.bytes.size()));
  if (!out) throw IoError(IoError::Kind::Write, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::Open, "cannot open checkpoint " + path.string());
  Reader r(std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {}));

  if (r.get_string(4) != std::string(kMagic.data(), kMagic.size())) {
    throw IoError(IoError::Kind::CorruptHeader, "bad BBC1 magic in " + path.string());
  }
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw IoError(IoError::Kind::UnknownVersion, "unsupported BBC1 version " + std::to_string(version));
  }
  Checkpoint ck;
  const auto spec_len = r.get<std::uint32_t>();
  try {
    ck.spec = model_spec_from_json(nlohmann::json::parse(r.get_string(spec_len)));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(IoError::Kind::CorruptHeader, std::string("BBC1 spec is not valid JSON: ") + e.what());
  }
  ck.epoch = r.get<std::uint32_t>();
  const auto count = r.get<std::uint32_t>();

  struct Entry {
    std::string name;
    ag::Shape shape;
    std::uint64_t offset;
  };
  std::vector<Entry> manifest;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.name = r.get_string(r.get<std::uint16_t>());
    const auto rank = r.get<std::uint8_t>();
    if (rank > ag::kMaxRank) throw IoError(IoError::Kind::CorruptHeader, "BBC1 rank too large for " + e.name);
    std::vector<std::size_t> dims;
    for (std::uint8_t k = 0; k < rank; ++k) dims.push_back(r.get<std::uint32_t>());
    try {
      e.shape = ag::Shape(dims);
    } catch (const ShapeError&) {
      throw IoError(IoError::Kind::CorruptHeader, "BBC1 invalid extents for " + e.name);
    }
    e.offset = r.get<std::uint64_t>();
    manifest.push_back(std::move(e));
  }

  const auto skeleton = build<float>(ck.spec);
  if (skeleton.size() != manifest.size()) {
    throw IoError(IoError::Kind::CorruptHeader, "BBC1 manifest does not match the architecture in its spec");
  }
  const std::size_t payload = r.position();
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& e = manifest[i];
    const auto& expected = skeleton.entries()[i];
    if (e.name != expected.name || e.shape != expected.value.shape()) {
      throw IoError(IoError::Kind::CorruptHeader, "BBC1 parameter " + e.name + " does not match architecture");
    }
    const std::size_t n = e.shape.numel();
    if (payload + e.offset + n * 4 > r.size()) {
      throw IoError(IoError::Kind::TruncatedPayload, "BBC1 payload truncated at " + e.name);
    }
    std::vector<float> values(n);
    const std::uint8_t* src = r.at(payload + e.offset);
    for (std::size_t k = 0; k < n; ++k) {
      std::uint32_t bits = 0;
      for (std::size_t b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(src[4 * k + b]) << (8 * b);
      values[k] = std::bit_cast<float>(bits);
    }
    ck.params.add(e.name, ag::Tensor<float>(e.shape, std::move(values), true), expected.init);
  }
  return ck;
}

}  // namespace bandbridge::models
