#include "osslab/persistence.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>

namespace osslab::oracles {
namespace {

constexpr std::array<char, 8> kMagic{'O', 'S', 'S', 'L', 'A', 'B', 'I', 'N'};
constexpr std::uint16_t kKindOss = 1;
constexpr std::uint16_t kKindKeyFire = 2;
// magic + version + kind + 7 u32 + 5 u64 seeds + digest + checksum
constexpr std::size_t kFileSize = 8 + 2 + 2 + 7 * 4 + 5 * 8 + 8 + 8;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
    }
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw FormatError("instance file is truncated");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::uint64_t checksum(const std::uint8_t* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<std::uint8_t> serialize_instance(const AnyInstance& instance) {
  Writer w;
  for (char c : kMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kInstanceFormatVersion);
  KeyFireParams kp;
  KeyFireSeeds ks;
  std::uint64_t digest = 0;
  std::uint16_t kind = 0;
  if (const auto* oss = std::get_if<OssInstance>(&instance)) {
    kind = kKindOss;
    kp = KeyFireParams{oss->params(), 0, 0, 0, 0};
    ks.oss = oss->seeds();
    digest = oss->table_digest();
  } else {
    const auto& kf = std::get<KeyFireInstance>(instance);
    kind = kKindKeyFire;
    kp = kf.params();
    ks = kf.seeds();
    digest = kf.table_digest();
  }
  w.put(kind);
  for (int v : {kp.oss.n, kp.oss.r, kp.oss.k, kp.att, kp.sig, kp.nu, kp.jmax}) {
    w.put(static_cast<std::uint32_t>(v));
  }
  for (std::uint64_t s : {ks.oss.permutation, ks.oss.matrices, ks.h0, ks.h1, ks.hsig}) w.put(s);
  w.put(digest);
  w.put(checksum(w.bytes().data(), w.bytes().size()));
  return std::move(w.bytes());
}

AnyInstance deserialize_instance(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagic.size() || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError("not an instance file (bad magic)");
  }
  Reader rd(bytes);
  for (std::size_t i = 0; i < kMagic.size(); ++i) rd.get<std::uint8_t>();
  const auto version = rd.get<std::uint16_t>();
  if (version != kInstanceFormatVersion) {
    throw VersionError("unsupported instance format version " + std::to_string(version));
  }
  if (bytes.size() != kFileSize) {
    throw FormatError(bytes.size() < kFileSize ? "instance file is truncated"
                                               : "instance file has trailing bytes");
  }
  if (checksum(bytes.data(), kFileSize - 8) !=
      [&] {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[kFileSize - 8 + i]) << (8 * i);
        return v;
      }()) {
    throw FormatError("instance file checksum mismatch");
  }
  const auto kind = rd.get<std::uint16_t>();
  KeyFireParams kp;
  kp.oss.n = static_cast<int>(rd.get<std::uint32_t>());
  kp.oss.r = static_cast<int>(rd.get<std::uint32_t>());
  kp.oss.k = static_cast<int>(rd.get<std::uint32_t>());
  kp.att = static_cast<int>(rd.get<std::uint32_t>());
  kp.sig = static_cast<int>(rd.get<std::uint32_t>());
  kp.nu = static_cast<int>(rd.get<std::uint32_t>());
  kp.jmax = static_cast<int>(rd.get<std::uint32_t>());
  KeyFireSeeds ks;
  ks.oss.permutation = rd.get<std::uint64_t>();
  ks.oss.matrices = rd.get<std::uint64_t>();
  ks.h0 = rd.get<std::uint64_t>();
  ks.h1 = rd.get<std::uint64_t>();
  ks.hsig = rd.get<std::uint64_t>();
  const auto digest = rd.get<std::uint64_t>();

  AnyInstance out = [&]() -> AnyInstance {
    try {
      if (kind == kKindOss) return make_oss_instance(kp.oss, ks.oss);
      if (kind == kKindKeyFire) return make_keyfire_instance(kp, ks);
    } catch (const ParameterError& e) {
      throw FormatError(std::string("instance file holds invalid parameters: ") + e.what());
    }
    throw FormatError("unknown instance kind " + std::to_string(kind));
  }();
  const std::uint64_t actual = std::visit([](const auto& i) { return i.table_digest(); }, out);
  if (actual != digest) throw FormatError("regenerated tables do not match the stored digest");
  return out;
}

void save_instance(const AnyInstance& instance, const std::filesystem::path& path) {
  const auto bytes = serialize_instance(instance);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

AnyInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_instance(bytes);
}

}  // namespace osslab::oracles
