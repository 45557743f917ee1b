#pragma once

// Instance files. Only parameters and generator seeds are stored; tables are
// regenerated on load and checked against a stored digest. The byte layout is
// described in docs/instance-format.md.

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "osslab/oracles.hpp"

namespace osslab::oracles {

inline constexpr std::uint16_t kInstanceFormatVersion = 1;

using AnyInstance = std::variant<OssInstance, KeyFireInstance>;

std::vector<std::uint8_t> serialize_instance(const AnyInstance& instance);
/// Throws FormatError on truncation, bad magic, checksum or digest mismatch,
/// and VersionError on an unknown format version.
AnyInstance deserialize_instance(const std::vector<std::uint8_t>& bytes);

void save_instance(const AnyInstance& instance, const std::filesystem::path& path);
AnyInstance load_instance(const std::filesystem::path& path);

}  // namespace osslab::oracles
