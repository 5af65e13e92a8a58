#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace a2p::data {

enum class Split { Train, Val, Test };
const char* to_string(Split s);

struct ManifestEntry {
  std::string id;
  std::uint64_t seed = 0;
  Split split = Split::Train;
};

struct Manifest {
  std::vector<ManifestEntry> floors;
  std::vector<std::string> ids(Split s) const;
};

// Fixed split by position: the last `test` floors are test, the `val` before them validation.
Manifest make_manifest(const std::vector<std::pair<std::string, std::uint64_t>>& floors, std::size_t val,
                       std::size_t test);
void save_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace a2p::data
