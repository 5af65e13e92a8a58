#include "a2p/dataio/manifest.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace a2p::data {

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

namespace {
Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + s + "'");
}
}  // namespace

std::vector<std::string> Manifest::ids(Split s) const {
  std::vector<std::string> out;
  for (const auto& f : floors)
    if (f.split == s) out.push_back(f.id);
  return out;
}

Manifest make_manifest(const std::vector<std::pair<std::string, std::uint64_t>>& floors, std::size_t val,
                       std::size_t test) {
  if (val + test > floors.size()) throw std::invalid_argument("manifest: split sizes exceed floor count");
  Manifest m;
  const std::size_t n = floors.size();
  for (std::size_t i = 0; i < n; ++i) {
    Split s = Split::Train;
    if (i >= n - test) s = Split::Test;
    else if (i >= n - test - val) s = Split::Val;
    m.floors.push_back({floors[i].first, floors[i].second, s});
  }
  return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  nlohmann::json j;
  auto& arr = j["floors"] = nlohmann::json::array();
  for (const auto& f : m.floors) arr.push_back({{"id", f.id}, {"seed", f.seed}, {"split", to_string(f.split)}});
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write manifest: " + path.string());
  os << j.dump(1) << '\n';
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path.string());
  const auto j = nlohmann::json::parse(is);
  Manifest m;
  for (const auto& f : j.at("floors"))
    m.floors.push_back({f.at("id").get<std::string>(), f.at("seed").get<std::uint64_t>(),
                        parse_split(f.at("split").get<std::string>())});
  return m;
}

}  // namespace a2p::data
