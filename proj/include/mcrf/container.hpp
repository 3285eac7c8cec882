#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mcrf::container {

inline constexpr std::uint32_t kVersion = 1;

// One named f64 tensor. data is row-major over dims.
struct Section {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> data;

  std::uint64_t element_count() const;
};

// Self-describing binary file: magic "MCRF", u32 version, u64 JSON length +
// JSON bytes, u32 section count, then per section u32 name length + name,
// u32 ndim, u64 dims, little-endian f64 payload.
struct Container {
  std::string config_json;
  std::vector<Section> sections;

  const Section* find(const std::string& name) const;
  Section& add(std::string name, std::vector<std::uint64_t> dims);
};

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);

// JSONL sidecar: one pre-serialized JSON object per line
void write_jsonl(const std::string& path, const std::vector<std::string>& lines);
std::vector<std::string> read_jsonl(const std::string& path);

}  // namespace mcrf::container
