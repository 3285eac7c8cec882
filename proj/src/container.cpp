#include "mcrf/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "container i/o writes raw little-endian words");

namespace mcrf::container {
namespace {

constexpr char kMagic[4] = {'M', 'C', 'R', 'F'};
constexpr std::uint64_t kMaxElements = 1ull << 33;  // 64 GiB of f64 payload
constexpr std::uint64_t kMaxNameLen = 1u << 16;
constexpr std::uint64_t kMaxSections = 1u << 20;
constexpr std::uint64_t kMaxJsonLen = 1ull << 30;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated container");
  return v;
}

}  // namespace

std::uint64_t Section::element_count() const {
  std::uint64_t n = 1;
  for (std::uint64_t d : dims) {
    if (d == 0) return 0;
    if (n > kMaxElements / d) throw std::runtime_error("container section too large");
    n *= d;
  }
  return n;
}

const Section* Container::find(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

Section& Container::add(std::string name, std::vector<std::uint64_t> dims) {
  Section s;
  s.name = std::move(name);
  s.dims = std::move(dims);
  s.data.assign(s.element_count(), 0.0);
  sections.push_back(std::move(s));
  return sections.back();
}

void write_container(const std::string& path, const Container& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open container for writing: " + path);
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, c.config_json.size());
  out.write(c.config_json.data(), static_cast<std::streamsize>(c.config_json.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.sections.size()));
  for (const auto& s : c.sections) {
    if (s.data.size() != s.element_count())
      throw std::runtime_error("container section shape mismatch: " + s.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.dims.size()));
    for (std::uint64_t d : s.dims) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(s.data.data()),
              static_cast<std::streamsize>(s.data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("container write failed: " + path);
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open container: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("bad container magic");
  auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("unsupported container version");
  auto json_len = get<std::uint64_t>(in);
  if (json_len > kMaxJsonLen) throw std::runtime_error("container json too large");
  Container c;
  c.config_json.resize(json_len);
  in.read(c.config_json.data(), static_cast<std::streamsize>(json_len));
  if (!in) throw std::runtime_error("truncated container");
  auto n_sections = get<std::uint32_t>(in);
  if (n_sections > kMaxSections) throw std::runtime_error("container has too many sections");
  c.sections.reserve(n_sections);
  for (std::uint32_t i = 0; i < n_sections; ++i) {
    Section s;
    auto name_len = get<std::uint32_t>(in);
    if (name_len > kMaxNameLen) throw std::runtime_error("container section name too long");
    s.name.resize(name_len);
    in.read(s.name.data(), name_len);
    if (!in) throw std::runtime_error("truncated container");
    auto ndim = get<std::uint32_t>(in);
    if (ndim > 8) throw std::runtime_error("container section rank too high");
    s.dims.resize(ndim);
    for (auto& d : s.dims) d = get<std::uint64_t>(in);
    std::uint64_t count = s.element_count();
    s.data.resize(count);
    in.read(reinterpret_cast<char*>(s.data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("truncated container");
    c.sections.push_back(std::move(s));
  }
  return c;
}

void write_jsonl(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open jsonl for writing: " + path);
  for (const auto& line : lines) out << line << '\n';
  if (!out) throw std::runtime_error("jsonl write failed: " + path);
}

std::vector<std::string> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open jsonl: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace mcrf::container
