#include "ccra/tensor_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "ccra/errors.hpp"

namespace ccra {

namespace {

constexpr char kMagic[4] = {'C', 'T', '1', '\0'};

void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void atomic_write(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

}  // namespace

Tensor read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor file " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 8 || std::memcmp(p, kMagic, 4) != 0) {
    throw IoError("bad magic in tensor file " + path);
  }
  const std::uint32_t rank = get_u32_le(p + 4);
  const std::size_t header = 8 + static_cast<std::size_t>(rank) * 4;
  if (rank == 0 || bytes.size() < header) {
    throw IoError("truncated tensor header in " + path);
  }
  std::vector<std::size_t> shape(rank);
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    shape[i] = get_u32_le(p + 8 + i * 4);
    if (shape[i] == 0) throw IoError("zero extent in tensor file " + path);
    count *= shape[i];
  }
  if (bytes.size() != header + count * 4) {
    throw IoError("tensor payload size mismatch in " + path);
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t raw = get_u32_le(p + header + i * 4);
    float f;
    std::memcpy(&f, &raw, 4);
    data[i] = static_cast<double>(f);
  }
  try {
    return Tensor(std::move(shape), std::move(data));
  } catch (const Error& e) {
    throw IoError("invalid tensor in " + path + ": " + e.what());
  }
}

void write_tensor_file(const std::string& path, const Tensor& t) {
  std::string bytes;
  bytes.reserve(8 + t.ndim() * 4 + t.size() * 4);
  bytes.append(kMagic, 4);
  put_u32_le(bytes, static_cast<std::uint32_t>(t.ndim()));
  for (std::size_t e : t.shape()) put_u32_le(bytes, static_cast<std::uint32_t>(e));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const float f = static_cast<float>(t[i]);
    std::uint32_t raw;
    std::memcpy(&raw, &f, 4);
    put_u32_le(bytes, raw);
  }
  atomic_write(path, bytes);
}

void write_text_file(const std::string& path, const std::string& content) {
  atomic_write(path, content);
}

}  // namespace ccra
