// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/serialize.hpp"

#include <cstring>
#include <fstream>

#include "amodal/errors.hpp"

namespace amodal {

namespace {

constexpr char kMagic[4] = {'A', 'M', 'A', 'R'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_archive(const std::filesystem::path& path,
                  const std::string& meta_json,
                  const std::vector<std::pair<std::string, const Tensor*>>&
                      arrays) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_archive: cannot open " + path.string());
  out.write(kMagic, 4);
  write_pod(out, kArchiveVersion);
  write_pod(out, static_cast<uint64_t>(meta_json.size()));
  out.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));
  write_pod(out, static_cast<uint64_t>(arrays.size()));
  for (const auto& [name, tensor] : arrays) {
    write_pod(out, static_cast<uint64_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<int32_t>(tensor->dims[0]));
    write_pod(out, static_cast<int32_t>(tensor->dims[1]));
    write_pod(out, static_cast<int32_t>(tensor->dims[2]));
    out.write(reinterpret_cast<const char*>(tensor->data.data()),
              static_cast<std::streamsize>(tensor->data.size() *
                                           sizeof(double)));
  }
  if (!out) throw IoError("save_archive: write failed for " + path.string());
}

Archive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_archive: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("load_archive: bad magic in " + path.string());
  }
  Archive ar;
  ar.version = read_pod<uint32_t>(in);
  if (ar.version != kArchiveVersion) {
    throw IoError("load_archive: unsupported version " +
                  std::to_string(ar.version) + " in " + path.string());
  }
  const auto meta_len = read_pod<uint64_t>(in);
  ar.meta_json.resize(meta_len);
  in.read(ar.meta_json.data(), static_cast<std::streamsize>(meta_len));
  const auto count = read_pod<uint64_t>(in);
  for (uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<uint64_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    Tensor t;
    t.dims[0] = read_pod<int32_t>(in);
    t.dims[1] = read_pod<int32_t>(in);
    t.dims[2] = read_pod<int32_t>(in);
    t.data.resize(static_cast<size_t>(t.dims[0]) * t.dims[1] * t.dims[2]);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    ar.arrays.emplace(std::move(name), std::move(t));
  }
  if (!in) throw IoError("load_archive: truncated archive " + path.string());
  return ar;
}

}  // namespace amodal
