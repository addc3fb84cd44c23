// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oats/tensor.hpp"

namespace oats {

/// Raised on any archive format violation; `byte_offset` locates the
/// problem in the file.
class ArchiveError : public std::runtime_error {
 public:
  ArchiveError(const std::string& msg, std::uint64_t offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
  std::uint64_t byte_offset;
};

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot open \"" + path.string() + "\"", 0);
  in.seekg(0, std::ios::end);
  const auto len = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(len);
  if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(len));
  if (!in) throw ArchiveError("read failure on \"" + path.string() + "\"", 0);
  return bytes;
}

}  // namespace detail

/// File layout: u64-LE header length H, then H bytes of UTF-8 JSON mapping
/// tensor name -> {dtype, shape, data_offsets} (plus optional "__metadata__"),
/// then the concatenated raw payloads. Offsets are relative to the end of
/// the header.
inline TensorArchive read_archive(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  if (bytes.size() < 8)
    throw ArchiveError("truncated file: missing header length", bytes.size());

  std::uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | bytes[static_cast<std::size_t>(i)];
  if (bytes.size() < 8 + header_len)
    throw ArchiveError("truncated file: header declares " + std::to_string(header_len) +
                           " bytes past end",
                       bytes.size());

  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw ArchiveError(std::string("malformed header JSON: ") + e.what(), 8 + e.byte - 1);
  }
  if (!header.is_object()) throw ArchiveError("header JSON is not an object", 8);

  const std::uint64_t data_begin = 8 + header_len;
  const std::uint64_t data_size = bytes.size() - data_begin;

  TensorArchive archive;
  struct Span {
    std::uint64_t begin, end;
    std::string name;
  };
  std::vector<Span> spans;

  for (const auto& [key, entry] : header.items()) {
    if (key == "__metadata__") {
      if (!entry.is_object())
        throw ArchiveError("__metadata__ is not an object", 8);
      for (const auto& [mk, mv] : entry.items()) {
        if (!mv.is_string()) throw ArchiveError("__metadata__ value for \"" + mk + "\" is not a string", 8);
        archive.metadata.emplace(mk, mv.get<std::string>());
      }
      continue;
    }
    if (!entry.is_object() || !entry.contains("dtype") || !entry.contains("shape") ||
        !entry.contains("data_offsets"))
      throw ArchiveError("tensor \"" + key + "\": entry missing dtype/shape/data_offsets", 8);

    const std::string dtype_str = entry["dtype"].get<std::string>();
    if (!dtype_known(dtype_str))
      throw ArchiveError("tensor \"" + key + "\": unsupported dtype \"" + dtype_str + "\"", 8);

    NamedTensor t;
    t.name = key;
    t.dtype = dtype_from_name(dtype_str);
    for (const auto& d : entry["shape"]) {
      if (!d.is_number_unsigned())
        throw ArchiveError("tensor \"" + key + "\": shape entries must be non-negative integers", 8);
      t.shape.push_back(d.get<std::size_t>());
    }
    const auto& off = entry["data_offsets"];
    if (!off.is_array() || off.size() != 2)
      throw ArchiveError("tensor \"" + key + "\": data_offsets must be [begin, end]", 8);
    const std::uint64_t begin = off[0].get<std::uint64_t>();
    const std::uint64_t end = off[1].get<std::uint64_t>();
    if (end < begin || end > data_size)
      throw ArchiveError("tensor \"" + key + "\": data_offsets out of bounds", data_begin + begin);
    if (end - begin != t.byte_size())
      throw ArchiveError("tensor \"" + key + "\": span is " + std::to_string(end - begin) +
                             " bytes, shape implies " + std::to_string(t.byte_size()),
                         data_begin + begin);

    t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data_begin + begin),
                  bytes.begin() + static_cast<std::ptrdiff_t>(data_begin + end));
    spans.push_back({begin, end, key});
    archive.add(std::move(t));
  }

  // declared spans must tile the data region exactly: no gaps, no overlaps
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
  });
  std::uint64_t cursor = 0;
  for (const Span& s : spans) {
    if (s.begin < cursor)
      throw ArchiveError("tensor \"" + s.name + "\": data span overlaps previous tensor",
                         data_begin + s.begin);
    if (s.begin > cursor)
      throw ArchiveError("gap in data region before tensor \"" + s.name + "\"",
                         data_begin + cursor);
    cursor = s.end;
  }
  if (cursor != data_size)
    throw ArchiveError("trailing bytes after last declared tensor", data_begin + cursor);

  return archive;
}

/// Writes an archive readable by read_archive. Payloads are laid out
/// contiguously in insertion order; output bytes are a pure function of
/// the archive contents.
inline void write_archive(const TensorArchive& archive, const std::filesystem::path& path) {
  nlohmann::ordered_json header = nlohmann::ordered_json::object();
  if (!archive.metadata.empty()) {
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : archive.metadata) meta[k] = v;
    header["__metadata__"] = std::move(meta);
  }
  std::uint64_t cursor = 0;
  for (const NamedTensor& t : archive.tensors()) {
    t.validate();
    nlohmann::ordered_json entry;
    entry["dtype"] = std::string(dtype_name(t.dtype));
    entry["shape"] = t.shape;
    entry["data_offsets"] = {cursor, cursor + t.data.size()};
    header[t.name] = std::move(entry);
    cursor += t.data.size();
  }

  const std::string header_str = header.dump();
  const std::uint64_t header_len = header_str.size();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError("cannot open \"" + path.string() + "\" for writing", 0);
  std::uint8_t lenbuf[8];
  for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<std::uint8_t>(header_len >> (8 * i));
  out.write(reinterpret_cast<const char*>(lenbuf), 8);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const NamedTensor& t : archive.tensors())
    out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size()));
  out.flush();
  if (!out) throw ArchiveError("write failure on \"" + path.string() + "\"", 0);
}

}  // namespace oats
