// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#ifndef UMFC_IO_HPP
#define UMFC_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "umfc/core.hpp"
#include "umfc/engine.hpp"

namespace umfc::io {

// 20-byte little-endian header shared by every binary file:
//   magic "UMFC" | version u32 | count u32 | dim u32 | payload_kind u32
// Embedding and text-bank payloads are count*dim float32 values, row-major.
inline constexpr char kMagic[4] = {'U', 'M', 'F', 'C'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 20;

enum class PayloadKind : std::uint32_t { ImageFeatures = 0, TextBank = 1, StateSnapshot = 2 };

struct Header {
  std::uint32_t version = kFormatVersion;
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  PayloadKind kind = PayloadKind::ImageFeatures;
};

// "<path>.labels": one "id<TAB>class<TAB>domain" line per row, -1 when absent.
std::filesystem::path labels_path(const std::filesystem::path& path);

// Writes header + payload atomically (temp file then rename). A label sidecar
// is written when the matrix carries labels or non-default ids.
void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path,
                      PayloadKind kind = PayloadKind::ImageFeatures);

// Accepts image-feature and text-bank payloads; loads the sidecar if present.
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

// Parses the binary format from memory (no sidecar handling).
EmbeddingMatrix parse_embeddings(std::string_view bytes, Header* header_out = nullptr);
std::string encode_embeddings(const Matrix& m, PayloadKind kind);

// "id,class,domain,v0,...,vD-1" with an optional header line.
EmbeddingMatrix read_embeddings_csv(const std::filesystem::path& path);

// Names file: one class name per non-empty line, in row order.
TextBank read_text_bank(const std::filesystem::path& path, const std::filesystem::path& names_path);
void write_text_bank(const TextBank& bank, const std::filesystem::path& path, const std::filesystem::path& names_path);

std::string serialize_state(const StreamState& state);
StreamState deserialize_state(std::string_view bytes);
void snapshot_state(const StreamState& state, const std::filesystem::path& path);
StreamState restore_state(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace umfc::io

#endif  // UMFC_IO_HPP
