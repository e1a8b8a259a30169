// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_DELTA_HPP
#define RB_DELTA_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "rb/bytes.hpp"
#include "rb/checksum.hpp"

namespace rb::sync {

class SyncError : public Error {
 public:
  using Error::Error;
};

class DigestMismatchError : public SyncError {
 public:
  using SyncError::SyncError;
};

class CopyOutOfRangeError : public SyncError {
 public:
  using SyncError::SyncError;
};

constexpr std::uint32_t kDefaultBlockSize = 2048;
constexpr std::uint32_t kMinBlockSize = 64;

struct BlockSignature {
  std::uint64_t index = 0;
  std::uint32_t weak = 0;
  Digest strong{};
};

struct SignatureSet {
  std::uint32_t block_size = kDefaultBlockSize;
  std::uint64_t basis_len = 0;
  std::vector<BlockSignature> signatures;  // one per block, index-ordered

  std::uint64_t block_count() const { return signatures.size(); }

  // True length of block `index` (the final block may be short).
  std::uint64_t block_len(std::uint64_t index) const;
};

struct DeltaOp {
  enum class Kind { Copy, Literal };
  Kind kind;
  std::uint64_t index = 0;  // Copy
  Bytes data;               // Literal
};

struct Delta {
  std::uint32_t block_size = kDefaultBlockSize;
  std::uint64_t source_len = 0;
  Digest source_digest{};
  std::vector<DeltaOp> ops;
};

// Sequential byte source.
class ByteReader {
 public:
  virtual ~ByteReader() = default;
  virtual std::size_t read(std::span<std::uint8_t> out) = 0;  // 0 = EOF
};

class MemReader : public ByteReader {
 public:
  explicit MemReader(ByteSpan data) : data_(data) {}
  std::size_t read(std::span<std::uint8_t> out) override;

 private:
  ByteSpan data_;
  std::size_t pos_ = 0;
};

class FileReader : public ByteReader {
 public:
  explicit FileReader(const std::filesystem::path& path);
  std::size_t read(std::span<std::uint8_t> out) override;

 private:
  std::ifstream in_;
};

// Random-access byte source for resolving Copy ops against a basis file.
class BasisSource {
 public:
  virtual ~BasisSource() = default;
  virtual std::size_t read_at(std::uint64_t offset,
                              std::span<std::uint8_t> out) = 0;
};

class MemBasis : public BasisSource {
 public:
  explicit MemBasis(ByteSpan data) : data_(data) {}
  std::size_t read_at(std::uint64_t offset, std::span<std::uint8_t> out) override;

 private:
  ByteSpan data_;
};

class FileBasis : public BasisSource {
 public:
  explicit FileBasis(const std::filesystem::path& path);
  std::size_t read_at(std::uint64_t offset, std::span<std::uint8_t> out) override;

 private:
  std::ifstream in_;
};

// Receives the op stream from compute_delta as it is produced; literal
// chunks arrive in runs of at most kLiteralChunkMax bytes.
class DeltaSink {
 public:
  virtual ~DeltaSink() = default;
  virtual void on_copy(std::uint64_t index) = 0;
  virtual void on_literal(ByteSpan data) = 0;
};

struct DeltaSummary {
  std::uint64_t source_len = 0;
  Digest source_digest{};
  std::uint64_t literal_bytes = 0;
  std::uint64_t copied_bytes = 0;
};

// One signature per block of the basis stream, in order. The strong digest
// is SHA-256 of the block.
SignatureSet block_signatures(ByteReader& basis, std::uint32_t block_size);
SignatureSet block_signatures(ByteSpan basis, std::uint32_t block_size);

/*
  Greedy block matching: slide a block-sized window over the source; on a
  weak-checksum table hit confirmed by the strong digest, flush pending
  literals, emit Copy(index) and jump a whole block; otherwise the front
  byte joins the pending literals and the window slides by one. The final
  short block of the basis can only match at the very end of the source.
*/
DeltaSummary compute_delta(ByteReader& source, const SignatureSet& sigs,
                           DeltaSink& sink);
Delta compute_delta(ByteReader& source, const SignatureSet& sigs);
Delta compute_delta(ByteSpan source, const SignatureSet& sigs);

// Reconstructs the source and verifies the whole-file digest; on mismatch
// the output must be discarded, never installed.
Bytes apply_delta(BasisSource& basis, const Delta& delta);
Bytes apply_delta(ByteSpan basis, const Delta& delta);

}  // namespace rb::sync

#endif
