// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/delta.hpp"

#include <algorithm>
#include <unordered_map>

#include "rb/wire.hpp"

namespace rb::sync {

namespace {

constexpr std::size_t kReadChunk = 256 * 1024;

void check_block_size(std::uint32_t block_size) {
  if (block_size < kMinBlockSize) {
    throw std::invalid_argument("block size must be at least 64 bytes");
  }
}

}  // namespace

std::uint64_t SignatureSet::block_len(std::uint64_t index) const {
  if (index + 1 < block_count()) return block_size;
  return basis_len - index * static_cast<std::uint64_t>(block_size);
}

std::size_t MemReader::read(std::span<std::uint8_t> out) {
  std::size_t n = std::min(out.size(), data_.size() - pos_);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(pos_), n, out.begin());
  pos_ += n;
  return n;
}

FileReader::FileReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary) {
  if (!in_.is_open()) {
    throw SyncError("cannot open file for reading: " + path.string());
  }
}

std::size_t FileReader::read(std::span<std::uint8_t> out) {
  in_.read(reinterpret_cast<char*>(out.data()),
           static_cast<std::streamsize>(out.size()));
  if (in_.bad()) throw SyncError("file read failure");
  return static_cast<std::size_t>(in_.gcount());
}

std::size_t MemBasis::read_at(std::uint64_t offset, std::span<std::uint8_t> out) {
  if (offset >= data_.size()) return 0;
  std::size_t n = std::min<std::uint64_t>(out.size(), data_.size() - offset);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(offset), n, out.begin());
  return n;
}

FileBasis::FileBasis(const std::filesystem::path& path)
    : in_(path, std::ios::binary) {
  if (!in_.is_open()) {
    throw SyncError("cannot open basis file: " + path.string());
  }
}

std::size_t FileBasis::read_at(std::uint64_t offset, std::span<std::uint8_t> out) {
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(offset));
  in_.read(reinterpret_cast<char*>(out.data()),
           static_cast<std::streamsize>(out.size()));
  if (in_.bad()) throw SyncError("basis read failure");
  return static_cast<std::size_t>(in_.gcount());
}

SignatureSet block_signatures(ByteReader& basis, std::uint32_t block_size) {
  check_block_size(block_size);
  SignatureSet set;
  set.block_size = block_size;

  Bytes block(block_size);
  while (true) {
    std::size_t filled = 0;
    while (filled < block.size()) {
      std::size_t n = basis.read(std::span(block).subspan(filled));
      if (n == 0) break;
      filled += n;
    }
    if (filled == 0) break;
    ByteSpan data(block.data(), filled);
    set.signatures.push_back(BlockSignature{
        set.signatures.size(), weak_checksum(data), sha256(data)});
    set.basis_len += filled;
    if (filled < block.size()) break;
  }
  return set;
}

SignatureSet block_signatures(ByteSpan basis, std::uint32_t block_size) {
  MemReader reader(basis);
  return block_signatures(reader, block_size);
}

namespace {

// Collects literals and forwards them in chunks of at most kLiteralChunkMax.
class LiteralBuffer {
 public:
  explicit LiteralBuffer(DeltaSink& sink) : sink_(sink) {}

  void add(ByteSpan data) {
    for (std::size_t i = 0; i < data.size();) {
      std::size_t room = kLiteralChunkMax - pending_.size();
      std::size_t take = std::min(room, data.size() - i);
      pending_.insert(pending_.end(), data.begin() + static_cast<std::ptrdiff_t>(i),
                      data.begin() + static_cast<std::ptrdiff_t>(i + take));
      i += take;
      if (pending_.size() == kLiteralChunkMax) flush();
    }
  }

  void flush() {
    if (pending_.empty()) return;
    sink_.on_literal(pending_);
    total_ += pending_.size();
    pending_.clear();
  }

  std::uint64_t total() const { return total_; }

 private:
  DeltaSink& sink_;
  Bytes pending_;
  std::uint64_t total_ = 0;
};

}  // namespace

DeltaSummary compute_delta(ByteReader& source, const SignatureSet& sigs,
                           DeltaSink& sink) {
  const std::uint64_t block_size = sigs.block_size;
  check_block_size(sigs.block_size);

  // Hash table over full-size blocks only; a trailing short block is
  // handled separately since it can only match at the end of the source.
  std::unordered_multimap<std::uint32_t, std::uint64_t> table;
  const std::uint64_t full_blocks = sigs.basis_len / block_size;
  for (const auto& sig : sigs.signatures) {
    if (sig.index < full_blocks) table.emplace(sig.weak, sig.index);
  }
  const bool has_short = sigs.basis_len % block_size != 0;
  const std::uint64_t short_len = sigs.basis_len % block_size;

  Bytes buf;
  std::size_t win = 0;  // window start within buf
  bool eof = false;
  Sha256 whole;
  LiteralBuffer literals(sink);
  DeltaSummary summary;
  std::uint64_t hashed = 0;  // bytes fed to the whole-file digest

  auto refill = [&](std::size_t want) {
    // Keep [win, end) plus what we still need; bytes before `win` are
    // already emitted or pending in `literals`.
    if (win > kReadChunk) {
      buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(win));
      win = 0;
    }
    while (!eof && buf.size() - win < want) {
      std::size_t old = buf.size();
      buf.resize(old + kReadChunk);
      std::size_t n = source.read(std::span(buf).subspan(old));
      buf.resize(old + n);
      if (n == 0) {
        eof = true;
        break;
      }
      whole.update(ByteSpan(buf.data() + old, n));
      hashed += n;
    }
  };

  RollingState rolling;
  bool rolling_valid = false;

  while (true) {
    refill(block_size);
    std::size_t avail = buf.size() - win;
    if (avail < block_size) break;  // tail handled below

    ByteSpan window(buf.data() + win, block_size);
    if (!rolling_valid) {
      rolling = weak_init(window);
      rolling_valid = true;
    }

    bool matched = false;
    auto [lo, hi] = table.equal_range(rolling.value());
    if (lo != hi) {
      Digest strong = sha256(window);
      for (auto it = lo; it != hi; ++it) {
        if (sigs.signatures[it->second].strong == strong) {
          literals.flush();
          sink.on_copy(it->second);
          summary.copied_bytes += block_size;
          win += block_size;
          rolling_valid = false;
          matched = true;
          break;
        }
      }
    }
    if (matched) continue;

    // No match: the front byte becomes a literal and the window slides.
    literals.add(ByteSpan(buf.data() + win, 1));
    refill(block_size + 1);
    if (buf.size() - win >= block_size + 1) {
      rolling = roll(rolling, buf[win], buf[win + block_size], block_size);
      ++win;
    } else {
      ++win;
      rolling_valid = false;  // window no longer full; drop to tail handling
    }
  }

  // Tail: fewer than block_size bytes remain. The short final block of the
  // basis may match here, but only as the exact end of the source.
  std::size_t avail = buf.size() - win;
  while (avail > 0) {
    if (has_short && avail == short_len) {
      ByteSpan tail(buf.data() + win, avail);
      const BlockSignature& last = sigs.signatures.back();
      if (weak_checksum(tail) == last.weak && sha256(tail) == last.strong) {
        literals.flush();
        sink.on_copy(last.index);
        summary.copied_bytes += short_len;
        win += avail;
        avail = 0;
        break;
      }
    }
    literals.add(ByteSpan(buf.data() + win, 1));
    ++win;
    --avail;
  }
  literals.flush();

  summary.literal_bytes = literals.total();
  summary.source_len = hashed;
  summary.source_digest = whole.finish();
  return summary;
}

namespace {

class CollectSink : public DeltaSink {
 public:
  explicit CollectSink(Delta& delta) : delta_(delta) {}

  void on_copy(std::uint64_t index) override {
    delta_.ops.push_back(DeltaOp{DeltaOp::Kind::Copy, index, {}});
  }

  void on_literal(ByteSpan data) override {
    delta_.ops.push_back(
        DeltaOp{DeltaOp::Kind::Literal, 0, Bytes(data.begin(), data.end())});
  }

 private:
  Delta& delta_;
};

}  // namespace

Delta compute_delta(ByteReader& source, const SignatureSet& sigs) {
  Delta delta;
  delta.block_size = sigs.block_size;
  CollectSink sink(delta);
  DeltaSummary summary = compute_delta(source, sigs, sink);
  delta.source_len = summary.source_len;
  delta.source_digest = summary.source_digest;
  return delta;
}

Delta compute_delta(ByteSpan source, const SignatureSet& sigs) {
  MemReader reader(source);
  return compute_delta(reader, sigs);
}

Bytes apply_delta(BasisSource& basis, const Delta& delta) {
  Bytes out;
  out.reserve(delta.source_len);
  Bytes block(delta.block_size);
  Sha256 digest;

  for (const auto& op : delta.ops) {
    if (op.kind == DeltaOp::Kind::Literal) {
      digest.update(op.data);
      out.insert(out.end(), op.data.begin(), op.data.end());
      continue;
    }
    std::uint64_t offset = op.index * static_cast<std::uint64_t>(delta.block_size);
    std::size_t n = basis.read_at(offset, block);
    if (n == 0) {
      throw CopyOutOfRangeError("copy index " + std::to_string(op.index) +
                                " is past the end of the basis");
    }
    digest.update(ByteSpan(block.data(), n));
    out.insert(out.end(), block.begin(), block.begin() + static_cast<std::ptrdiff_t>(n));
  }

  if (out.size() != delta.source_len || digest.finish() != delta.source_digest) {
    throw DigestMismatchError(
        "reconstructed file does not match the source digest");
  }
  return out;
}

Bytes apply_delta(ByteSpan basis, const Delta& delta) {
  MemBasis mem(basis);
  return apply_delta(mem, delta);
}

}  // namespace rb::sync
