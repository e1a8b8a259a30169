// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/sync_client.hpp"

#include <filesystem>

#include "rb/fsutil.hpp"

namespace rb::sync {

namespace fs = std::filesystem;

SyncClient::SyncClient(transport::ByteChannel& channel)
    : channel_(channel), writer_(channel), reader_(channel) {}

SyncClient::~SyncClient() {
  try {
    quit();
  } catch (...) {
    // Peer may already be gone; nothing useful to do here.
  }
}

void SyncClient::handshake() {
  if (handshaken_) return;
  writer_.write_magic();
  try {
    if (!reader_.try_read_magic()) {
      throw AgentUnavailableError(
          "sync agent did not answer (is the agent binary installed on the "
          "remote host?)");
    }
  } catch (const ProtocolError& e) {
    throw AgentUnavailableError(std::string("sync agent handshake failed: ") +
                                e.what());
  }
  handshaken_ = true;
}

void SyncClient::quit() {
  if (!handshaken_ || quit_sent_) return;
  quit_sent_ = true;
  writer_.write_frame(FrameTag::Quit, {});
  channel_.close_write();
}

SyncStats SyncClient::sync_file(const std::string& remote_path,
                                const fs::path& local_path,
                                std::uint32_t block_size) {
  auto started = std::chrono::steady_clock::now();
  const std::uint64_t wire_before = writer_.bytes_written() + reader_.bytes_read();

  handshake();

  // The existing local copy is the basis; absent local file means empty
  // signatures and the transfer degenerates to a full copy.
  SignatureSet sigs;
  sigs.block_size = block_size;
  const bool have_basis = fs::exists(local_path);
  if (have_basis) {
    FileReader basis(local_path);
    sigs = block_signatures(basis, block_size);
  }

  FileRequestMsg request{remote_path, block_size};
  writer_.write_frame(FrameTag::FileRequest, request.encode());
  SigHeaderMsg header{sigs.basis_len, sigs.block_count()};
  writer_.write_frame(FrameTag::SigHeader, header.encode());
  for (const auto& sig : sigs.signatures) {
    writer_.write_frame(FrameTag::Sig, SigMsg{sig.weak, sig.strong}.encode());
  }

  std::unique_ptr<FileBasis> basis;
  if (have_basis) basis = std::make_unique<FileBasis>(local_path);

  fsutil::PendingFile pending(local_path);
  Sha256 digest;
  SyncStats stats;
  Bytes block(block_size);

  while (true) {
    auto frame = reader_.read();
    if (!frame) {
      throw ProtocolError("stream ended before FileEnd");
    }
    switch (frame->tag) {
      case FrameTag::Copy: {
        std::size_t pos = 0;
        std::uint64_t index = get_u64(frame->payload, pos);
        if (!basis || index >= sigs.block_count()) {
          throw CopyOutOfRangeError("copy index " + std::to_string(index) +
                                    " outside the local basis");
        }
        std::uint64_t len = sigs.block_len(index);
        std::size_t n = basis->read_at(
            index * static_cast<std::uint64_t>(block_size),
            std::span(block.data(), static_cast<std::size_t>(len)));
        if (n != len) {
          throw SyncError("local basis changed while syncing " + remote_path);
        }
        ByteSpan data(block.data(), n);
        digest.update(data);
        pending.write(data);
        stats.copied_bytes += n;
        break;
      }
      case FrameTag::Literal: {
        digest.update(frame->payload);
        pending.write(frame->payload);
        stats.literal_bytes += frame->payload.size();
        break;
      }
      case FrameTag::FileEnd: {
        FileEndMsg end = FileEndMsg::decode(frame->payload);
        if (stats.source_len() != end.source_len ||
            digest.finish() != end.digest) {
          throw DigestMismatchError("transfer of " + remote_path +
                                    " failed digest verification");
        }
        pending.commit(static_cast<std::int64_t>(end.mtime_seconds));
        stats.wire_bytes =
            writer_.bytes_written() + reader_.bytes_read() - wire_before;
        stats.elapsed = std::chrono::steady_clock::now() - started;
        return stats;
      }
      case FrameTag::Error: {
        throw RemoteFileError(to_string(frame->payload));
      }
      default:
        throw ProtocolError("unexpected frame tag in delta stream");
    }
  }
}

}  // namespace rb::sync
