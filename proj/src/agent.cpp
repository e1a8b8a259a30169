// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/agent.hpp"

#include <sys/stat.h>

#include "rb/delta.hpp"
#include "rb/wire.hpp"

namespace rb::sync {

namespace fs = std::filesystem;

namespace {

bool path_escapes_root(const std::string& path) {
  if (path.empty()) return true;
  fs::path p(path);
  if (p.is_absolute()) return true;
  for (const auto& part : p) {
    if (part == "..") return true;
  }
  return false;
}

class WireSink : public DeltaSink {
 public:
  explicit WireSink(FrameWriter& writer) : writer_(writer) {}

  void on_copy(std::uint64_t index) override {
    Bytes payload;
    put_u64(payload, index);
    writer_.write_frame(FrameTag::Copy, payload);
  }

  void on_literal(ByteSpan data) override {
    writer_.write_frame(FrameTag::Literal, data);
  }

 private:
  FrameWriter& writer_;
};

void send_error(FrameWriter& writer, const std::string& reason) {
  writer.write_frame(FrameTag::Error, as_bytes(reason));
}

// Reads the signature frames that follow a FileRequest.
SignatureSet read_signatures(FrameReader& reader, std::uint32_t block_size) {
  auto header_frame = reader.read();
  if (!header_frame || header_frame->tag != FrameTag::SigHeader) {
    throw ProtocolError("expected SigHeader after FileRequest");
  }
  SigHeaderMsg header = SigHeaderMsg::decode(header_frame->payload);

  SignatureSet sigs;
  sigs.block_size = block_size;
  sigs.basis_len = header.basis_len;
  sigs.signatures.reserve(static_cast<std::size_t>(
      std::min<std::uint64_t>(header.sig_count, 1 << 20)));
  for (std::uint64_t i = 0; i < header.sig_count; ++i) {
    auto frame = reader.read();
    if (!frame || frame->tag != FrameTag::Sig) {
      throw ProtocolError("expected Sig frame");
    }
    SigMsg sig = SigMsg::decode(frame->payload);
    sigs.signatures.push_back(BlockSignature{i, sig.weak, sig.strong});
  }
  return sigs;
}

}  // namespace

void serve_agent(transport::ByteChannel& channel, const fs::path& root_dir) {
  FrameWriter writer(channel);
  FrameReader reader(channel);

  writer.write_magic();
  if (!reader.try_read_magic()) return;  // peer never spoke

  while (true) {
    auto frame = reader.read();
    if (!frame) return;  // peer gone
    if (frame->tag == FrameTag::Quit) return;

    if (frame->tag != FrameTag::FileRequest) {
      send_error(writer, "unexpected frame tag");
      return;
    }
    FileRequestMsg request = FileRequestMsg::decode(frame->payload);
    if (request.block_size < kMinBlockSize) {
      send_error(writer, "block size too small");
      return;
    }
    SignatureSet sigs = read_signatures(reader, request.block_size);

    if (path_escapes_root(request.path)) {
      send_error(writer, "path escapes the served root: " + request.path);
      continue;
    }
    fs::path file = root_dir / request.path;
    std::error_code ec;
    if (!fs::is_regular_file(file, ec)) {
      send_error(writer, "no such file: " + request.path);
      continue;
    }

    struct ::stat st{};
    if (::stat(file.c_str(), &st) != 0) {
      send_error(writer, "cannot stat: " + request.path);
      continue;
    }

    FileReader source(file);
    WireSink sink(writer);
    DeltaSummary summary = compute_delta(source, sigs, sink);

    FileEndMsg end;
    end.source_len = summary.source_len;
    end.mtime_seconds = static_cast<std::uint64_t>(st.st_mtime);
    end.digest = summary.source_digest;
    writer.write_frame(FrameTag::FileEnd, end.encode());
  }
}

}  // namespace rb::sync
