// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_TESTS_SUPPORT_TEST_UTIL_HPP
#define RB_TESTS_SUPPORT_TEST_UTIL_HPP

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <utility>

#include "rb/base64.hpp"
#include "rb/channel.hpp"
#include "rb/hostkeys.hpp"
#include "rb/transport.hpp"

namespace rb::test {

// In-memory duplex byte stream: two channels, each reading what the other
// writes. Unbounded, thread-safe.
class DuplexPipe {
 public:
  struct End;

  static std::pair<std::unique_ptr<transport::ByteChannel>,
                   std::unique_ptr<transport::ByteChannel>>
  make();

 private:
  struct Queue {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::uint8_t> data;
    bool closed = false;

    void push(ByteSpan bytes) {
      {
        std::lock_guard<std::mutex> lock(mu);
        data.insert(data.end(), bytes.begin(), bytes.end());
      }
      cv.notify_all();
    }

    void close() {
      {
        std::lock_guard<std::mutex> lock(mu);
        closed = true;
      }
      cv.notify_all();
    }

    std::size_t pop(std::span<std::uint8_t> out) {
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [this] { return closed || !data.empty(); });
      std::size_t n = std::min(out.size(), data.size());
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = data.front();
        data.pop_front();
      }
      return n;
    }
  };

  class ChannelEnd : public transport::ByteChannel {
   public:
    ChannelEnd(std::shared_ptr<Queue> in, std::shared_ptr<Queue> out)
        : in_(std::move(in)), out_(std::move(out)) {}

    ~ChannelEnd() override { out_->close(); }

    std::size_t read(std::span<std::uint8_t> out) override {
      return in_->pop(out);
    }

    void write(ByteSpan data) override {
      if (in_ == nullptr) throw transport::ChannelError("channel closed");
      out_->push(data);
    }

    void close_write() override { out_->close(); }

   private:
    std::shared_ptr<Queue> in_;
    std::shared_ptr<Queue> out_;
  };
};

inline std::pair<std::unique_ptr<transport::ByteChannel>,
                 std::unique_ptr<transport::ByteChannel>>
DuplexPipe::make() {
  auto a_to_b = std::make_shared<Queue>();
  auto b_to_a = std::make_shared<Queue>();
  return {std::make_unique<ChannelEnd>(b_to_a, a_to_b),
          std::make_unique<ChannelEnd>(a_to_b, b_to_a)};
}

// Decorator that fails deterministically after a byte budget, for fault
// injection. Reads and writes both consume the budget.
class FailingChannel : public transport::ByteChannel {
 public:
  FailingChannel(transport::ByteChannel& inner, std::uint64_t byte_budget)
      : inner_(inner), budget_(byte_budget) {}

  std::size_t read(std::span<std::uint8_t> out) override {
    spend(out.size());
    return inner_.read(out);
  }

  void write(ByteSpan data) override {
    spend(data.size());
    inner_.write(data);
  }

  void close_write() override { inner_.close_write(); }

  bool tripped() const { return tripped_; }

 private:
  void spend(std::uint64_t amount) {
    if (budget_ < amount) {
      tripped_ = true;
      throw transport::ChannelError("injected channel failure");
    }
    budget_ -= amount;
  }

  transport::ByteChannel& inner_;
  std::uint64_t budget_;
  bool tripped_ = false;
};

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    static std::atomic<int> counter{0};
    path_ = base / ("rb-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Bytes random_bytes(std::mt19937_64& rng, std::size_t len) {
  Bytes out(len);
  std::size_t i = 0;
  while (i + 8 <= len) {
    std::uint64_t v = rng();
    for (int k = 0; k < 8; ++k) out[i++] = static_cast<std::uint8_t>(v >> (k * 8));
  }
  while (i < len) out[i++] = static_cast<std::uint8_t>(rng());
  return out;
}

inline hostkeys::KnownHostsEntry make_entry(const std::string& pattern,
                                            const std::string& type_name,
                                            ByteSpan blob) {
  hostkeys::KnownHostsEntry entry;
  entry.host_pattern = pattern;
  entry.type = hostkeys::key_type_from_name(type_name);
  entry.key_blob = Bytes(blob.begin(), blob.end());
  entry.key_base64 = base64_encode(blob);
  return entry;
}

inline transport::HostKey make_key(const std::string& type_name,
                                   const std::string& seed) {
  transport::HostKey key;
  key.type = hostkeys::key_type_from_name(type_name);
  key.blob = Bytes(seed.begin(), seed.end());
  return key;
}

}  // namespace rb::test

#endif
