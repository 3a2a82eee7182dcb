#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "con/protocol.hpp"

namespace con {

/// Splits a byte stream into complete frames. Envelope errors surface as
/// ProtocolError as soon as the first 10 bytes of a frame are buffered.
class FrameAssembler {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Next complete frame (envelope included), if any.
  std::optional<std::vector<std::uint8_t>> next();
  std::size_t buffered() const { return buf_.size() - head_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t head_ = 0;
};

/// Frame transport over a connected stream socket or pipe pair. Does not
/// own the descriptors.
class StreamTransport {
 public:
  StreamTransport(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}
  explicit StreamTransport(int fd) : StreamTransport(fd, fd) {}

  /// Throws std::system_error on write failure.
  void send(std::span<const std::uint8_t> frame);
  /// Blocks until one frame arrives. Throws std::system_error on read
  /// failure and std::runtime_error on EOF mid-stream.
  std::vector<std::uint8_t> receive();

 private:
  int read_fd_;
  int write_fd_;
  FrameAssembler assembler_;
};

/// Single-process FIFO of frames.
class InProcessChannel {
 public:
  void send(std::span<const std::uint8_t> frame) { frames_.emplace_back(frame.begin(), frame.end()); }
  std::optional<std::vector<std::uint8_t>> receive();
  bool empty() const { return frames_.empty(); }

 private:
  std::deque<std::vector<std::uint8_t>> frames_;
};

}  // namespace con
