#include "con/transport.hpp"

#include <unistd.h>

#include <cerrno>
#include <stdexcept>
#include <system_error>

namespace con {

void FrameAssembler::feed(std::span<const std::uint8_t> bytes) {
  if (head_ > 0 && head_ == buf_.size()) {
    buf_.clear();
    head_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<std::vector<std::uint8_t>> FrameAssembler::next() {
  const std::span<const std::uint8_t> pending(buf_.data() + head_, buffered());
  if (pending.size() < kEnvelopeSize) return std::nullopt;
  const Envelope env = parse_envelope(pending);
  if (env.payload_length > kMaxPayloadBytes) {
    throw ProtocolError(WireError::kInvalidField, "announced payload too large");
  }
  const std::size_t total = kEnvelopeSize + env.payload_length;
  if (pending.size() < total) return std::nullopt;
  std::vector<std::uint8_t> frame(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(total));
  head_ += total;
  if (head_ == buf_.size()) {
    buf_.clear();
    head_ = 0;
  }
  return frame;
}

void StreamTransport::send(std::span<const std::uint8_t> frame) {
  std::size_t off = 0;
  while (off < frame.size()) {
    const ssize_t n = ::write(write_fd_, frame.data() + off, frame.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::system_error(errno, std::generic_category(), "frame write");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::vector<std::uint8_t> StreamTransport::receive() {
  std::uint8_t chunk[4096];
  while (true) {
    if (auto frame = assembler_.next()) return std::move(*frame);
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::system_error(errno, std::generic_category(), "frame read");
    }
    if (n == 0) throw std::runtime_error("stream closed before a full frame arrived");
    assembler_.feed({chunk, static_cast<std::size_t>(n)});
  }
}

std::optional<std::vector<std::uint8_t>> InProcessChannel::receive() {
  if (frames_.empty()) return std::nullopt;
  auto f = std::move(frames_.front());
  frames_.pop_front();
  return f;
}

}  // namespace con
