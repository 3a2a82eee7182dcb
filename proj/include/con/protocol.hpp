#pragma once

// Student <-> student-proxy wire format.
//
// Every message is an envelope followed by a payload, all little-endian:
//
//   envelope (10 bytes)
//     magic          4 bytes  "CONK"
//     version        u8       1
//     msg_type       u8       1 = query, 2 = response
//     payload_length u32
//
//   query payload (2 + 8*D + 12 bytes)
//     D              u16      descriptor dimension
//     student_view   D x f32
//     target_query   D x f32
//     pose hint      3 x f32  (x, y, theta)
//
//   response payload (1 + 16*H + 4 + 4 + 16*K bytes)
//     H              u8       hypothesis count, 0..5 (0 = rejected query)
//     hypotheses     H x {tx, ty, rot, likelihood} f32
//     resolution     f32
//     K              u32      stored cell count
//     cells          K x {ix i32, iy i32, primary f32, secondary f32}
//
// Cell indices are relative to the teacher map frame, whose cell (0, 0)
// corner sits at the frame origin.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "con/grid.hpp"
#include "con/perception.hpp"

namespace con {

inline constexpr std::array<std::uint8_t, 4> kWireMagic = {'C', 'O', 'N', 'K'};
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kEnvelopeSize = 10;
inline constexpr std::size_t kMaxWireHypotheses = 5;
/// Decoded maps use a square frame this many cells wide; indices outside it
/// are rejected.
inline constexpr int kWireGridExtent = 1 << 24;
/// Frames announcing a larger payload are rejected before buffering.
inline constexpr std::uint32_t kMaxPayloadBytes = 64u << 20;

enum class MsgType : std::uint8_t { kQuery = 1, kResponse = 2 };

enum class WireError {
  kBadMagic,
  kUnsupportedVersion,
  kUnexpectedType,
  kTruncated,
  kLengthMismatch,
  kNaNField,
  kInvalidField,
  kLikelihoodSum,
  kTooManyHypotheses,
  kInvalidCell,
  kInvalidScore,
};

const char* wire_error_name(WireError e);

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(WireError code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  WireError code() const { return code_; }

 private:
  WireError code_;
};

struct LocalizationQuery {
  ViewDescriptor student_view;
  ViewDescriptor target_query;
  Pose2D pose_hint{};  // student frame
  friend bool operator==(const LocalizationQuery&, const LocalizationQuery&) = default;
};

struct WireHypothesis {
  SE2Transform transform{};  // teacher frame -> student frame
  double likelihood = 0.0;
  friend bool operator==(const WireHypothesis&, const WireHypothesis&) = default;
};

struct MapResponse {
  std::vector<WireHypothesis> hypotheses;
  ScoredGrid map;               // teacher frame
  std::size_t byte_size = 0;    // full frame size; set by decode_response

  bool rejected() const { return hypotheses.empty(); }
};

/// Equal hypotheses, resolution and stored cells (grid extents ignored).
bool same_content(const MapResponse& a, const MapResponse& b);

struct Envelope {
  MsgType type = MsgType::kQuery;
  std::uint32_t payload_length = 0;
};

/// Validates magic and version and reads the header. Does not check that the
/// payload is present.
Envelope parse_envelope(std::span<const std::uint8_t> bytes);

std::size_t query_payload_size(std::size_t dim);
std::size_t response_payload_size(std::size_t hypotheses, std::size_t cells);

/// Full frames (envelope + payload). Encoders throw ProtocolError with
/// kInvalidField for values the layout cannot carry.
std::vector<std::uint8_t> encode_query(const LocalizationQuery& q);
LocalizationQuery decode_query(std::span<const std::uint8_t> frame);
std::vector<std::uint8_t> encode_response(const MapResponse& r);
MapResponse decode_response(std::span<const std::uint8_t> frame);

/// The query decode would produce for `q`. Throws like encode_query.
LocalizationQuery wire_quantized(const LocalizationQuery& q);

/// Running byte totals for one episode.
struct ByteLedger {
  std::uint64_t query_bytes = 0;
  std::uint64_t response_bytes = 0;
  std::uint64_t exchanges = 0;

  void record_query(std::size_t n) { query_bytes += n; }
  void record_response(std::size_t n) {
    response_bytes += n;
    ++exchanges;
  }
  std::uint64_t total() const { return query_bytes + response_bytes; }
};

inline std::size_t message_size(std::span<const std::uint8_t> frame) { return frame.size(); }

}  // namespace con
