#include "con/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace con {

const char* wire_error_name(WireError e) {
  switch (e) {
    case WireError::kBadMagic: return "bad-magic";
    case WireError::kUnsupportedVersion: return "unsupported-version";
    case WireError::kUnexpectedType: return "unexpected-type";
    case WireError::kTruncated: return "truncated";
    case WireError::kLengthMismatch: return "length-mismatch";
    case WireError::kNaNField: return "nan-field";
    case WireError::kInvalidField: return "invalid-field";
    case WireError::kLikelihoodSum: return "likelihood-sum";
    case WireError::kTooManyHypotheses: return "too-many-hypotheses";
    case WireError::kInvalidCell: return "invalid-cell";
    case WireError::kInvalidScore: return "invalid-score";
  }
  return "unknown";
}

namespace {

class Writer {
 public:
  explicit Writer(std::size_t reserve) { buf_.reserve(reserve); }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  void patch_u32(std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  std::size_t size() const { return buf_.size(); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint8_t u8() { return need(1)[0]; }
  std::uint16_t u16() {
    auto p = need(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32() {
    auto p = need(4);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f32(const char* field) {
    const float f = std::bit_cast<float>(u32());
    if (std::isnan(f)) throw ProtocolError(WireError::kNaNField, std::string("NaN in ") + field);
    if (std::isinf(f)) {
      throw ProtocolError(WireError::kInvalidField, std::string("infinite ") + field);
    }
    return static_cast<double>(f);
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  std::span<const std::uint8_t> need(std::size_t n) {
    if (remaining() < n) throw ProtocolError(WireError::kTruncated, "payload truncated");
    auto out = b_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void begin_frame(Writer& w, MsgType type) {
  w.bytes(kWireMagic);
  w.u8(kWireVersion);
  w.u8(static_cast<std::uint8_t>(type));
  w.u32(0);  // patched by end_frame
}

std::vector<std::uint8_t> end_frame(Writer& w) {
  w.patch_u32(6, static_cast<std::uint32_t>(w.size() - kEnvelopeSize));
  return w.take();
}

/// Checks the envelope against the frame and returns the payload.
std::span<const std::uint8_t> open_frame(std::span<const std::uint8_t> frame, MsgType expected) {
  const Envelope env = parse_envelope(frame);
  if (env.type != expected) {
    throw ProtocolError(WireError::kUnexpectedType, "unexpected message type");
  }
  const std::size_t have = frame.size() - kEnvelopeSize;
  if (have < env.payload_length) throw ProtocolError(WireError::kTruncated, "payload truncated");
  if (have > env.payload_length) {
    throw ProtocolError(WireError::kLengthMismatch, "trailing bytes after payload");
  }
  return frame.subspan(kEnvelopeSize);
}

void check_finite(double v, const char* field) {
  if (!std::isfinite(v) || std::abs(v) > 3.0e38) {
    throw ProtocolError(WireError::kInvalidField, std::string("unencodable ") + field);
  }
}

void write_descriptor(Writer& w, const ViewDescriptor& d) {
  for (double v : d.values) {
    check_finite(v, "descriptor");
    w.f32(v);
  }
}

ViewDescriptor read_descriptor(Reader& r, std::size_t dim) {
  ViewDescriptor d;
  d.values.resize(dim);
  for (double& v : d.values) v = r.f32("descriptor");
  return d;
}

void expect_consumed(const Reader& r) {
  if (r.remaining() != 0) {
    throw ProtocolError(WireError::kLengthMismatch, "payload longer than its contents");
  }
}

}  // namespace

bool same_content(const MapResponse& a, const MapResponse& b) {
  return a.hypotheses == b.hypotheses && a.map.spec().resolution == b.map.spec().resolution &&
         std::equal(a.map.begin(), a.map.end(), b.map.begin(), b.map.end());
}

Envelope parse_envelope(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kEnvelopeSize) throw ProtocolError(WireError::kTruncated, "short envelope");
  if (!std::equal(kWireMagic.begin(), kWireMagic.end(), bytes.begin())) {
    throw ProtocolError(WireError::kBadMagic, "bad magic");
  }
  if (bytes[4] != kWireVersion) {
    throw ProtocolError(WireError::kUnsupportedVersion,
                        "unsupported version " + std::to_string(bytes[4]));
  }
  Envelope env;
  const std::uint8_t type = bytes[5];
  if (type != static_cast<std::uint8_t>(MsgType::kQuery) &&
      type != static_cast<std::uint8_t>(MsgType::kResponse)) {
    throw ProtocolError(WireError::kUnexpectedType, "unknown message type");
  }
  env.type = static_cast<MsgType>(type);
  Reader r(bytes.subspan(6, 4));
  env.payload_length = r.u32();
  return env;
}

std::size_t query_payload_size(std::size_t dim) { return 2 + 8 * dim + 12; }

std::size_t response_payload_size(std::size_t hypotheses, std::size_t cells) {
  return 1 + 16 * hypotheses + 4 + 4 + 16 * cells;
}

std::vector<std::uint8_t> encode_query(const LocalizationQuery& q) {
  const std::size_t dim = q.student_view.dim();
  if (dim == 0 || dim > 0xFFFF || q.target_query.dim() != dim) {
    throw ProtocolError(WireError::kInvalidField, "descriptor dimensions must match and fit u16");
  }
  Writer w(kEnvelopeSize + query_payload_size(dim));
  begin_frame(w, MsgType::kQuery);
  w.u16(static_cast<std::uint16_t>(dim));
  write_descriptor(w, q.student_view);
  write_descriptor(w, q.target_query);
  for (double v : {q.pose_hint.x, q.pose_hint.y, q.pose_hint.theta}) {
    check_finite(v, "pose hint");
    w.f32(v);
  }
  return end_frame(w);
}

LocalizationQuery decode_query(std::span<const std::uint8_t> frame) {
  Reader r(open_frame(frame, MsgType::kQuery));
  const std::size_t dim = r.u16();
  if (dim == 0) throw ProtocolError(WireError::kInvalidField, "zero descriptor dimension");
  LocalizationQuery q;
  q.student_view = read_descriptor(r, dim);
  q.target_query = read_descriptor(r, dim);
  q.pose_hint.x = r.f32("pose x");
  q.pose_hint.y = r.f32("pose y");
  q.pose_hint.theta = r.f32("pose theta");
  expect_consumed(r);
  return q;
}

std::vector<std::uint8_t> encode_response(const MapResponse& resp) {
  if (resp.hypotheses.size() > kMaxWireHypotheses) {
    throw ProtocolError(WireError::kTooManyHypotheses, "at most 5 hypotheses fit");
  }
  const GridSpec& spec = resp.map.spec();
  if (spec.origin.x != 0.0 || spec.origin.y != 0.0) {
    throw ProtocolError(WireError::kInvalidField, "map frame must be anchored at the origin");
  }
  Writer w(kEnvelopeSize + response_payload_size(resp.hypotheses.size(), resp.map.size()));
  begin_frame(w, MsgType::kResponse);
  w.u8(static_cast<std::uint8_t>(resp.hypotheses.size()));
  for (const auto& h : resp.hypotheses) {
    for (double v : {h.transform.tx, h.transform.ty, h.transform.rot, h.likelihood}) {
      check_finite(v, "hypothesis");
      w.f32(v);
    }
  }
  check_finite(spec.resolution, "resolution");
  w.f32(spec.resolution);
  w.u32(static_cast<std::uint32_t>(resp.map.size()));
  for (const auto& [c, s] : resp.map) {
    if (c.ix >= kWireGridExtent || c.iy >= kWireGridExtent) {
      throw ProtocolError(WireError::kInvalidCell, "cell index beyond wire extent");
    }
    w.i32(c.ix);
    w.i32(c.iy);
    w.f32(s.primary);
    w.f32(s.secondary);
  }
  return end_frame(w);
}

MapResponse decode_response(std::span<const std::uint8_t> frame) {
  Reader r(open_frame(frame, MsgType::kResponse));
  MapResponse out;
  const std::size_t n_hyp = r.u8();
  if (n_hyp > kMaxWireHypotheses) {
    throw ProtocolError(WireError::kTooManyHypotheses, "more than 5 hypotheses");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n_hyp; ++i) {
    WireHypothesis h;
    h.transform.tx = r.f32("tx");
    h.transform.ty = r.f32("ty");
    h.transform.rot = r.f32("rot");
    h.likelihood = r.f32("likelihood");
    if (!(h.likelihood > 0.0 && h.likelihood <= 1.0)) {
      throw ProtocolError(WireError::kInvalidField, "likelihood outside (0, 1]");
    }
    total += h.likelihood;
    out.hypotheses.push_back(h);
  }
  if (n_hyp > 0 && std::abs(total - 1.0) > 1e-6) {
    throw ProtocolError(WireError::kLikelihoodSum, "likelihoods do not sum to 1");
  }
  const double resolution = r.f32("resolution");
  if (!(resolution > 0.0)) throw ProtocolError(WireError::kInvalidField, "resolution <= 0");
  const std::uint32_t n_cells = r.u32();
  if (r.remaining() < static_cast<std::size_t>(n_cells) * 16) {
    throw ProtocolError(WireError::kTruncated, "cell table truncated");
  }
  out.map = ScoredGrid(GridSpec{resolution, kWireGridExtent, kWireGridExtent, {0.0, 0.0}});
  for (std::uint32_t i = 0; i < n_cells; ++i) {
    const CellIndex c{r.i32(), r.i32()};
    const double primary = r.f32("primary");
    const double secondary = r.f32("secondary");
    if (!in_bounds(out.map.spec(), c) || out.map.contains(c)) {
      throw ProtocolError(WireError::kInvalidCell, "cell index out of range or repeated");
    }
    if (!(primary >= 0.0 && primary <= 1.0) || !(secondary >= 0.0)) {
      throw ProtocolError(WireError::kInvalidScore, "cell score outside channel range");
    }
    if (primary < kEvictionThreshold && secondary < kEvictionThreshold) {
      throw ProtocolError(WireError::kInvalidScore, "zero cell stored");
    }
    out.map.set(c, {primary, secondary});
  }
  expect_consumed(r);
  out.byte_size = frame.size();
  return out;
}

LocalizationQuery wire_quantized(const LocalizationQuery& q) {
  // Computed by a real round trip. GCC 11 at -O3 folds a vectorized
  // double -> float -> double cast pair away, so casting field by field
  // is not reliable.
  return decode_query(encode_query(q));
}

}  // namespace con
