#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "con/protocol.hpp"
#include "con/proxy.hpp"
#include "con/rng.hpp"
#include "con/transport.hpp"

namespace {

using con::CellIndex;
using con::GridSpec;
using con::LocalizationQuery;
using con::MapResponse;
using con::ProtocolError;
using con::ScoredGrid;
using con::ViewDescriptor;
using con::WireError;
using con::WireHypothesis;
using Bytes = std::vector<std::uint8_t>;

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

GridSpec wire_spec(double res = 0.1) { return GridSpec{res, con::kWireGridExtent, con::kWireGridExtent, {}}; }

ViewDescriptor descriptor(std::initializer_list<double> v) { return ViewDescriptor{std::vector<double>(v)}; }

Bytes from_hex(const std::string& hex) {
  Bytes out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

std::map<std::string, Bytes> load_vectors() {
  std::ifstream in(std::string(CON_TEST_VECTORS_DIR) + "/conformance.hex");
  std::map<std::string, Bytes> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string name, hex;
    ss >> name >> hex;
    out[name] = from_hex(hex);
  }
  return out;
}

MapResponse response(std::vector<WireHypothesis> hyps,
                     std::vector<std::pair<CellIndex, con::CellScore>> cells) {
  MapResponse r;
  r.hypotheses = std::move(hyps);
  r.map = ScoredGrid(wire_spec(f32(0.1)));
  for (const auto& [c, s] : cells) r.map.set(c, s);
  return r;
}

/// The five canonical messages, built field by field.
std::map<std::string, std::variant<LocalizationQuery, MapResponse>> canonical() {
  std::map<std::string, std::variant<LocalizationQuery, MapResponse>> m;
  m["query_d2"] = LocalizationQuery{descriptor({1.0, 0.0}), descriptor({f32(0.6), f32(0.8)}),
                                    {1.5, -2.25, 0.5}};
  m["response_rejected"] = response({}, {});
  m["response_identity_empty"] = response({{{0, 0, 0}, 1.0}}, {});
  m["response_two_hypotheses"] =
      response({{{0.5, -1.0, 0.5}, 0.75}, {{0, 0, 0}, 0.25}},
               {{{0, 0}, {0.5, 0.5}}, {{3, 7}, {0.75, 1.25}}, {{12, 1}, {1.0, 2.0}}});
  m["response_five_hypotheses"] = response({{{1.0, 2.0, -3.0}, 0.5},
                                            {{-1.0, 0.0, 1.0}, 0.25},
                                            {{0.0, -4.5, 2.0}, 0.125},
                                            {{8.0, 8.0, 0.0}, 0.0625},
                                            {{-0.25, 0.75, -1.5}, 0.0625}},
                                           {{{100000, 2}, {0.25, 0.25}}});
  return m;
}

TEST(Conformance, CanonicalVectors) {
  const auto vectors = load_vectors();
  const auto messages = canonical();
  ASSERT_EQ(vectors.size(), 5u);
  for (const auto& [name, msg] : messages) {
    SCOPED_TRACE(name);
    ASSERT_TRUE(vectors.contains(name));
    const Bytes& expect = vectors.at(name);
    if (const auto* q = std::get_if<LocalizationQuery>(&msg)) {
      EXPECT_EQ(con::encode_query(*q), expect);
      EXPECT_EQ(con::decode_query(expect), *q);
    } else {
      const auto& r = std::get<MapResponse>(msg);
      EXPECT_EQ(con::encode_response(r), expect);
      const MapResponse back = con::decode_response(expect);
      EXPECT_TRUE(con::same_content(back, r));
      EXPECT_EQ(back.byte_size, expect.size());
    }
  }
}

TEST(Sizes, LayoutArithmetic) {
  EXPECT_EQ(con::query_payload_size(64), 526u);
  EXPECT_EQ(con::response_payload_size(1, 0), 25u);
  EXPECT_EQ(con::response_payload_size(5, 500), 8089u);
  EXPECT_EQ(con::response_payload_size(0, 0), 9u);

  LocalizationQuery q;
  q.student_view.values.assign(64, 0.125);
  q.target_query.values.assign(64, -0.125);
  const Bytes frame = con::encode_query(q);
  EXPECT_EQ(frame.size(), 536u);
  con::ByteLedger ledger;
  EXPECT_EQ(ledger.total(), 0u);
  ledger.record_query(con::message_size(frame));
  EXPECT_EQ(ledger.query_bytes, 536u);
}

TEST(Sizes, SparseResponseLinearInCells) {
  // 16 bytes per stored cell regardless of where the cells sit.
  for (int h = 1; h <= 5; ++h) {
    std::vector<WireHypothesis> hyps(static_cast<std::size_t>(h), WireHypothesis{{}, 1.0 / h});
    for (auto& x : hyps) x.likelihood = f32(1.0 / h);
    hyps.back().likelihood = f32(1.0 - f32(1.0 / h) * (h - 1));
    for (int k : {0, 1, 7, 100}) {
      MapResponse r = response(hyps, {});
      for (int i = 0; i < k; ++i) r.map.set({i * 1000, 3 * i}, {0.5, 0.5});
      const Bytes frame = con::encode_response(r);
      EXPECT_EQ(frame.size(), con::kEnvelopeSize + 25 + 16 * (h - 1) + 16 * k);
      EXPECT_EQ(frame.size(), con::kEnvelopeSize + con::response_payload_size(h, k));
    }
  }
}

LocalizationQuery random_query(con::Rng& rng) {
  const std::size_t dim = 1 + con::uniform_index(rng, 96);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LocalizationQuery q;
  for (std::size_t i = 0; i < dim; ++i) {
    q.student_view.values.push_back(f32(u(rng)));
    q.target_query.values.push_back(f32(u(rng)));
  }
  std::uniform_real_distribution<double> big(-1e30, 1e30);
  const bool extreme = con::uniform_index(rng, 4) == 0;
  q.pose_hint = {f32(extreme ? big(rng) : 50 * u(rng)), f32(extreme ? big(rng) : 50 * u(rng)),
                 f32(3.14 * u(rng))};
  return q;
}

MapResponse random_response(con::Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = con::uniform_index(rng, 6);
  std::vector<WireHypothesis> hyps;
  double rest = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = i + 1 == n ? f32(rest) : f32(rest * 0.5);
    rest -= l;
    hyps.push_back({{f32(1e3 * u(rng)), f32(1e3 * u(rng)), f32(3.14 * u(rng))}, l});
  }
  MapResponse r = response(std::move(hyps), {});
  r.map = ScoredGrid(wire_spec(f32(0.05 + 0.2 * (u(rng) + 1.0))));
  const std::size_t k = con::uniform_index(rng, 4) == 0 ? 0 : con::uniform_index(rng, 300);
  for (std::size_t i = 0; i < k; ++i) {
    const bool extreme = con::uniform_index(rng, 10) == 0;
    const CellIndex c{static_cast<int>(con::uniform_index(rng, extreme ? con::kWireGridExtent : 400)),
                      static_cast<int>(con::uniform_index(rng, extreme ? con::kWireGridExtent : 400))};
    const double p = f32((u(rng) + 1.0) / 2.0);
    r.map.set(c, {p, f32(p + 10.0 * (u(rng) + 1.0))});
  }
  return r;
}

TEST(RoundTrip, RandomQueries) {
  con::Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const LocalizationQuery q = random_query(rng);
    const Bytes frame = con::encode_query(q);
    EXPECT_EQ(frame.size(), con::kEnvelopeSize + con::query_payload_size(q.student_view.dim()));
    const LocalizationQuery back = con::decode_query(frame);
    ASSERT_EQ(back, q) << i;
    EXPECT_EQ(con::encode_query(back), frame);
  }
}

TEST(RoundTrip, RandomResponses) {
  con::Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const MapResponse r = random_response(rng);
    const Bytes frame = con::encode_response(r);
    const MapResponse back = con::decode_response(frame);
    ASSERT_TRUE(con::same_content(back, r)) << i;
    EXPECT_EQ(con::encode_response(back), frame);
    EXPECT_EQ(back.byte_size, frame.size());
  }
}

TEST(RoundTrip, QuantizationMatchesDecode) {
  con::Rng rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LocalizationQuery q;
  for (int i = 0; i < 64; ++i) {
    q.student_view.values.push_back(u(rng));
    q.target_query.values.push_back(u(rng));
  }
  q.pose_hint = {u(rng), u(rng), u(rng)};
  EXPECT_EQ(con::decode_query(con::encode_query(q)), con::wire_quantized(q));
}

WireError error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ProtocolError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no ProtocolError thrown";
  return WireError::kInvalidField;
}

TEST(Errors, EnvelopeAndLayout) {
  const auto vectors = load_vectors();
  const Bytes q = vectors.at("query_d2");
  const Bytes r = vectors.at("response_two_hypotheses");

  Bytes bad = q;
  bad[0] ^= 0xFF;
  EXPECT_EQ(error_of([&] { con::decode_query(bad); }), WireError::kBadMagic);
  bad = q;
  bad[4] = 2;
  EXPECT_EQ(error_of([&] { con::decode_query(bad); }), WireError::kUnsupportedVersion);
  EXPECT_EQ(error_of([&] { con::decode_response(q); }), WireError::kUnexpectedType);
  bad = q;
  bad[5] = 9;
  EXPECT_EQ(error_of([&] { con::decode_query(bad); }), WireError::kUnexpectedType);
  EXPECT_EQ(error_of([&] { con::decode_query(Bytes(q.begin(), q.begin() + 7)); }),
            WireError::kTruncated);
  EXPECT_EQ(error_of([&] { con::decode_query(Bytes(q.begin(), q.end() - 1)); }),
            WireError::kTruncated);
  bad = q;
  bad.push_back(0);
  EXPECT_EQ(error_of([&] { con::decode_query(bad); }), WireError::kLengthMismatch);
  // Payload length claims more content than the descriptors use.
  bad = q;
  bad.push_back(0);
  bad[6] += 1;
  EXPECT_EQ(error_of([&] { con::decode_query(bad); }), WireError::kLengthMismatch);

  // NaN in the first descriptor value.
  bad = q;
  const std::uint32_t nan = 0x7FC00000u;
  std::memcpy(&bad[12], &nan, 4);
  EXPECT_EQ(error_of([&] { con::decode_query(bad); }), WireError::kNaNField);

  // Likelihoods 0.75 + 0.25 -> 0.75 + 0.5.
  bad = r;
  const float half = 0.5f;
  std::memcpy(&bad[10 + 1 + 16 + 12], &half, 4);
  EXPECT_EQ(error_of([&] { con::decode_response(bad); }), WireError::kLikelihoodSum);

  bad = r;
  bad[10] = 6;
  EXPECT_EQ(error_of([&] { con::decode_response(bad); }), WireError::kTooManyHypotheses);

  // Second cell index repeats the first.
  bad = r;
  const std::size_t cells = 10 + 1 + 32 + 4 + 4;
  std::memcpy(&bad[cells + 16], &bad[cells], 8);
  EXPECT_EQ(error_of([&] { con::decode_response(bad); }), WireError::kInvalidCell);

  // Negative cell index.
  bad = r;
  const std::int32_t neg = -1;
  std::memcpy(&bad[cells], &neg, 4);
  EXPECT_EQ(error_of([&] { con::decode_response(bad); }), WireError::kInvalidCell);

  // Primary above 1.
  bad = r;
  const float over = 1.5f;
  std::memcpy(&bad[cells + 8], &over, 4);
  EXPECT_EQ(error_of([&] { con::decode_response(bad); }), WireError::kInvalidScore);
}

TEST(Errors, EncoderRejectsUnencodable) {
  MapResponse r = response(std::vector<WireHypothesis>(6, WireHypothesis{{}, 1.0 / 6}), {});
  EXPECT_EQ(error_of([&] { con::encode_response(r); }), WireError::kTooManyHypotheses);
  LocalizationQuery q{descriptor({1.0}), descriptor({1.0, 0.0}), {}};
  EXPECT_EQ(error_of([&] { con::encode_query(q); }), WireError::kInvalidField);
  q.target_query = descriptor({std::numeric_limits<double>::infinity()});
  EXPECT_EQ(error_of([&] { con::encode_query(q); }), WireError::kInvalidField);
}

TEST(Transport, FrameAssemblerSplitsStream) {
  const auto vectors = load_vectors();
  Bytes stream;
  std::vector<Bytes> frames;
  for (const auto& [name, b] : vectors) {
    frames.push_back(b);
    stream.insert(stream.end(), b.begin(), b.end());
  }
  con::FrameAssembler a;
  std::vector<Bytes> got;
  // Feed in awkward 3-byte chunks.
  for (std::size_t i = 0; i < stream.size(); i += 3) {
    const std::size_t n = std::min<std::size_t>(3, stream.size() - i);
    a.feed(std::span<const std::uint8_t>(stream.data() + i, n));
    while (auto f = a.next()) got.push_back(*f);
  }
  EXPECT_EQ(got, frames);
  EXPECT_EQ(a.buffered(), 0u);

  con::FrameAssembler bad;
  bad.feed(Bytes{'X', 'O', 'N', 'K', 1, 1, 0, 0, 0, 0});
  EXPECT_THROW(bad.next(), ProtocolError);
}

TEST(Transport, SocketPairCarriesQueryAndResponse) {
  int fds[2];
  ASSERT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds), 0);
  const auto vectors = load_vectors();
  const Bytes query = vectors.at("query_d2");
  const Bytes reply = vectors.at("response_five_hypotheses");
  std::thread server([&] {
    con::StreamTransport t(fds[1]);
    const Bytes in = t.receive();
    EXPECT_EQ(in, query);
    t.send(reply);
  });
  con::StreamTransport client(fds[0]);
  client.send(query);
  const Bytes out = client.receive();
  server.join();
  EXPECT_EQ(out, reply);
  ::close(fds[1]);
  EXPECT_THROW(client.receive(), std::runtime_error);
  ::close(fds[0]);
}

TEST(Transport, InProcessChannelIsFifo) {
  con::InProcessChannel ch;
  EXPECT_FALSE(ch.receive());
  ch.send(Bytes{1, 2});
  ch.send(Bytes{3});
  EXPECT_EQ(*ch.receive(), (Bytes{1, 2}));
  EXPECT_EQ(*ch.receive(), (Bytes{3}));
  EXPECT_TRUE(ch.empty());
}

// Merge algebra.

GridSpec student_spec() { return GridSpec{0.1, 40, 40, {}}; }

TEST(Merge, MaxAndSum) {
  ScoredGrid student(student_spec());
  student.set({2, 2}, {0.5, 0.5});
  const MapResponse r = response({{{0, 0, 0}, 1.0}}, {{{2, 2}, {0.8, 0.8}}});
  const ScoredGrid out = con::merge_maps(student, r);
  EXPECT_DOUBLE_EQ(out.get({2, 2}).primary, 0.8);
  EXPECT_DOUBLE_EQ(out.get({2, 2}).secondary, 1.3);
}

TEST(Merge, EmptyOrRejectedResponseLeavesStudent) {
  ScoredGrid student(student_spec());
  student.set({1, 1}, {0.3, 0.9});
  EXPECT_EQ(con::merge_maps(student, response({{{0, 0, 0}, 1.0}}, {})), student);
  EXPECT_EQ(con::merge_maps(student, response({}, {{{1, 1}, {0.9, 0.9}}})), student);
}

TEST(Merge, RepeatedMergeKeepsPrimaryAddsSecondary) {
  ScoredGrid student(student_spec());
  student.set({4, 4}, {0.6, 0.6});
  const MapResponse r =
      response({{{0.2, 0.1, 0}, 1.0}}, {{{2, 3}, {0.4, 0.7}}, {{5, 5}, {0.9, 1.0}}});
  const ScoredGrid once = con::merge_maps(student, r);
  const ScoredGrid twice = con::merge_maps(once, r);
  for (const auto& [c, s] : twice) {
    EXPECT_DOUBLE_EQ(s.primary, once.get(c).primary);
    const double contribution = once.get(c).secondary - student.get(c).secondary;
    EXPECT_NEAR(s.secondary, student.get(c).secondary + 2 * contribution, 1e-12);
  }
}

TEST(Merge, ResolutionMismatchThrows) {
  ScoredGrid student(GridSpec{0.2, 10, 10, {}});
  EXPECT_THROW(con::merge_maps(student, response({{{0, 0, 0}, 1.0}}, {{{1, 1}, {0.5, 0.5}}})),
               std::invalid_argument);
}

TEST(Proxy, RejectPathReturnsNothing) {
  con::TeacherDataset ds;
  ds.spec = GridSpec{0.1, 20, 20, {}};
  con::DatasetRecord rec;
  rec.pose = {0.55, 0.55, 0.0};
  rec.view = descriptor({1.0, 0.0});
  rec.observed = {{5, 5}, {6, 5}};
  ds.records = {rec};
  con::LocalizationModel model(0.0, 1);
  con::ProxyConfig pc;
  pc.tau = 0.99;  // rank-1 likelihood of five hypotheses is 16/31
  const LocalizationQuery q{descriptor({1.0, 0.0}), descriptor({1.0, 0.0}), {0.55, 0.55, 0.0}};
  const MapResponse r = con::proxy_handle_query(ds, q, model, con::PlaceClass{0, 0, 4}, pc);
  EXPECT_TRUE(r.rejected());
  EXPECT_TRUE(r.map.empty());
  ScoredGrid student(ds.spec);
  student.set({1, 1}, {0.2, 0.2});
  EXPECT_EQ(con::merge_maps(student, r), student);

  pc.tau = 0.0;
  const MapResponse ok = con::proxy_handle_query(ds, q, model, con::PlaceClass{0, 0, 4}, pc);
  ASSERT_FALSE(ok.rejected());
  EXPECT_EQ(ok.map.size(), 2u);
  EXPECT_EQ(ok.hypotheses.front().transform, con::SE2Transform::identity());

  const LocalizationQuery unrelated{descriptor({1.0, 0.0}), descriptor({0.0, 1.0}), {}};
  EXPECT_TRUE(con::proxy_handle_query(ds, unrelated, model, con::PlaceClass{0, 0, 4}, pc).map.empty());
}

TEST(Proxy, NovelViewRejected) {
  con::TeacherDataset ds;
  ds.spec = GridSpec{0.1, 20, 20, {}};
  con::DatasetRecord rec;
  rec.view = descriptor({1.0});
  rec.observed = {{0, 0}};
  ds.records = {rec};
  con::StudentProxy proxy(ds, con::LocalizationModel(0.0, 1));
  EXPECT_FALSE(proxy.oracle_place({5.5, 5.5, 0.0}));
  const LocalizationQuery q{descriptor({1.0}), descriptor({1.0}), {5.5, 5.5, 0.0}};
  EXPECT_TRUE(proxy.handle(q, std::nullopt).rejected());
}

}  // namespace
