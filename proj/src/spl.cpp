#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "con/harness.hpp"

namespace con {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kProposed: return "proposed";
    case Method::kWithoutMerge: return "w/o_merge";
    case Method::kFrontier: return "frontier";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "proposed") return Method::kProposed;
  if (s == "w/o_merge" || s == "wo_merge") return Method::kWithoutMerge;
  if (s == "frontier") return Method::kFrontier;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

double EpisodeResult::spl_term() const {
  if (!success || !(l > 0.0)) return 0.0;
  return l / std::max(p, l);
}

double compute_spl(std::span<const EpisodeResult> results, std::size_t* excluded) {
  if (results.empty()) throw std::invalid_argument("compute_spl: empty result list");
  double sum = 0.0;
  std::size_t n = 0;
  std::size_t skipped = 0;
  for (const EpisodeResult& r : results) {
    if (!(r.l > 0.0)) {
      ++skipped;
      continue;
    }
    sum += r.spl_term();
    ++n;
  }
  if (excluded) *excluded = skipped;
  if (n == 0) throw std::invalid_argument("compute_spl: every episode has l = 0");
  return sum / static_cast<double>(n);
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

template <class T>
T parse_number(std::string_view s, const char* what) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw std::invalid_argument(std::string("csv: bad ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

constexpr const char* kHeader =
    "world,scenario,method,pe,target_id,seed,success,p,l,spl_term,query_bytes,"
    "response_bytes,merges,steps";

}  // namespace

std::string curve_label(const CurveSpec& c) {
  return std::string(scenario_name(c.scenario)) + "/" + std::string(method_name(c.method)) +
         "/" + fmt_double(c.pe);
}

void write_csv(std::ostream& out, std::span<const EpisodeRow> rows) {
  out << kHeader << "\r\n";
  for (const EpisodeRow& row : rows) {
    const EpisodeResult& r = row.result;
    out << row.world_seed << ',' << scenario_name(row.curve.scenario) << ','
        << method_name(row.curve.method) << ',' << fmt_double(row.curve.pe) << ','
        << r.target_id << ',' << r.seed << ',' << (r.success ? 1 : 0) << ',' << fmt_double(r.p)
        << ',' << fmt_double(r.l) << ',' << fmt_double(r.spl_term()) << ',' << r.query_bytes
        << ',' << r.response_bytes << ',' << r.merges << ',' << r.steps << "\r\n";
  }
}

std::vector<EpisodeRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw std::invalid_argument("csv: unexpected header");
  std::vector<EpisodeRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 14) {
      throw std::invalid_argument("csv line " + std::to_string(lineno) + ": expected 14 fields");
    }
    EpisodeRow row;
    row.world_seed = parse_number<std::uint64_t>(f[0], "world");
    row.curve.scenario = parse_scenario(f[1]);
    row.curve.method = parse_method(f[2]);
    row.curve.pe = parse_number<double>(f[3], "pe");
    EpisodeResult& r = row.result;
    r.target_id = parse_number<int>(f[4], "target_id");
    r.seed = parse_number<std::uint64_t>(f[5], "seed");
    r.success = parse_number<int>(f[6], "success") != 0;
    r.p = parse_number<double>(f[7], "p");
    r.l = parse_number<double>(f[8], "l");
    r.query_bytes = parse_number<std::uint64_t>(f[10], "query_bytes");
    r.response_bytes = parse_number<std::uint64_t>(f[11], "response_bytes");
    r.merges = parse_number<int>(f[12], "merges");
    r.steps = parse_number<long>(f[13], "steps");
    rows.push_back(std::move(row));
  }
  return rows;
}

const CurveSummary* RunSummary::find(const CurveSpec& c) const {
  for (const CurveSummary& s : curves) {
    if (s.curve == c) return &s;
  }
  return nullptr;
}

RunSummary summarize(std::vector<EpisodeRow> rows, std::span<const CurveSpec> curves) {
  RunSummary out;
  out.rows = std::move(rows);
  std::vector<CurveSpec> order(curves.begin(), curves.end());
  if (order.empty()) {
    for (const EpisodeRow& r : out.rows) {
      if (std::find(order.begin(), order.end(), r.curve) == order.end()) order.push_back(r.curve);
    }
  }
  for (const CurveSpec& c : order) {
    CurveSummary s;
    s.curve = c;
    std::vector<EpisodeResult> results;
    std::map<std::pair<std::uint64_t, int>, std::pair<double, int>> acc;
    double qb = 0.0;
    double rb = 0.0;
    std::size_t successes = 0;
    for (const EpisodeRow& r : out.rows) {
      if (r.curve != c) continue;
      results.push_back(r.result);
      qb += static_cast<double>(r.result.query_bytes);
      rb += static_cast<double>(r.result.response_bytes);
      if (r.result.success) ++successes;
      if (r.result.l > 0.0) {
        auto& slot = acc[{r.world_seed, r.result.target_id}];
        slot.first += r.result.spl_term();
        slot.second += 1;
      }
    }
    s.episodes = results.size();
    if (!results.empty()) {
      const double n = static_cast<double>(results.size());
      s.mean_query_bytes = qb / n;
      s.mean_response_bytes = rb / n;
      s.success_rate = static_cast<double>(successes) / n;
      try {
        s.mean_spl = compute_spl(results, &s.excluded);
      } catch (const std::invalid_argument&) {
        s.excluded = results.size();
      }
    }
    for (const auto& [key, v] : acc) {
      s.per_target[key] = v.first / v.second;
      s.sorted_spl.push_back(v.first / v.second);
    }
    std::sort(s.sorted_spl.begin(), s.sorted_spl.end(), std::greater<>());
    out.curves.push_back(std::move(s));
  }
  return out;
}

void write_summary(std::ostream& out, const RunSummary& summary) {
  char line[256];
  std::snprintf(line, sizeof line, "%-44s %8s %8s %9s %8s %11s %11s\n", "curve", "episodes",
                "excluded", "mean_spl", "success", "query_B", "response_B");
  out << line;
  for (const CurveSummary& s : summary.curves) {
    std::snprintf(line, sizeof line, "%-44s %8zu %8zu %9.4f %8.3f %11.1f %11.1f\n",
                  curve_label(s.curve).c_str(), s.episodes, s.excluded, s.mean_spl,
                  s.success_rate, s.mean_query_bytes, s.mean_response_bytes);
    out << line;
  }
  for (const std::string& e : summary.errors) out << "error: " << e << '\n';
}

}  // namespace con
