#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "con/world.hpp"

namespace con {
namespace {

// Shortest representation that parses back to the same double.
std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_real(const std::string& tok, const char* what) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    throw WorldError(std::string("load_world: bad ") + what + " '" + tok + "'");
  }
  return v;
}

int parse_int(const std::string& tok, const char* what) {
  int v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    throw WorldError(std::string("load_world: bad ") + what + " '" + tok + "'");
  }
  return v;
}

}  // namespace

void save_world(const World& w, std::ostream& out) {
  const GridSpec& spec = w.spec();
  if (spec.origin.x != 0.0 || spec.origin.y != 0.0) {
    throw WorldError("save_world: only worlds anchored at the origin are serializable");
  }
  out << "CONWORLD v1 " << spec.width << ' ' << spec.height << ' '
      << format_real(spec.resolution) << '\n';
  std::string row(static_cast<std::size_t>(spec.width), '.');
  for (int iy = 0; iy < spec.height; ++iy) {
    for (int ix = 0; ix < spec.width; ++ix) {
      row[static_cast<std::size_t>(ix)] = w.is_obstacle({ix, iy}) ? '#' : '.';
    }
    out << row << '\n';
  }
  for (const auto& [id, p] : w.targets()) {
    out << "target " << id << ' ' << format_real(p.x) << ' ' << format_real(p.y) << '\n';
  }
}

World load_world(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw WorldError("load_world: empty input");
  std::istringstream header(line);
  std::string magic, version, ws, hs, rs, extra;
  header >> magic >> version >> ws >> hs >> rs;
  if (magic != "CONWORLD" || version != "v1" || rs.empty() || (header >> extra)) {
    throw WorldError("load_world: bad header '" + line + "'");
  }
  GridSpec spec{parse_real(rs, "resolution"), parse_int(ws, "width"), parse_int(hs, "height"),
                {0.0, 0.0}};
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw WorldError(std::string("load_world: ") + e.what());
  }
  std::vector<std::uint8_t> occ(spec.cell_count(), 0);
  for (int iy = 0; iy < spec.height; ++iy) {
    if (!std::getline(in, line)) throw WorldError("load_world: missing grid rows");
    if (static_cast<int>(line.size()) != spec.width) {
      throw WorldError("load_world: row " + std::to_string(iy) + " has wrong width");
    }
    for (int ix = 0; ix < spec.width; ++ix) {
      const char ch = line[static_cast<std::size_t>(ix)];
      if (ch != '#' && ch != '.') throw WorldError("load_world: bad cell character");
      occ[flat_index(spec, {ix, iy})] = ch == '#' ? 1 : 0;
    }
  }
  std::map<int, Vec2> targets;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ts(line);
    std::string kw, ids, xs, ys;
    ts >> kw >> ids >> xs >> ys;
    if (kw != "target" || ys.empty() || (ts >> extra)) {
      throw WorldError("load_world: bad target line '" + line + "'");
    }
    const int id = parse_int(ids, "target id");
    if (!targets.emplace(id, Vec2{parse_real(xs, "x"), parse_real(ys, "y")}).second) {
      throw WorldError("load_world: duplicate target id");
    }
  }
  return World(spec, std::move(occ), std::move(targets));
}

std::string world_to_string(const World& w) {
  std::ostringstream out;
  save_world(w, out);
  return out.str();
}

World world_from_string(const std::string& text) {
  std::istringstream in(text);
  return load_world(in);
}

}  // namespace con
