#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fnls/errors.hpp"
#include "fnls/functionals.hpp"
#include "fnls/grid.hpp"
#include "fnls/solvers.hpp"

namespace fnls::io {

using json = nlohmann::ordered_json;

/// Locale-independent shortest-exact decimal with at most 17 significant digits.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw FormatError("cannot format number");
  return std::string(buf, end);
}

inline bool parse_double(const std::string& s, double& out) {
  if (s == "nan") {
    out = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  if (s == "inf") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  if (s == "-inf") {
    out = -std::numeric_limits<double>::infinity();
    return true;
  }
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

// ---------------------------------------------------------------- fields

namespace detail {

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

} // namespace detail

/// Header "FNLS1 N M L s" then M^N little-endian float64 values, row-major.
inline void write_field(const std::filesystem::path& path, const Field& u) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  const GridSpec& g = u.grid;
  out << "FNLS1 " << g.dim << ' ' << g.points << ' ' << format_double(g.half_width) << ' ' << format_double(g.s)
      << '\n';
  std::vector<std::uint64_t> raw(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) raw[i] = detail::to_little(std::bit_cast<std::uint64_t>(u.values[i]));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
  if (!out) throw FormatError("write failed for " + path.string());
}

inline Field read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw FormatError("missing FNLS1 header");
  std::istringstream hs(header);
  std::string magic, sN, sM, sL, ss, extra;
  hs >> magic >> sN >> sM >> sL >> ss;
  if (magic != "FNLS1") throw FormatError("bad magic in field header: '" + magic + "'");
  if (ss.empty() || (hs >> extra)) throw FormatError("field header must read 'FNLS1 N M L s'");
  GridSpec g;
  double N = 0, M = 0;
  if (!parse_double(sN, N) || !parse_double(sM, M) || !parse_double(sL, g.half_width) || !parse_double(ss, g.s))
    throw FormatError("unparsable field header: '" + header + "'");
  if (N != std::floor(N) || M != std::floor(M)) throw FormatError("field header: N and M must be integers");
  g.dim = static_cast<int>(N);
  g.points = static_cast<int>(M);
  try {
    g.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("field header describes an invalid grid: ") + e.what());
  }
  const std::size_t n = g.total();
  std::vector<std::uint64_t> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 8));
  if (static_cast<std::size_t>(in.gcount()) != n * 8)
    throw FormatError("field payload too short: expected " + std::to_string(n * 8) + " bytes");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("field payload longer than the header declares");
  Field u(g);
  for (std::size_t i = 0; i < n; ++i) u.values[i] = std::bit_cast<double>(detail::to_little(raw[i]));
  return u;
}

// ---------------------------------------------------------------- tables

using Cell = std::variant<double, std::string>;

/// Column-named table; numeric cells print with 17 significant digits.
class Table {
public:
  Table() = default;
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {
    std::set<std::string> seen;
    for (const auto& c : columns_)
      if (!seen.insert(c).second) throw FormatError("duplicate column name '" + c + "'");
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  void add(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw FormatError("row width does not match the header");
    rows_.push_back(std::move(row));
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i] == name) return i;
    throw FormatError("no column '" + name + "'");
  }
  double number(std::size_t row, const std::string& name) const {
    const Cell& c = rows_.at(row).at(column(name));
    if (auto d = std::get_if<double>(&c)) return *d;
    throw FormatError("column '" + name + "' is not numeric");
  }

private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

namespace detail {

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::vector<std::string> split_csv_line(std::istream& in, bool& ok) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false, any = false;
  ok = false;
  for (int ch; (ch = in.get()) != std::char_traits<char>::eof();) {
    any = true;
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          cur += '"';
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      ok = true;
      break;
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw FormatError("unterminated quoted CSV cell");
  if (any) {
    cells.push_back(std::move(cur));
    ok = true;
  }
  return cells;
}

} // namespace detail

inline std::string to_csv(const Table& t) {
  std::ostringstream out;
  for (std::size_t i = 0; i < t.columns().size(); ++i) out << (i ? "," : "") << detail::quote(t.columns()[i]);
  out << '\n';
  for (const auto& row : t.rows()) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (auto d = std::get_if<double>(&row[i]))
        out << format_double(*d);
      else
        out << detail::quote(std::get<std::string>(row[i]));
    }
    out << '\n';
  }
  return out.str();
}

inline void write_report(const std::filesystem::path& path, const Table& t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << to_csv(t);
  if (!out) throw FormatError("write failed for " + path.string());
}

inline Table parse_csv(std::istream& in) {
  bool ok = false;
  auto header = detail::split_csv_line(in, ok);
  if (!ok) throw FormatError("CSV has no header line");
  Table t(header);
  for (;;) {
    auto cells = detail::split_csv_line(in, ok);
    if (!ok) break;
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != header.size()) throw FormatError("CSV row width does not match the header");
    std::vector<Cell> row;
    for (auto& c : cells) {
      double v;
      if (parse_double(c, v))
        row.emplace_back(v);
      else
        row.emplace_back(std::move(c));
    }
    t.add(std::move(row));
  }
  return t;
}

inline Table read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return parse_csv(in);
}

// ---------------------------------------------------------------- JSON

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON in ") + path.string() + ": " + e.what());
  }
}

inline json to_json(const EnergyBreakdown& e) {
  return json{{"kinetic", e.kinetic},
              {"mass", e.mass},
              {"potential_term", e.potential_term},
              {"penalty", e.penalty},
              {"total", e.total}};
}

inline json to_json(const Point& p, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

inline json summary(const SolveResult& r) {
  const int dim = r.field.grid.dim;
  return json{{"seed_tag", r.seed_tag},
              {"converged", r.converged},
              {"stagnated", r.stagnated},
              {"message", r.message},
              {"iterations", r.iterations},
              {"residual", r.residual},
              {"pohozaev", std::isfinite(r.pohozaev) ? json(r.pohozaev) : json(nullptr)},
              {"energy", to_json(r.energy)},
              {"barycenter", to_json(r.barycenter, dim)},
              {"penalty_zero", r.penalty_zero},
              {"negative_mass", r.negative_mass},
              {"negative_flag", r.negative_flag}};
}

/// Iterate log with columns iter, energy, residual, pohozaev, penalty, step_size, phase.
inline Table iterate_table(const SolveResult& r) {
  Table t({"iter", "energy", "residual", "pohozaev", "penalty", "step_size", "phase"});
  for (const auto& rec : r.log)
    t.add({static_cast<double>(rec.iter), rec.energy, rec.residual, rec.pohozaev, rec.penalty, rec.step_size,
           static_cast<double>(rec.phase)});
  return t;
}

} // namespace fnls::io
