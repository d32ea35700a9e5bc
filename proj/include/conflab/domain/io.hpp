#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "conflab/domain/grid.hpp"

namespace conflab::io {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* kFormatVersion = "1";

inline std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw Error(ErrorCode::IoFailure, "bad number '" + s + "'");
  return v;
}

// Values that may be +infinity are stored as the string "+inf".
inline ordered_json json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

inline double json_to_double(const ordered_json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  return j.get<double>();
}

// Write to a sibling temporary and rename, so readers never see partial files.
inline void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// RFC 4180 quoting, applied only to cells that need it.
inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_quote(cells[i]);
      out += "\n";
    };
    line(header);
    for (const auto& row : rows) line(row);
    return out;
  }

  size_t column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error(ErrorCode::IoFailure, "missing column '" + name + "'");
  }
};

// Accepts quoted cells (with "" escapes and embedded newlines), LF or CRLF, and empty trailing cells.
inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false, first = true, any = false;
  auto end_row = [&] {
    cells.push_back(std::move(cell));
    cell.clear();
    if (!(cells.size() == 1 && cells[0].empty() && !any)) {
      if (first) {
        t.header = std::move(cells);
        first = false;
      } else {
        if (cells.size() != t.header.size()) throw Error(ErrorCode::IoFailure, "ragged CSV row");
        t.rows.push_back(std::move(cells));
      }
    }
    cells.clear();
    any = false;
  };
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c != '"') {
        cell += c;
      } else if (i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == '"') {
      quoted = any = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::IoFailure, "unterminated quoted CSV cell");
  if (any || !cell.empty()) end_row();
  return t;
}

// Columnar node table: index, coordinate(s), then the named fields.
inline CsvTable field_table(const domain::Grid& g, const std::vector<std::pair<std::string, const domain::Field*>>& cols) {
  CsvTable t;
  t.header.push_back("index");
  if (g.radial()) {
    t.header.push_back("r");
  } else {
    for (int k = 0; k < g.dim(); ++k) t.header.push_back("x" + std::to_string(k));
  }
  for (const auto& c : cols) t.header.push_back(c.first);
  for (domain::Index i = 0; i < g.size(); ++i) {
    std::vector<std::string> row;
    row.push_back(std::to_string(i));
    if (g.radial()) {
      row.push_back(fmt_double(g.r()(i)));
    } else {
      for (int k = 0; k < g.dim(); ++k) row.push_back(fmt_double(g.coord(i, k)));
    }
    for (const auto& c : cols) row.push_back(fmt_double((*c.second)(i)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline domain::Field column_field(const CsvTable& t, const std::string& name) {
  const size_t c = t.column(name);
  domain::Field f(static_cast<domain::Index>(t.rows.size()));
  for (size_t i = 0; i < t.rows.size(); ++i) f(static_cast<domain::Index>(i)) = parse_double(t.rows[i][c]);
  return f;
}

// Throws InvalidConfig on any key outside `allowed`.
inline void require_keys(const ordered_json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + k + "' in " + where);
}

inline ordered_json grid_to_json(const domain::GridConfig& c) {
  ordered_json j;
  j["dim"] = c.dim;
  if (const auto* r = std::get_if<domain::RadialSpec>(&c.mode)) {
    j["mode"] = "radial";
    j["r_max"] = r->r_max;
    j["nodes"] = r->node_count;
    j["stretch"] = r->stretch;
  } else {
    const auto& p = std::get<domain::PeriodicSpec>(c.mode);
    j["mode"] = "periodic";
    j["box_length"] = p.box_length;
    j["nodes_per_axis"] = p.nodes_per_axis;
  }
  return j;
}

inline domain::GridConfig grid_from_json(const ordered_json& j) {
  domain::GridConfig c;
  try {
    const std::string mode = j.value("mode", std::string("radial"));
    c.dim = j.value("dim", 3);
    if (mode == "radial") {
      require_keys(j, {"dim", "mode", "r_max", "nodes", "stretch"}, "grid");
      domain::RadialSpec r;
      r.r_max = j.value("r_max", r.r_max);
      r.node_count = j.value("nodes", r.node_count);
      r.stretch = j.value("stretch", r.stretch);
      c.mode = r;
    } else if (mode == "periodic") {
      require_keys(j, {"dim", "mode", "box_length", "nodes_per_axis"}, "grid");
      domain::PeriodicSpec p;
      p.box_length = j.value("box_length", p.box_length);
      p.nodes_per_axis = j.value("nodes_per_axis", p.nodes_per_axis);
      c.mode = p;
    } else {
      throw Error(ErrorCode::InvalidConfig, "grid.mode must be radial or periodic");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("grid: ") + e.what());
  }
  return c;
}

}  // namespace conflab::io
