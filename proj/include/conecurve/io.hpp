#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace conecurve::io {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw Error(ErrorCode::InvalidConfig, "not a number: '" + text + "'");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> footer;

  void add_row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    rows.push_back(std::move(cells));
  }

  double number(std::size_t row, std::size_t col) const { return parse_double(rows.at(row).at(col)); }

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::InvalidConfig, "no column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline std::string join(const std::vector<std::string>& cells, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += sep;
    out += cells[i];
  }
  return out;
}

inline std::string to_csv(const CsvTable& t) {
  std::ostringstream os;
  os << join(t.header) << '\n';
  for (const auto& r : t.rows) os << join(r) << '\n';
  for (const auto& f : t.footer) os << "# " << f << '\n';
  return os.str();
}

inline CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.footer.push_back(line.size() > 2 ? line.substr(2) : std::string{});
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

// Writes through a temporary file in the same directory, then renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorCode::InvalidConfig, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& t) { write_file_atomic(path, to_csv(t)); }

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read " + path.string());
  return parse_csv(in);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Flat key=value lines; '#' starts a comment.
inline std::map<std::string, std::string> parse_config(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config " + path.string());
  return parse_config(in);
}

using Polyline = std::vector<std::pair<double, double>>;

struct SvgPanel {
  std::string title;
  std::vector<Polyline> lines;
  // Drawn thin and grey behind the curves.
  std::vector<Polyline> guides;
  // Palette index per line; lines are numbered in order when absent.
  std::vector<std::size_t> color_of;
};

namespace detail {

inline void bounds(const std::vector<Polyline>& lines, double& x0, double& x1, double& y0, double& y1) {
  for (const auto& pl : lines)
    for (const auto& [x, y] : pl) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
}

}  // namespace detail

// Side-by-side panels with equal aspect ratio, one polyline per curve.
inline std::string render_svg(const std::vector<SvgPanel>& panels, double panel_size = 400.0) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const double pad = 20.0;
  const double width = panel_size * static_cast<double>(std::max<std::size_t>(1, panels.size()));
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\""
     << panel_size + pad << "\" viewBox=\"0 0 " << width << ' ' << panel_size + pad << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    detail::bounds(panel.lines, x0, x1, y0, y1);
    if (!(x0 <= x1)) x0 = -1, x1 = 1, y0 = -1, y1 = 1;
    const double span = std::max({x1 - x0, y1 - y0, 1e-12});
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    const double scale = (panel_size - 2.0 * pad) / span;
    const double ox = static_cast<double>(p) * panel_size;
    auto map = [&](double x, double y) {
      return std::pair{ox + panel_size / 2.0 + (x - cx) * scale, pad + panel_size / 2.0 - (y - cy) * scale};
    };
    os << "<g>\n<text x=\"" << ox + pad << "\" y=\"" << pad << "\" font-family=\"sans-serif\" font-size=\"12\">"
       << panel.title << "</text>\n";
    auto emit = [&](const Polyline& pl, const std::string& style) {
      os << "<polyline fill=\"none\" " << style << " points=\"";
      bool first = true;
      for (const auto& [x, y] : pl) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        const auto [sx, sy] = map(x, y);
        if (std::abs(sx - ox - panel_size / 2) > 4 * panel_size || std::abs(sy) > 5 * panel_size) continue;
        if (!first) os << ' ';
        os << format_double(std::round(sx * 100) / 100) << ',' << format_double(std::round(sy * 100) / 100);
        first = false;
      }
      os << "\"/>\n";
    };
    for (const auto& g : panel.guides) emit(g, "stroke=\"#aaaaaa\" stroke-width=\"0.8\" stroke-dasharray=\"4 3\"");
    for (std::size_t i = 0; i < panel.lines.size(); ++i)
      emit(panel.lines[i], std::string("stroke=\"") +
                               colors[(panel.color_of.size() == panel.lines.size() ? panel.color_of[i] : i) % 6] +
                               "\" stroke-width=\"1.5\"");
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace conecurve::io
