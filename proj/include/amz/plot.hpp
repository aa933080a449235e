#pragma once

// Minimal standalone SVG line plots of CSV series.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "amz/error.hpp"

namespace amz {

struct PlotSpec {
  std::string x_column;
  std::vector<std::string> y_columns;  // empty: every column except x
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

struct CsvTable {
  std::vector<std::string> comments;  // '#' lines, without the marker
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error(ErrorKind::malformed_series, "no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1));
      continue;
    }
    if (t.columns.empty()) {
      t.columns = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.columns.size())
      throw Error(ErrorKind::malformed_series, "line " + std::to_string(lineno) + ": wrong number of cells");
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size())
        throw Error(ErrorKind::malformed_series, "line " + std::to_string(lineno) + ": non-numeric cell '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty() || t.rows.empty()) throw Error(ErrorKind::malformed_series, "series is empty");
  return t;
}

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// SVG text for the table; identical input gives identical bytes.
inline std::string render_svg(const CsvTable& t, const PlotSpec& spec) {
  const std::size_t xc = t.column(spec.x_column);
  std::vector<std::size_t> ycs;
  if (spec.y_columns.empty()) {
    for (std::size_t k = 0; k < t.columns.size(); ++k)
      if (k != xc) ycs.push_back(k);
  } else {
    for (const auto& name : spec.y_columns) ycs.push_back(t.column(name));
  }
  if (ycs.empty()) throw Error(ErrorKind::malformed_series, "nothing to plot");

  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  auto usable = [&](double v) { return std::isfinite(v) && (!spec.log_y || v > 0.0); };
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& row : t.rows) {
    if (!std::isfinite(row[xc])) continue;
    for (auto yc : ycs) {
      if (!usable(row[yc])) continue;
      x_lo = std::min(x_lo, row[xc]);
      x_hi = std::max(x_hi, row[xc]);
      y_lo = std::min(y_lo, ty(row[yc]));
      y_hi = std::max(y_hi, ty(row[yc]));
    }
  }
  if (!(x_lo <= x_hi)) throw Error(ErrorKind::malformed_series, "no plottable points");
  if (x_lo == x_hi) x_hi = x_lo + 1.0;
  if (y_lo == y_hi) y_hi = y_lo + 1.0;

  const double W = 720, H = 450, L = 80, R = 160, T = 40, B = 60;
  auto px = [&](double x) { return L + (x - x_lo) / (x_hi - x_lo) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y_lo) / (y_hi - y_lo) * (H - T - B); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"450\" viewBox=\"0 0 720 450\">\n";
  for (const auto& c : t.comments) {
    std::string safe = c;
    for (std::size_t p; (p = safe.find("--")) != std::string::npos;) safe.replace(p, 2, "- -");
    s += "<!-- " + safe + " -->\n";
  }
  s += "<rect width=\"720\" height=\"450\" fill=\"white\"/>\n";
  s += "<text x=\"360\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
       detail::xml_escape(spec.title) + "</text>\n";
  s += "<g stroke=\"black\" fill=\"none\"><rect x=\"" + detail::fmt("%.2f", L) + "\" y=\"" + detail::fmt("%.2f", T) +
       "\" width=\"" + detail::fmt("%.2f", W - L - R) + "\" height=\"" + detail::fmt("%.2f", H - T - B) + "\"/></g>\n";

  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x_lo + (x_hi - x_lo) * k / 5.0;
    const double yv = y_lo + (y_hi - y_lo) * k / 5.0;
    s += "<text x=\"" + detail::fmt("%.2f", px(xv)) + "\" y=\"" + detail::fmt("%.2f", H - B + 16) +
         "\" text-anchor=\"middle\">" + detail::fmt("%.4g", xv) + "</text>\n";
    s += "<text x=\"" + detail::fmt("%.2f", L - 6) + "\" y=\"" + detail::fmt("%.2f", py(yv) + 4) +
         "\" text-anchor=\"end\">" + (spec.log_y ? "1e" + detail::fmt("%.3g", yv) : detail::fmt("%.4g", yv)) +
         "</text>\n";
  }
  s += "<text x=\"" + detail::fmt("%.2f", L + (W - L - R) / 2) + "\" y=\"" + detail::fmt("%.2f", H - 16) +
       "\" text-anchor=\"middle\">" + detail::xml_escape(spec.x_label.empty() ? t.columns[xc] : spec.x_label) +
       "</text>\n";
  s += "<text x=\"18\" y=\"" + detail::fmt("%.2f", T + (H - T - B) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       detail::fmt("%.2f", T + (H - T - B) / 2) + ")\">" +
       detail::xml_escape(spec.y_label.empty() ? (spec.log_y ? "value (log scale)" : "value") : spec.y_label) +
       "</text>\n</g>\n";

  for (std::size_t k = 0; k < ycs.size(); ++k) {
    const std::string colour = palette[k % 7];
    std::string pts;
    for (const auto& row : t.rows) {
      if (!std::isfinite(row[xc]) || !usable(row[ycs[k]])) continue;
      pts += detail::fmt("%.2f", px(row[xc])) + "," + detail::fmt("%.2f", py(ty(row[ycs[k]]))) + " ";
    }
    if (!pts.empty()) pts.pop_back();
    s += "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    const double ly = T + 14 + 18.0 * static_cast<double>(k);
    s += "<line x1=\"" + detail::fmt("%.2f", W - R + 12) + "\" y1=\"" + detail::fmt("%.2f", ly) + "\" x2=\"" +
         detail::fmt("%.2f", W - R + 36) + "\" y2=\"" + detail::fmt("%.2f", ly) + "\" stroke=\"" + colour +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + detail::fmt("%.2f", W - R + 42) + "\" y=\"" + detail::fmt("%.2f", ly + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::xml_escape(t.columns[ycs[k]]) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

inline void emit_plot(const std::string& csv_path, const PlotSpec& spec, const std::string& svg_path) {
  write_text_file(svg_path, render_svg(parse_csv(read_text_file(csv_path)), spec));
}

}  // namespace amz
