#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include <json.hpp>

#include "muskat/rundir.hpp"

namespace fs = std::filesystem;
using muskat::CsvTable;
using muskat::read_csv;

namespace {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct LinePlot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<Series> series;
  std::vector<std::string> notes;
};

constexpr double kWidth = 720, kHeight = 460, kLeft = 80, kRight = 200, kTop = 40, kBottom = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double map(double v, double a, double b) const {
    const double u = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo)) : (v - lo) / (hi - lo);
    return a + u * (b - a);
  }
  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double e = std::floor(std::log10(lo)); e <= std::ceil(std::log10(hi)); ++e) {
        const double v = std::pow(10.0, e);
        if (v >= lo * (1 - 1e-9) && v <= hi * (1 + 1e-9)) t.push_back(v);
      }
      if (t.size() < 2) t = {lo, hi};
    } else {
      for (int k = 0; k <= 5; ++k) t.push_back(lo + (hi - lo) * k / 5.0);
    }
    return t;
  }
};

Axis fit_axis(const std::vector<Series>& series, bool use_x, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series)
    for (double v : use_x ? s.x : s.y) {
      if (!std::isfinite(v) || (log && v <= 0.0)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) lo = log ? 1e-3 : 0.0, hi = log ? 1.0 : 1.0;
  if (hi <= lo) {
    const double pad = log ? 0 : std::max(1e-12, std::abs(lo) * 0.1 + 1e-12);
    if (log) lo /= 2, hi *= 2;
    else lo -= pad, hi += pad;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

void write_line_plot(const fs::path& path, const LinePlot& p) {
  const Axis ax = fit_axis(p.series, true, p.logx);
  const Axis ay = fit_axis(p.series, false, p.logy);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(p.title)
      << "</text>\n"
      << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    const double x = ax.map(t, x0, x1);
    out << "<line x1=\"" << x << "\" y1=\"" << y0 << "\" x2=\"" << x << "\" y2=\"" << y0 + 5 << "\" stroke=\"black\"/>"
        << "<text x=\"" << x << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double y = ay.map(t, y0, y1);
    out << "<line x1=\"" << x0 - 5 << "\" y1=\"" << y << "\" x2=\"" << x0 << "\" y2=\"" << y << "\" stroke=\"black\"/>"
        << "<text x=\"" << x0 - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">" << escape(p.xlabel)
      << "</text>\n"
      << "<text x=\"18\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (y0 + y1) / 2 << ")\">" << escape(p.ylabel) << "</text>\n";
  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const Series& s = p.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\""
        << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if ((p.logx && s.x[i] <= 0) || (p.logy && s.y[i] <= 0)) continue;
      out << ax.map(s.x[i], x0, x1) << "," << ay.map(s.y[i], y0, y1) << " ";
    }
    out << "\"/>\n";
    const double ly = y1 + 16 + 18 * k;
    out << "<line x1=\"" << x1 + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << x1 + 36 << "\" y2=\"" << ly - 4
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>"
        << "<text x=\"" << x1 + 42 << "\" y=\"" << ly << "\">" << escape(s.name) << "</text>\n";
  }
  for (std::size_t k = 0; k < p.notes.size(); ++k)
    out << "<text x=\"" << x0 + 8 << "\" y=\"" << y1 + 16 + 16 * k << "\" fill=\"#333\">" << escape(p.notes[k])
        << "</text>\n";
  out << "</svg>\n";
}

void write_heat_map(const fs::path& path, const CsvTable& scan) {
  // rows: snapshot times; columns margin_r<upper> per distance bin
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < scan.columns.size(); ++c)
    if (scan.columns[c].rfind("margin_r", 0) == 0) cols.push_back(c);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : scan.rows)
    for (std::size_t c : cols)
      if (std::isfinite(row[c])) lo = std::min(lo, row[c]), hi = std::max(hi, row[c]);
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi <= lo) hi = lo + 1;
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double cw = (x1 - x0) / std::max<std::size_t>(1, cols.size());
  const double ch = (y0 - y1) / std::max<std::size_t>(1, scan.rows.size());
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << "modulus margin: min over pairs of omega_bar(r/t) - |grad f(x) - grad f(y)|</text>\n";
  for (std::size_t r = 0; r < scan.rows.size(); ++r)
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double v = scan.rows[r][cols[k]];
      std::string fill = "#dddddd";
      if (std::isfinite(v)) {
        const double u = (v - lo) / (hi - lo);
        char buf[16];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(255 * (1 - u)), static_cast<int>(80 + 150 * u),
                      static_cast<int>(255 * u));
        fill = buf;
      }
      out << "<rect x=\"" << x0 + k * cw << "\" y=\"" << y1 + r * ch << "\" width=\"" << cw << "\" height=\"" << ch
          << "\" fill=\"" << fill << "\"/>\n";
    }
  for (std::size_t r = 0; r < scan.rows.size(); ++r)
    out << "<text x=\"" << x0 - 6 << "\" y=\"" << y1 + (r + 0.5) * ch + 4 << "\" text-anchor=\"end\">t="
        << num(scan.rows[r][0]) << "</text>\n";
  for (std::size_t k = 0; k < cols.size(); k += 3)
    out << "<text x=\"" << x0 + (k + 0.5) * cw << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">"
        << escape(scan.columns[cols[k]].substr(8)) << "</text>\n";
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">pair distance (bin upper edge)</text>\n"
      << "<text x=\"" << x1 + 12 << "\" y=\"" << y1 + 16 << "\">min " << num(lo) << " (red)</text>\n"
      << "<text x=\"" << x1 + 12 << "\" y=\"" << y1 + 34 << "\">max " << num(hi) << " (blue)</text>\n</svg>\n";
}

std::vector<double> column(const CsvTable& t, const std::string& name) {
  const std::size_t c = t.column(name);
  std::vector<double> out;
  for (const auto& row : t.rows) out.push_back(row[c]);
  return out;
}

// Least-squares slope of log(y) against x (or log x).
double fit_slope(const std::vector<double>& x, const std::vector<double>& y, bool log_x) {
  double n = 0, mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (y[i] > 0 && (!log_x || x[i] > 0)) n += 1, mx += log_x ? std::log(x[i]) : x[i], my += std::log(y[i]);
  if (n < 2) return std::nan("");
  mx /= n, my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (y[i] > 0 && (!log_x || x[i] > 0)) {
      const double u = (log_x ? std::log(x[i]) : x[i]) - mx;
      sxy += u * (std::log(y[i]) - my), sxx += u * u;
    }
  return sxx > 0 ? sxy / sxx : std::nan("");
}

}  // namespace

int cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out) {
  fs::create_directories(out);
  LinePlot slope{"slope sup vs time", "t", "max |grad f|", false, true, {}, {}};
  LinePlot curvature{"t * curvature sup vs time", "t", "t * max |D^2 f|", false, false, {}, {}};
  LinePlot envelope{"increment envelope vs time", "t", "envelope", false, false, {}, {}};
  LinePlot decay{"slope decay (log-log)", "t", "max |grad f|", true, true, {}, {}};
  LinePlot ladder{"viscosity ladder distances", "rung", "sup distance", false, true, {}, {}};
  bool any_ladder = false;
  std::vector<fs::path> runs;
  for (const auto& dir : run_dirs) {
    if (fs::exists(dir / "distances.csv")) {
      const CsvTable d = read_csv(dir / "distances.csv");
      ladder.series.push_back({dir.filename().string(), column(d, "rung"), column(d, "sup_distance"), false});
      any_ladder = true;
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && fs::exists(e.path() / "diagnostics.csv")) runs.push_back(e.path());
      std::sort(runs.begin(), runs.end());
    } else if (fs::exists(dir / "diagnostics.csv")) {
      runs.push_back(dir);
    } else {
      std::cerr << "report: " << dir << " has no diagnostics.csv or distances.csv\n";
      return 2;
    }
  }
  for (const auto& dir : runs) {
    const CsvTable d = read_csv(dir / "diagnostics.csv");
    const std::string label = dir.filename().string();
    const auto t = column(d, "t");
    const auto s = column(d, "slope_sup");
    const auto h = column(d, "hessian_sup");
    slope.series.push_back({label, t, s, false});
    const double rate = fit_slope(t, s, false);
    slope.notes.push_back(label + ": fitted rate d log(slope)/dt = " + num(rate));
    std::vector<double> th(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) th[i] = t[i] * h[i];
    curvature.series.push_back({label, t, th, false});
    for (std::size_t k = 0;; ++k) {
      const std::string name = "envelope_" + std::to_string(k);
      if (std::find(d.columns.begin(), d.columns.end(), name) == d.columns.end()) break;
      envelope.series.push_back({label + " R#" + std::to_string(k), t, column(d, name), false});
    }
    decay.series.push_back({label, t, s, false});

    double alpha = 0.0;
    if (std::ifstream mf(dir / "manifest.json"); mf) {
      const auto m = nlohmann::json::parse(mf, nullptr, false);
      if (!m.is_discarded() && m.contains("config") && m["config"].contains("checks") &&
          m["config"]["checks"].contains("growth") && m["config"]["checks"]["growth"].contains("alpha"))
        alpha = m["config"]["checks"]["growth"]["alpha"].get<double>();
    }
    const double target = (1.0 - alpha) / (2.0 - alpha);
    const double t_last = t.empty() ? 0.0 : t.back();
    std::vector<double> tx, sy;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] >= t_last / 10.0 && t[i] > 0) tx.push_back(t[i]), sy.push_back(s[i]);
    if (tx.size() >= 2 && sy.front() > 0) {
      Series ref{label + " ref t^-" + num(target), {}, {}, true};
      for (double x : tx) ref.x.push_back(x), ref.y.push_back(sy.front() * std::pow(x / tx.front(), -target));
      decay.series.push_back(ref);
      decay.notes.push_back(label + ": fitted exponent " + num(-fit_slope(tx, sy, true)) + ", target (1-a)/(2-a) = " +
                            num(target));
    }
    if (fs::exists(dir / "verify" / "modulus_scan.csv"))
      write_heat_map(out / (label + "_modulus_margin.svg"), read_csv(dir / "verify" / "modulus_scan.csv"));
  }
  if (!runs.empty()) {
    write_line_plot(out / "slope.svg", slope);
    write_line_plot(out / "curvature.svg", curvature);
    if (!envelope.series.empty()) write_line_plot(out / "envelope.svg", envelope);
    write_line_plot(out / "slope_decay.svg", decay);
  }
  if (any_ladder) write_line_plot(out / "ladder.svg", ladder);
  std::cout << "plots written to " << out << "\n";
  return 0;
}
