#include "balloc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "balloc/config_file.hpp"
#include "balloc/error.hpp"

namespace balloc {

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 80, kRight = 170, kTop = 30, kBottom = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Axis {
  bool log = false;
  double lo = 0, hi = 1;

  double map(double v) const { return log ? std::log10(v) : v; }
  double frac(double v) const { return (map(v) - lo) / (hi - lo); }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double e = std::ceil(lo - 1e-9); e <= hi + 1e-9; e += 1.0) out.push_back(std::pow(10.0, e));
      if (out.size() < 2) {
        for (double e = std::floor(lo); e <= hi + 1e-9; e += 1.0)
          for (double m : {2.0, 5.0}) {
            double v = m * std::pow(10.0, e);
            if (map(v) >= lo - 1e-9 && map(v) <= hi + 1e-9) out.push_back(v);
          }
        std::sort(out.begin(), out.end());
      }
      return out;
    }
    double span = hi - lo;
    double raw = span / 5.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) {
      out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    }
    return out;
  }
};

Axis make_axis(bool log, double mn, double mx) {
  Axis a;
  a.log = log;
  a.lo = a.map(mn);
  a.hi = a.map(mx);
  if (a.hi - a.lo < 1e-12) {
    double pad = log ? 0.5 : std::max(std::abs(a.lo) * 0.1, 0.5);
    a.lo -= pad;
    a.hi += pad;
  } else if (!log) {
    double pad = 0.05 * (a.hi - a.lo);
    a.lo = mn >= 0 && mn - pad < 0 ? 0.0 : a.lo - pad;
    a.hi += pad;
  }
  return a;
}

}  // namespace

PlotScale parse_scale(const std::string& s) {
  if (s == "linear") return PlotScale::kLinear;
  if (s == "log-x") return PlotScale::kLogX;
  if (s == "log-y") return PlotScale::kLogY;
  if (s == "log-log") return PlotScale::kLogLog;
  throw ValidationError("unknown plot scale '" + s + "' (linear, log-x, log-y, log-log)");
}

PlotSpec PlotSpec::parse(const std::string& text) {
  std::string body = text;
  if (body.find('\n') == std::string::npos) std::replace(body.begin(), body.end(), ';', '\n');
  PlotSpec spec;
  for (const auto& e : parse_key_values(body)) {
    if (e.key == "x") spec.x = e.value;
    else if (e.key == "y") spec.y = e.value;
    else if (e.key == "group") spec.group = e.value;
    else if (e.key == "scale") spec.scale = parse_scale(e.value);
    else if (e.key == "out") spec.out = e.value;
    else throw ValidationError("plot spec: unknown key '" + e.key + "'");
  }
  if (spec.x.empty() || spec.y.empty()) throw ValidationError("plot spec: x and y are required");
  return spec;
}

PlotSpec PlotSpec::load(const std::string& path_or_inline) {
  if (path_or_inline.find('=') != std::string::npos && !std::filesystem::exists(path_or_inline)) {
    return parse(path_or_inline);
  }
  return parse(read_text_file(path_or_inline));
}

void PlotSpec::validate(const Table& table) const {
  for (const auto* c : {&x, &y}) {
    if (!table.has_column(*c)) throw ValidationError("plot spec: column '" + *c + "' not in table");
  }
  if (!group.empty() && !table.has_column(group)) throw ValidationError("plot spec: column '" + group + "' not in table");
}

std::string render_svg(const Table& table, const PlotSpec& spec) {
  spec.validate(table);
  const bool logx = spec.scale == PlotScale::kLogX || spec.scale == PlotScale::kLogLog;
  const bool logy = spec.scale == PlotScale::kLogY || spec.scale == PlotScale::kLogLog;
  const std::size_t cx = table.column(spec.x), cy = table.column(spec.y);

  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::pair<double, int>>> series;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    double xv = table.number(r, cx), yv = table.number(r, cy);
    if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
    if ((logx && xv <= 0) || (logy && yv <= 0)) continue;
    std::string g = spec.group.empty() ? spec.y : table.text(r, table.column(spec.group));
    if (!series.count(g)) order.push_back(g);
    auto& acc = series[g][xv];
    acc.first += yv;
    acc.second += 1;
  }

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (auto& [g, pts] : series)
    for (auto& [xv, acc] : pts) {
      double yv = acc.first / acc.second;
      xmin = std::min(xmin, xv);
      xmax = std::max(xmax, xv);
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
  if (series.empty()) xmin = ymin = 1, xmax = ymax = 10;
  Axis ax = make_axis(logx, xmin, xmax), ay = make_axis(logy, ymin, ymax);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.frac(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.frac(v)) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    std::string x = num(px(t));
    s << "<line x1=\"" << x << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << x << "\" y2=\"" << num(kTop + ph + 5)
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << x << "\" y1=\"" << num(kTop) << "\" x2=\"" << x << "\" y2=\"" << num(kTop + ph)
      << "\" stroke=\"#dddddd\"/>\n";
    s << "<text x=\"" << x << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">" << label(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    std::string y = num(py(t));
    s << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << y << "\" x2=\"" << num(kLeft) << "\" y2=\"" << y
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << num(kLeft) << "\" y1=\"" << y << "\" x2=\"" << num(kLeft + pw) << "\" y2=\"" << y
      << "\" stroke=\"#dddddd\"/>\n";
    s << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">" << label(t)
      << "</text>\n";
  }
  s << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 15) << "\" text-anchor=\"middle\">"
    << xml_escape(spec.x) << (logx ? " (log)" : "") << "</text>\n";
  s << "<text x=\"20\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
    << num(kTop + ph / 2) << ")\">" << xml_escape(spec.y) << (logy ? " (log)" : "") << "</text>\n";

  for (std::size_t i = 0; i < order.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (auto& [xv, acc] : series[order[i]]) {
      s << (first ? "" : " ") << num(px(xv)) << ',' << num(py(acc.first / acc.second));
      first = false;
    }
    s << "\"/>\n";
    for (auto& [xv, acc] : series[order[i]]) {
      s << "<circle cx=\"" << num(px(xv)) << "\" cy=\"" << num(py(acc.first / acc.second)) << "\" r=\"2.5\" fill=\""
        << color << "\"/>\n";
    }
    double ly = kTop + 10 + 18.0 * static_cast<double>(i);
    s << "<line x1=\"" << num(kLeft + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kLeft + pw + 32)
      << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << num(kLeft + pw + 38) << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(order[i])
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void render_svg(const Table& table, const PlotSpec& spec, const std::string& path) {
  std::string svg = render_svg(table, spec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << svg;
  if (!out) throw ValidationError("write failed: " + path);
}

}  // namespace balloc
