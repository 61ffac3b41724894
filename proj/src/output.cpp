#include "gibbslab/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "gibbslab/error.hpp"
#include "gibbslab/rng.hpp"

namespace gibbs {

namespace {
constexpr double kHuge = std::numeric_limits<double>::infinity();
}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) { return fnv1a(bytes); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += "\r\n";
  };
  line(header);
  for (const auto& r : rows) {
    require(r.size() == header.size(), ErrorCode::InvalidArgument, "CSV row width mismatch");
    line(r);
  }
  return out;
}

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 72, kRight = 24, kTop = 40, kBottom = 56;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

struct Axis {
  double lo, hi;
  void fit(double a, double b) {
    lo = a;
    hi = b;
    if (!(hi > lo)) {
      const double pad = std::max(1e-12, std::fabs(lo) * 0.05 + 0.5);
      lo -= pad;
      hi += pad;
    }
  }
};

std::string header(const std::string& title) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + fixed(kWidth) +
       "\" height=\"" + fixed(kHeight) + "\" viewBox=\"0 0 " + fixed(kWidth) + " " + fixed(kHeight) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + fixed(kWidth) + "\" height=\"" + fixed(kHeight) +
       "\" fill=\"white\"/>\n";
  s += "<text x=\"" + fixed(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
       escape(title) + "</text>\n";
  return s;
}

std::string axes(const PlotFrame& f, const Axis& ax, const Axis& ay, bool log_y) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::string s = "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  s += "<rect x=\"" + fixed(x0) + "\" y=\"" + fixed(y1) + "\" width=\"" + fixed(x1 - x0) +
       "\" height=\"" + fixed(y0 - y1) + "\"/>\n</g>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = i / 4.0;
    const double xv = ax.lo + t * (ax.hi - ax.lo), px = x0 + t * (x1 - x0);
    s += "<line x1=\"" + fixed(px) + "\" y1=\"" + fixed(y0) + "\" x2=\"" + fixed(px) + "\" y2=\"" +
         fixed(y0 + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fixed(px) + "\" y=\"" + fixed(y0 + 18) + "\" text-anchor=\"middle\">" +
         tick_label(xv) + "</text>\n";
    const double yv = ay.lo + t * (ay.hi - ay.lo), py = y0 - t * (y0 - y1);
    s += "<line x1=\"" + fixed(x0 - 5) + "\" y1=\"" + fixed(py) + "\" x2=\"" + fixed(x0) + "\" y2=\"" +
         fixed(py) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fixed(x0 - 8) + "\" y=\"" + fixed(py + 4) + "\" text-anchor=\"end\">" +
         tick_label(log_y ? std::pow(10.0, yv) : yv) + "</text>\n";
  }
  s += "<text x=\"" + fixed((x0 + x1) / 2) + "\" y=\"" + fixed(kHeight - 14) +
       "\" text-anchor=\"middle\" font-size=\"13\">" + escape(f.x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + fixed((y0 + y1) / 2) + "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " +
       fixed((y0 + y1) / 2) + ")\">" + escape(f.y_label) + "</text>\n</g>\n";
  return s;
}

double map_x(const Axis& a, double v) { return kLeft + (v - a.lo) / (a.hi - a.lo) * (kWidth - kLeft - kRight); }
double map_y(const Axis& a, double v) {
  return kHeight - kBottom - (v - a.lo) / (a.hi - a.lo) * (kHeight - kBottom - kTop);
}

}  // namespace

std::string svg_line_plot(const PlotFrame& frame, const std::vector<PlotSeries>& series) {
  double xlo = kHuge, xhi = -kHuge, ylo = kHuge, yhi = -kHuge;
  auto ty = [&](double y) { return frame.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!frame.log_y || y > 0.0);
  };
  bool omitted = false;
  for (const auto& s : series) {
    require(s.x.size() == s.y.size(), ErrorCode::InvalidArgument, "series length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) {
        omitted = true;
        continue;
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, ty(s.y[i]));
      yhi = std::max(yhi, ty(s.y[i]));
    }
  }
  if (!(xlo <= xhi)) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  Axis ax, ay;
  ax.fit(std::isnan(frame.x_min) ? xlo : frame.x_min, std::isnan(frame.x_max) ? xhi : frame.x_max);
  ay.fit(std::isnan(frame.y_min) ? ylo : ty(frame.y_min), std::isnan(frame.y_max) ? yhi : ty(frame.y_max));
  if (!frame.log_y && std::isnan(frame.y_min)) {
    const double pad = 0.05 * (ay.hi - ay.lo);
    ay.lo -= pad;
    ay.hi += pad;
  }
  std::string s = header(frame.title) + axes(frame, ax, ay, frame.log_y);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const char* color = kColors[k % 6];
    std::string pts;
    for (std::size_t i = 0; i < sr.x.size(); ++i) {
      if (!usable(sr.x[i], sr.y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += fixed(map_x(ax, sr.x[i])) + "," + fixed(map_y(ay, ty(sr.y[i])));
    }
    s += std::string("<polyline fill=\"none\" stroke=\"") + color + "\" stroke-width=\"1.5\"" +
         (sr.dashed ? " stroke-dasharray=\"6 4\"" : "") + " points=\"" + pts + "\"/>\n";
    if (sr.markers)
      for (std::size_t i = 0; i < sr.x.size(); ++i)
        if (usable(sr.x[i], sr.y[i]))
          s += std::string("<circle cx=\"") + fixed(map_x(ax, sr.x[i])) + "\" cy=\"" +
               fixed(map_y(ay, ty(sr.y[i]))) + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    const double ly = kTop + 16 + 16 * double(k);
    s += std::string("<line x1=\"") + fixed(kWidth - kRight - 150) + "\" y1=\"" + fixed(ly - 4) + "\" x2=\"" +
         fixed(kWidth - kRight - 126) + "\" y2=\"" + fixed(ly - 4) + "\" stroke=\"" + color + "\"" +
         (sr.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
    s += "<text x=\"" + fixed(kWidth - kRight - 120) + "\" y=\"" + fixed(ly) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(sr.label) + "</text>\n";
  }
  if (omitted)
    s += "<text x=\"" + fixed(kLeft + 6) + "\" y=\"" + fixed(kTop + 14) +
         "\" font-family=\"sans-serif\" font-size=\"10\">nonpositive values omitted</text>\n";
  return s + "</svg>\n";
}

std::string svg_scatter(const PlotFrame& frame, const std::vector<double>& x,
                        const std::vector<double>& y, bool circle) {
  require(x.size() == y.size(), ErrorCode::InvalidArgument, "scatter length mismatch");
  Axis ax, ay;
  if (circle) {
    ax.fit(-1.2, 1.2);
    ay.fit(-1.2, 1.2);
  } else {
    double xlo = kHuge, xhi = -kHuge, ylo = kHuge, yhi = -kHuge;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xlo = std::min(xlo, x[i]);
      xhi = std::max(xhi, x[i]);
      ylo = std::min(ylo, y[i]);
      yhi = std::max(yhi, y[i]);
    }
    if (x.empty()) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    ax.fit(std::isnan(frame.x_min) ? xlo : frame.x_min, std::isnan(frame.x_max) ? xhi : frame.x_max);
    ay.fit(std::isnan(frame.y_min) ? ylo : frame.y_min, std::isnan(frame.y_max) ? yhi : frame.y_max);
  }
  std::string s = header(frame.title) + axes(frame, ax, ay, false);
  if (circle) {
    std::string pts;
    for (int i = 0; i <= 180; ++i) {
      const double t = 2.0 * std::numbers::pi * i / 180.0;
      if (i) pts += ' ';
      pts += fixed(map_x(ax, std::cos(t))) + "," + fixed(map_y(ay, std::sin(t)));
    }
    s += "<polyline fill=\"none\" stroke=\"#999999\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
  }
  for (std::size_t i = 0; i < x.size(); ++i)
    s += "<circle cx=\"" + fixed(map_x(ax, x[i])) + "\" cy=\"" + fixed(map_y(ay, y[i])) +
         "\" r=\"3.5\" fill=\"" + kColors[0] + "\"/>\n";
  return s + "</svg>\n";
}

namespace {

std::vector<double> numbers(const Json& j, const char* key) {
  require(j.contains(key) && j[key].is_array(), ErrorCode::Format,
          std::string("result document has no array '") + key + "'");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (v.is_number()) out.push_back(v.get<double>());
    else if (v.is_string()) {
      const auto s = v.get<std::string>();
      out.push_back(s == "inf" ? kHuge : s == "-inf" ? -kHuge : std::nan(""));
    } else
      fail(ErrorCode::Format, std::string("non-numeric entry in '") + key + "'");
  }
  return out;
}

}  // namespace

std::string plot_emit(const Json& result, const std::string& kind) {
  require(result.is_object() && !result.empty(), ErrorCode::Format, "empty result document");
  require(result.contains("plots") && result["plots"].is_object() && result["plots"].contains(kind),
          ErrorCode::Format, "result document carries no '" + kind + "' data");
  const Json& d = result["plots"][kind];
  const std::string title = result.value("command", std::string("result"));
  if (kind == "density") {
    PlotFrame f{title + ": density", "x", "density"};
    std::vector<PlotSeries> s{{"computed", numbers(d, "x"), numbers(d, "density")}};
    if (d.contains("reference")) {
      PlotSeries ref{d.value("reference_label", std::string("reference")), numbers(d, "x"),
                     numbers(d, "reference")};
      ref.dashed = true;
      s.push_back(ref);
    }
    f.y_min = 0.0;
    return svg_line_plot(f, s);
  }
  if (kind == "gaps") {
    PlotFrame f{title + ": gap to the limit", "n", "gap"};
    f.log_y = true;
    PlotSeries s{"gap", numbers(d, "n"), numbers(d, "gap")};
    s.markers = true;
    return svg_line_plot(f, {s});
  }
  if (kind == "points") {
    const std::string space = d.value("space", std::string());
    auto a = numbers(d, "a"), b = numbers(d, "b");
    PlotFrame f{title + ": configuration", d.value("a_label", std::string("x")),
                d.value("b_label", std::string("y"))};
    if (space == "circle") {
      std::vector<double> x, y;
      for (double t : a) {
        x.push_back(std::cos(t));
        y.push_back(std::sin(t));
      }
      f.x_label = "cos theta";
      f.y_label = "sin theta";
      return svg_scatter(f, x, y, true);
    }
    return svg_scatter(f, a, b, false);
  }
  fail(ErrorCode::Format, "unknown plot kind '" + kind + "' (density, gaps, points)");
}

RunWriter::RunWriter(std::string directory) : dir_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory '" + dir_ + "': " + ec.message());
}

void RunWriter::write(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::path(dir_) / name;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  f << content;
  if (!f) fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
  for (auto& e : files_)
    if (e.first == name) {
      e.second = hex64(fnv1a64(content));
      return;
    }
  files_.emplace_back(name, hex64(fnv1a64(content)));
}

Json RunWriter::manifest(const std::string& command, const std::string& config_hash,
                         const std::string& started, const std::string& finished) const {
  Json m;
  m["tool"] = "gibbslab";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["config_hash"] = config_hash;
  m["checksum"] = "fnv1a64";
  m["started"] = started;
  m["finished"] = finished;
  Json files = Json::array();
  for (const auto& [name, sum] : files_) files.push_back({{"file", name}, {"checksum", sum}});
  m["files"] = files;
  return m;
}

void RunWriter::write_manifest(const Json& manifest) {
  const auto path = std::filesystem::path(dir_) / "manifest.json";
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  f << manifest.dump(2) << "\n";
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace gibbs
