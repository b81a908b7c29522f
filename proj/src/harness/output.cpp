#include "gtgda/harness/output.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

namespace gtgda::harness {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw NumericFailure("number formatting failed", 0);
  return std::string(buf.data(), end);
}

std::string trace_csv(const Trace<double>& trace) {
  std::string out = kCsvHeader;
  out += "\r\n";
  for (const auto& r : trace.rows) {
    out += std::to_string(r.iteration);
    for (double v : {r.gap_total, r.gap_x, r.gap_y, r.agree_x, r.agree_y, r.track_q, r.track_w,
                     r.lemma1_y_metric}) {
      out += ',';
      out += format_number(v);
    }
    out += "\r\n";
  }
  return out;
}

Series gap_series(const std::string& label, const Trace<double>& trace) {
  Series s;
  s.label = label;
  for (const auto& r : trace.rows) {
    s.x.push_back(double(r.iteration));
    s.y.push_back(r.gap_total);
  }
  return s;
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, digits);
  (void)ec;
  return std::string(buf.data(), end);
}

// 1-2-5 spacing over [lo, hi], about `target` ticks.
std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v);
  return t;
}

std::string tick_label(double v, bool log) {
  if (log) return "1e" + std::to_string(static_cast<int>(std::lround(v)));
  if (std::abs(v) >= 1e5 || (v != 0 && std::abs(v) < 1e-3)) return format_number(v);
  return std::abs(v - std::round(v)) < 1e-9 ? std::to_string(std::llround(v)) : format_number(v);
}

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string render_svg(const std::vector<Series>& series, const PlotOptions& opts) {
  const double W = 720, H = 440, left = 80, right = 20, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;

  auto tx = [&](double v) { return opts.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return opts.log_y ? std::log10(v) : v; };
  auto usable = [](double v, bool log) { return std::isfinite(v) && (!log || v > 0); };

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.x[i], opts.log_x) || !usable(s.y[i], opts.log_y)) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (opts.log_y) {
    y0 = std::floor(y0);
    y1 = std::ceil(y1);
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;

  auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + (1 - (v - y0) / (y1 - y0)) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(W, 0) + "\" height=\"" + fixed(H, 0) +
       "\" viewBox=\"0 0 " + fixed(W, 0) + " " + fixed(H, 0) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opts.title.empty())
    o += "<text x=\"" + fixed(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         escape_xml(opts.title) + "</text>\n";

  // Grid and ticks.
  std::vector<double> yt;
  if (opts.log_y) {
    const int span = int(std::lround(y1 - y0));
    const int stride = std::max(1, span / 8);
    for (int e = int(std::lround(y0)); e <= int(std::lround(y1)); e += stride) yt.push_back(e);
  } else {
    yt = nice_ticks(y0, y1);
  }
  for (double v : yt) {
    const double yy = py(v);
    o += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(yy) + "\" x2=\"" + fixed(left + pw) + "\" y2=\"" +
         fixed(yy) + "\" stroke=\"#e0e0e0\"/>\n";
    o += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(yy + 4) + "\" text-anchor=\"end\">" +
         tick_label(v, opts.log_y) + "</text>\n";
  }
  std::vector<double> xt = opts.log_x ? nice_ticks(std::floor(x0), std::ceil(x1)) : nice_ticks(x0, x1);
  for (double v : xt) {
    if (v < x0 || v > x1) continue;
    const double xx = px(v);
    o += "<line x1=\"" + fixed(xx) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(xx) + "\" y2=\"" +
         fixed(top + ph) + "\" stroke=\"#e0e0e0\"/>\n";
    o += "<text x=\"" + fixed(xx) + "\" y=\"" + fixed(top + ph + 18) + "\" text-anchor=\"middle\">" +
         tick_label(v, opts.log_x) + "</text>\n";
  }
  o += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(pw) + "\" height=\"" +
       fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  o += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(H - 18) + "\" text-anchor=\"middle\">" +
       escape_xml(opts.x_label) + (opts.log_x ? " (log)" : "") + "</text>\n";
  o += "<text transform=\"translate(18," + fixed(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape_xml(opts.y_label) + (opts.log_y ? " (log)" : "") + "</text>\n";

  // Curves; a dropped point breaks the line.
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string color = kPalette[k % kPalette.size()];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        o += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.x[i], opts.log_x) || !usable(s.y[i], opts.log_y)) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += fixed(px(tx(s.x[i]))) + "," + fixed(py(ty(s.y[i])));
    }
    flush();
    const double ly = top + 16 + 18 * double(k);
    o += "<line x1=\"" + fixed(left + pw - 150) + "\" y1=\"" + fixed(ly - 4) + "\" x2=\"" +
         fixed(left + pw - 125) + "\" y2=\"" + fixed(ly - 4) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + fixed(left + pw - 120) + "\" y=\"" + fixed(ly) + "\">" + escape_xml(s.label) +
         "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

nlohmann::ordered_json matrix_json(const Matrixd& m) {
  auto a = nlohmann::ordered_json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(std::move(row));
  }
  return a;
}

nlohmann::ordered_json vector_json(const Vectord& v) {
  auto a = nlohmann::ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

nlohmann::ordered_json problem_json(const SaddleProblem<double>& p) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(p.kind);
  j["px"] = p.px;
  j["py"] = p.py;
  j["n"] = p.n();
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& c : p.locals) {
    nlohmann::ordered_json node;
    node["Q"] = matrix_json(c.Q);
    node["q"] = vector_json(c.q);
    node["q0"] = c.q0;
    node["smooth_scale"] = c.smooth_scale;
    node["smooth_sharpness"] = c.smooth_sharpness;
    node["R"] = matrix_json(c.R);
    node["r"] = vector_json(c.r);
    node["r0"] = c.r0;
    node["P"] = matrix_json(c.P);
    j["nodes"].push_back(std::move(node));
  }
  j["x_star"] = vector_json(p.x_star);
  j["y_star"] = vector_json(p.y_star);
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace gtgda::harness
