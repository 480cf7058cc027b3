#include "chunkscope/svg_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace chunkscope {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kMarginLeft = 70;
constexpr double kMarginRight = 20;
constexpr double kMarginTop = 40;
constexpr double kMarginBottom = 50;

const char *kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  if (std::abs(v) >= 1000) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.3g", v);
  }
  return buf;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }
};

std::optional<Csv> read_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in.is_open()) return std::nullopt;
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos
                                                                     : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      csv.header = std::move(fields);
      first = false;
    } else {
      csv.rows.push_back(std::move(fields));
    }
  }
  return csv;
}

double to_double(const std::string &s) {
  try {
    return s.empty() ? 0.0 : std::stod(s);
  } catch (...) {
    return 0.0;
  }
}

} // namespace

std::string render_line_chart(const std::string &title, const std::string &x_label,
                              const std::string &y_label, const std::vector<SvgSeries> &series) {
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool any = false;
  for (const auto &s : series) {
    for (const auto &[x, y] : s.points) {
      if (!any) {
        x_min = x_max = x;
        y_min = y_max = y;
        any = true;
      } else {
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
      }
    }
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  y_min = std::min(y_min, 0.0);

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) { return kMarginLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto sy = [&](double y) { return kHeight - kMarginBottom - (y - y_min) / (y_max - y_min) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

  // Axes.
  svg << "<line x1=\"" << num(kMarginLeft) << "\" y1=\"" << num(kHeight - kMarginBottom)
      << "\" x2=\"" << num(kWidth - kMarginRight) << "\" y2=\"" << num(kHeight - kMarginBottom)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << num(kMarginLeft) << "\" y1=\"" << num(kMarginTop) << "\" x2=\""
      << num(kMarginLeft) << "\" y2=\"" << num(kHeight - kMarginBottom)
      << "\" stroke=\"black\"/>\n";

  for (int t = 0; t <= 4; ++t) {
    const double fx = x_min + (x_max - x_min) * t / 4.0;
    const double fy = y_min + (y_max - y_min) * t / 4.0;
    svg << "<text x=\"" << num(sx(fx)) << "\" y=\"" << num(kHeight - kMarginBottom + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << short_num(fx) << "</text>\n";
    svg << "<text x=\"" << num(kMarginLeft - 8) << "\" y=\"" << num(sy(fy) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << short_num(fy)
        << "</text>\n";
    svg << "<line x1=\"" << num(kMarginLeft) << "\" y1=\"" << num(sy(fy)) << "\" x2=\""
        << num(kWidth - kMarginRight) << "\" y2=\"" << num(sy(fy))
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
  }
  svg << "<text x=\"" << num(kMarginLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << num(kMarginTop + plot_h / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << num(kMarginTop + plot_h / 2) << ")\">" << y_label
      << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto &s = series[i];
    const char *color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (!s.points.empty()) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t p = 0; p < s.points.size(); ++p) {
        if (p > 0) svg << " ";
        svg << num(sx(s.points[p].first)) << "," << num(sy(s.points[p].second));
      }
      svg << "\"/>\n";
    }
    const double ly = kMarginTop + 14 * static_cast<double>(i);
    svg << "<line x1=\"" << num(kWidth - kMarginRight - 120) << "\" y1=\"" << num(ly) << "\" x2=\""
        << num(kWidth - kMarginRight - 100) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << num(kWidth - kMarginRight - 94) << "\" y=\"" << num(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

namespace {

bool write_file(const std::string &path, const std::string &content) {
  std::ofstream out(path);
  if (!out.is_open()) return false;
  out << content;
  return true;
}

// series column, x column, y column -> one polyline per distinct series value.
std::vector<SvgSeries> series_from_csv(const Csv &csv, const std::string &series_col,
                                       const std::string &x_col, const std::string &y_col) {
  std::vector<SvgSeries> out;
  auto sc = csv.column(series_col);
  auto xc = csv.column(x_col);
  auto yc = csv.column(y_col);
  if (!sc || !xc || !yc) return out;
  std::map<std::string, std::size_t> index;
  for (const auto &row : csv.rows) {
    if (row.size() <= std::max({*sc, *xc, *yc})) continue;
    auto [it, created] = index.try_emplace(row[*sc], out.size());
    if (created) out.push_back(SvgSeries{row[*sc], {}});
    out[it->second].points.emplace_back(to_double(row[*xc]), to_double(row[*yc]));
  }
  return out;
}

} // namespace

std::variant<ReportCounters, ReportError> render_reports(const std::string &reports_dir) {
  ReportCounters counters;

  struct Figure {
    const char *csv;
    const char *svg;
    std::function<std::vector<SvgSeries>(const Csv &)> extract;
    const char *title;
    const char *x_label;
    const char *y_label;
  };

  const std::vector<Figure> figures = {
      {"cdn_breakdown.csv", "cdn_breakdown.svg",
       [](const Csv &c) { return series_from_csv(c, "series", "value_ms", "cdf"); },
       "CDN latency breakdown (CDF)", "latency (ms)", "CDF"},
      {"popularity.csv", "popularity.svg",
       [](const Csv &c) {
         std::vector<SvgSeries> out;
         auto bucket = c.column("bucket");
         auto miss = c.column("miss_rate");
         auto lat = c.column("mean_hit_server_latency_ms");
         if (!bucket || !miss || !lat) return out;
         SvgSeries miss_series{"miss_rate", {}};
         SvgSeries lat_series{"hit_latency_ms/100", {}};
         for (const auto &row : c.rows) {
           miss_series.points.emplace_back(to_double(row[*bucket]), to_double(row[*miss]));
           if (!row[*lat].empty()) {
             lat_series.points.emplace_back(to_double(row[*bucket]),
                                            to_double(row[*lat]) / 100.0);
           }
         }
         out.push_back(std::move(miss_series));
         out.push_back(std::move(lat_series));
         return out;
       },
       "Cache performance vs video rank", "log2 rank bucket", "miss rate / scaled latency"},
      {"rebuf_loss.csv", "rebuf_loss.svg",
       [](const Csv &c) {
         std::vector<SvgSeries> out;
         auto id = c.column("chunk_id");
         auto p = c.column("p_rebuf");
         auto pc = c.column("p_rebuf_given_loss");
         if (!id || !p || !pc) return out;
         SvgSeries s1{"p_rebuf", {}}, s2{"p_rebuf_given_loss", {}};
         for (const auto &row : c.rows) {
           s1.points.emplace_back(to_double(row[*id]), to_double(row[*p]));
           s2.points.emplace_back(to_double(row[*id]), to_double(row[*pc]));
         }
         out.push_back(std::move(s1));
         out.push_back(std::move(s2));
         return out;
       },
       "Rebuffering frequency by chunk position", "chunk id", "probability"},
      {"rebuf_loss.csv", "retx_by_chunk.svg",
       [](const Csv &c) {
         std::vector<SvgSeries> out;
         auto id = c.column("chunk_id");
         auto rate = c.column("mean_retx_rate");
         if (!id || !rate) return out;
         SvgSeries s{"mean_retx_rate", {}};
         for (const auto &row : c.rows) {
           s.points.emplace_back(to_double(row[*id]), to_double(row[*rate]));
         }
         out.push_back(std::move(s));
         return out;
       },
       "Average per-chunk retransmission rate", "chunk id", "retx rate"},
      {"shares_cdf.csv", "shares.svg",
       [](const Csv &c) { return series_from_csv(c, "split", "latency_share", "cdf"); },
       "Latency share by performance (CDF)", "latency share", "CDF"},
      {"first_chunk_cdf.csv", "first_chunk_cdf.svg",
       [](const Csv &c) { return series_from_csv(c, "arm", "d_fb_ms", "cdf"); },
       "First-byte delay: first vs other chunks", "d_fb (ms)", "CDF"},
      {"drop_by_rate.csv", "drop_by_rate.svg",
       [](const Csv &c) {
         std::vector<SvgSeries> out;
         auto ua = c.column("user_agent");
         auto lo = c.column("rate_lo");
         auto frac = c.column("drop_fraction");
         if (!ua || !lo || !frac) return out;
         SvgSeries s{"all", {}};
         for (const auto &row : c.rows) {
           if (row[*ua] != "all") continue;
           s.points.emplace_back(to_double(row[*lo]), to_double(row[*frac]));
         }
         out.push_back(std::move(s));
         return out;
       },
       "Dropped frames vs chunk download rate", "download rate (s/s)", "drop fraction"},
  };

  for (const auto &figure : figures) {
    auto csv = read_csv(reports_dir + "/" + figure.csv);
    if (!csv) {
      std::cerr << "warning: missing " << figure.csv << ", skipping " << figure.svg << "\n";
      ++counters.inputs_missing;
      continue;
    }
    const std::string svg =
        render_line_chart(figure.title, figure.x_label, figure.y_label, figure.extract(*csv));
    if (!write_file(reports_dir + "/" + figure.svg, svg)) {
      return ReportError{"cannot write " + std::string(figure.svg)};
    }
    ++counters.figures_written;
  }

  if (counters.figures_written == 0) {
    return ReportError{"no analysis CSV inputs found in " + reports_dir};
  }
  return counters;
}

} // namespace chunkscope
