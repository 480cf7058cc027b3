#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "chunkscope/svg_report.hpp"

using namespace chunkscope;

namespace {

std::string slurp(const std::string &path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int count_occurrences(const std::string &haystack, const std::string &needle) {
  int n = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

} // namespace

TEST_CASE("line chart: a CDF of n points becomes a polyline with n vertices") {
  SvgSeries series;
  series.label = "cdf";
  for (int i = 0; i < 17; ++i) {
    series.points.emplace_back(static_cast<double>(i), (i + 1) / 17.0);
  }
  const std::string svg = render_line_chart("t", "x", "y", {series});
  const auto start = svg.find("points=\"");
  REQUIRE(start != std::string::npos);
  const auto end = svg.find('"', start + 8);
  const std::string points = svg.substr(start + 8, end - start - 8);
  // 17 vertices = 16 separating spaces.
  CHECK(count_occurrences(points, " ") == 16);
}

TEST_CASE("line chart with no points renders axes only") {
  const std::string svg = render_line_chart("empty", "x", "y", {});
  CHECK(svg.find("<polyline") == std::string::npos);
  CHECK(svg.find("<line") != std::string::npos); // the axes
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("rendering is deterministic") {
  SvgSeries series{"s", {{0.0, 0.1}, {1.0, 0.9}}};
  CHECK(render_line_chart("t", "x", "y", {series}) ==
        render_line_chart("t", "x", "y", {series}));
}

TEST_CASE("render_reports: skips missing inputs, errors when all missing") {
  namespace fs = std::filesystem;
  const std::string dir = fs::temp_directory_path() / "chunkscope_report_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  auto all_missing = render_reports(dir);
  CHECK(std::holds_alternative<ReportError>(all_missing));

  // A single header-only CSV yields an axes-only SVG and a success.
  {
    std::ofstream out(dir + "/rebuf_loss.csv");
    out << "chunk_id,chunks,rebuf,loss,rebuf_and_loss,session_rebuf_and_loss,p_rebuf,"
           "p_rebuf_given_loss,p_session_rebuf_given_loss,mean_retx_rate\n";
  }
  auto some = render_reports(dir);
  REQUIRE(std::holds_alternative<ReportCounters>(some));
  CHECK(std::get<ReportCounters>(some).figures_written == 2); // rebuf_loss + retx_by_chunk
  CHECK(std::get<ReportCounters>(some).inputs_missing > 0);
  const std::string svg = slurp(dir + "/rebuf_loss.svg");
  CHECK(svg.find("<polyline") == std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  // Rerun: byte-identical output.
  auto again = render_reports(dir);
  REQUIRE(std::holds_alternative<ReportCounters>(again));
  CHECK(slurp(dir + "/rebuf_loss.svg") == svg);

  fs::remove_all(dir);
}
