#pragma once

#include <string>
#include <variant>
#include <vector>

namespace chunkscope {

// Deterministic SVG figure emission from the analysis CSVs. One SVG per
// analysis; a CSV with no data rows yields an axes-only figure; a missing CSV
// is skipped with a warning.

struct ReportError {
  std::string message;
};

struct ReportCounters {
  int figures_written = 0;
  int inputs_missing = 0;
};

std::variant<ReportCounters, ReportError> render_reports(const std::string &reports_dir);

// Building blocks exposed for tests.
struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Polyline chart with one vertex per point; returns the SVG document text.
std::string render_line_chart(const std::string &title, const std::string &x_label,
                              const std::string &y_label, const std::vector<SvgSeries> &series);

} // namespace chunkscope
