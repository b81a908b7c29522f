#pragma once

#include "gtgda/problem.hpp"
#include "gtgda/solvers.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace gtgda::harness {

inline constexpr const char* kCsvHeader =
    "iteration,gap_total,gap_x,gap_y,agree_x,agree_y,track_q,track_w,lemma1_y_metric";

/// Shortest round-trip decimal form, independent of the C++ locale.
std::string format_number(double v);

/// RFC-4180 CSV with CRLF line endings and the fixed header above.
std::string trace_csv(const Trace<double>& trace);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "iteration";
  std::string y_label = "optimality gap";
  bool log_x = false;
  bool log_y = true;
};

/// Standalone SVG line plot (no scripts, fonts or external references).
/// Non-positive values are dropped from log axes.
std::string render_svg(const std::vector<Series>& series, const PlotOptions& opts);

Series gap_series(const std::string& label, const Trace<double>& trace);

nlohmann::ordered_json matrix_json(const Matrixd& m);  // row-major nested arrays
nlohmann::ordered_json vector_json(const Vectord& v);
nlohmann::ordered_json problem_json(const SaddleProblem<double>& p);

/// Writes the file, creating parent directories; errors name the path.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace gtgda::harness
