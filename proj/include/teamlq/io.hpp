#pragma once

#include <string>
#include <vector>

#include "teamlq/pbp.hpp"
#include "teamlq/team.hpp"

namespace teamlq {

/// Decimal-text instance files (17 significant digits, row-major matrices).
/// Save/load round-trips every matrix exactly; derived S and H blocks are
/// rebuilt from W and R on load. Parse failures throw ParseError with the
/// offending line number.
void save_instance(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_instance(const std::string& path);

/// Tabulated policies as decimal text: per player, bin edges then cell values.
void save_policy(const TabulatedPolicy& policy, const std::string& path);
TabulatedPolicy load_policy(const std::string& path);

/// Exact-round-trip float formatting used by every text emitter.
std::string format_double(double v);

/// Row-oriented CSV with fixed formatting, for byte-reproducible outputs.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  void row(const std::vector<std::string>& cells);
  static std::string num(double v) { return format_double(v); }
  static std::string num(std::int64_t v) { return std::to_string(v); }

 private:
  struct Impl;
  Impl* impl_;
};

/// Minimal static line chart; x optionally on a log10 axis.
struct ChartSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};
void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<ChartSeries>& series, bool log_x);

}  // namespace teamlq
