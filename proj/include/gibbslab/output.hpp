#pragma once

// Result persistence: number formatting, RFC-4180 CSV, deterministic SVG
// plots, and the run manifest with FNV-1a checksums.

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace gibbs {

using Json = nlohmann::ordered_json;

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Round-trip decimal ("%.17g"), with inf, -inf and nan spelled out.
std::string format_number(double v);
/// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_field(const std::string& s);
std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
  bool markers = false;
};

struct PlotFrame {
  std::string title, x_label, y_label;
  bool log_y = false;
  /// Fixed ranges; NaN means fit to the data.
  double x_min = std::numeric_limits<double>::quiet_NaN();
  double x_max = std::numeric_limits<double>::quiet_NaN();
  double y_min = std::numeric_limits<double>::quiet_NaN();
  double y_max = std::numeric_limits<double>::quiet_NaN();
};

std::string svg_line_plot(const PlotFrame& frame, const std::vector<PlotSeries>& series);
/// Points on a square chart; `circle` draws the unit circle for S^1 data
/// given as (cos, sin).
std::string svg_scatter(const PlotFrame& frame, const std::vector<double>& x,
                        const std::vector<double>& y, bool circle = false);

/// Renders a result document written by a subcommand. Kinds: density,
/// points, gaps. Throws Format when the document does not carry that kind.
std::string plot_emit(const Json& result, const std::string& kind);

/// Writes files into an output directory and records their checksums.
class RunWriter {
 public:
  explicit RunWriter(std::string directory);
  /// Writes name under the directory; the manifest lists it.
  void write(const std::string& name, const std::string& content);
  const std::string& directory() const { return dir_; }
  /// config_hash: FNV-1a of the canonical config text.
  Json manifest(const std::string& command, const std::string& config_hash,
                const std::string& started, const std::string& finished) const;
  void write_manifest(const Json& manifest);

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

/// UTC timestamp, ISO 8601.
std::string utc_now();

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace gibbs
