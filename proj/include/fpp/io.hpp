#pragma once

#include "fpp/diagnostics.hpp"
#include "fpp/shape.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace fpp {

/// Shortest decimal that round-trips to the same double; "inf", "-inf", "nan".
std::string format_double(double x);

// ---- CSV ---------------------------------------------------------------------------
// Every table has a header row, comma separators and '\n' line ends.

/// direction_x, direction_y[, direction_z], T, lambda_mean, lambda_stderr, n_seeds
std::string shape_estimate_csv(const ShapeEstimate& e);
/// T, seed, sup_w_hess_norm_over_T
std::string hessian_csv(const HessianReport& r);
/// n, max, ratio
std::string animal_csv(const AnimalReport& r);
/// x, y[, z]: closed polyline, first vertex repeated at the end.
std::string limit_shape_csv(const LimitShape& s);
/// x, y[, z]: one vertex per row.
std::string path_csv(const std::vector<Vec>& path);
/// x, y[, z]
std::string points_csv(const PointConfiguration& c);

// ---- SVG ---------------------------------------------------------------------------

struct SvgLayer {
  std::vector<Vec> points;  // 2D
  bool closed = false;
  bool markers = false;     // draw points as dots instead of a polyline
  std::string stroke = "black";
};

/// Fixed 800x800 viewBox with the origin at the centre and both axes drawn;
/// the scale fits every layer. No timestamp or other run-dependent content.
std::string render_svg(const std::vector<SvgLayer>& layers);

// ---- files -------------------------------------------------------------------------

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Stable text form of a JSON document: two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace fpp
