#include "fpp/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fpp {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{}", x);
}

namespace {

const char* kAxis[] = {"x", "y", "z"};

std::string coord_header(int d, const char* prefix) {
  std::string h;
  for (int i = 0; i < d; ++i) {
    if (i) h += ',';
    h += prefix;
    h += kAxis[i];
  }
  return h;
}

void append_vec(std::string& out, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v(i));
  }
}

}  // namespace

std::string shape_estimate_csv(const ShapeEstimate& e) {
  std::string out = coord_header(e.grid.d, "direction_") + ",T,lambda_mean,lambda_stderr,n_seeds\n";
  for (int k = 0; k < e.grid.size(); ++k)
    for (std::size_t j = 0; j < e.t_ladder.size(); ++j) {
      const Stat s = e.cell(k, static_cast<int>(j));
      append_vec(out, e.grid.directions[static_cast<std::size_t>(k)]);
      out += fmt::format(",{},{},{},{}\n", format_double(e.t_ladder[j]), format_double(s.mean),
                         format_double(s.stderr_), s.n);
    }
  return out;
}

std::string hessian_csv(const HessianReport& r) {
  std::string out = "T,seed,sup_w_hess_norm_over_T\n";
  for (const auto& row : r.rows)
    out += fmt::format("{},{},{}\n", format_double(row.t), row.seed, format_double(row.value));
  return out;
}

std::string animal_csv(const AnimalReport& r) {
  std::string out = "n,max,ratio\n";
  for (std::size_t i = 0; i < r.n.size(); ++i)
    out += fmt::format("{},{},{}\n", r.n[i], format_double(r.max[i]), format_double(r.ratio[i]));
  return out;
}

std::string limit_shape_csv(const LimitShape& s) {
  const int d = s.boundary.empty() ? 2 : static_cast<int>(s.boundary.front().size());
  std::string out = coord_header(d, "") + '\n';
  for (std::size_t i = 0; i <= s.boundary.size() && !s.boundary.empty(); ++i) {
    append_vec(out, s.boundary[i % s.boundary.size()]);
    out += '\n';
  }
  return out;
}

std::string path_csv(const std::vector<Vec>& path) {
  const int d = path.empty() ? 2 : static_cast<int>(path.front().size());
  std::string out = coord_header(d, "") + '\n';
  for (const Vec& p : path) {
    append_vec(out, p);
    out += '\n';
  }
  return out;
}

std::string points_csv(const PointConfiguration& c) {
  std::string out = coord_header(c.dim(), "") + '\n';
  for (const Vec& p : c.points()) {
    append_vec(out, p);
    out += '\n';
  }
  return out;
}

std::string render_svg(const std::vector<SvgLayer>& layers) {
  constexpr double kSize = 800.0, kMargin = 40.0;
  double extent = 0.0;
  for (const auto& l : layers)
    for (const Vec& p : l.points) {
      if (p.size() != 2) throw InvalidArgument("render_svg: 2D points only");
      if (std::isfinite(p(0)) && std::isfinite(p(1)))
        extent = std::max({extent, std::abs(p(0)), std::abs(p(1))});
    }
  if (!(extent > 0.0)) extent = 1.0;
  const double scale = (kSize / 2 - kMargin) / extent;
  auto px = [&](double x) { return format_double(std::round((kSize / 2 + scale * x) * 100.0) / 100.0); };
  auto py = [&](double y) { return format_double(std::round((kSize / 2 - scale * y) * 100.0) / 100.0); };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"800\" fill=\"white\"/>\n";
  out += "<line x1=\"0\" y1=\"400\" x2=\"800\" y2=\"400\" stroke=\"#999\" stroke-width=\"1\"/>\n";
  out += "<line x1=\"400\" y1=\"0\" x2=\"400\" y2=\"800\" stroke=\"#999\" stroke-width=\"1\"/>\n";
  out += fmt::format("<text x=\"{}\" y=\"396\" font-size=\"12\">{}</text>\n", px(extent),
                     format_double(extent));
  for (const auto& l : layers) {
    if (l.markers) {
      for (const Vec& p : l.points)
        out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"1.5\" fill=\"{}\"/>\n", px(p(0)), py(p(1)), l.stroke);
      continue;
    }
    if (l.points.empty()) continue;
    std::string d;
    for (std::size_t i = 0; i < l.points.size(); ++i)
      d += fmt::format("{}{} {} ", i ? "L" : "M", px(l.points[i](0)), py(l.points[i](1)));
    if (l.closed) d += "Z";
    else d.pop_back();
    out += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", d, l.stroke);
  }
  out += "</svg>\n";
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << content;
  if (!f) throw Error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace fpp
