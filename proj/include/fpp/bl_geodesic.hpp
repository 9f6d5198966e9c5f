#pragma once

#include "fpp/env.hpp"
#include "fpp/lagrangian.hpp"

#include "json.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace fpp {

/// Step cost, its derived step bound r, and the penalty charged per
/// non-Poisson vertex (1 in the model; other values only for scaling checks).
struct BrokenLineCost {
  LagrangianSpec lagrangian;
  double r = 0.0;
  double penalty = 1.0;

  BrokenLineCost() = default;
  explicit BrokenLineCost(LagrangianSpec l, double penalty_unit = 1.0);

  SegmentCost segment(const Vec& delta, int penalty_sum) const {
    return segment_cost(lagrangian, r, delta, static_cast<double>(penalty_sum), penalty);
  }
  double envelope(double dist) const {
    return segment_cost_lower_envelope(lagrangian, r, dist, penalty);
  }
  /// Tabulated lower bound of envelope(dist) for search pruning: the
  /// envelope is nondecreasing, so its value at the grid point below dist
  /// is a valid bound. Falls back to the exact value past the table.
  double envelope_floor(double dist) const {
    const double x = dist * kEnvelopeTableDensity;
    if (envelope_table_ && x >= 0.0 && x < static_cast<double>(envelope_table_->size()))
      return (*envelope_table_)[static_cast<std::size_t>(x)];
    return envelope(dist);
  }
  void build_envelope_table();
  /// Every cost multiplied by s.
  BrokenLineCost scaled(double s) const;

  static constexpr double kEnvelopeTableDensity = 64.0;
  static constexpr double kEnvelopeTableRange = 512.0;

 private:
  std::shared_ptr<const std::vector<double>> envelope_table_;
};

struct DiscretePath {
  std::vector<Vec> vertices;
  std::vector<std::uint8_t> penalty;  // F(vertex) in {0, 1}
};

struct GeodesicResult {
  std::vector<Vec> binding;       // endpoints plus the Poisson points used
  std::vector<long> n_opt;        // steps per binding segment
  DiscretePath path;              // evenly spaced expansion
  double action = 0.0;
  double localization_radius = 0.0;
  double inflation_margin = 0.0;  // localization radius minus |x - y| / 2
  double exit_lower_bound = 0.0;  // cost bound for paths leaving the ball
  std::size_t graph_nodes = 0;
  std::size_t nodes_expanded = 0;
  std::size_t long_edges = 0;     // edges added by the long-edge verification
  int rounds = 0;                 // localization radii tried
  bool certified = false;
  bool tie_enumeration_truncated = false;
};

struct GeodesicOptions {
  double edge_cap = 2.5;        // edges up to this length are always in the graph
  double initial_margin = -1.0; // < 0: max(3, 0.6 |x - y|)
  double growth = 1.25;         // radius factor between localization rounds
  double min_radius = 0.0;      // force at least this localization radius
  std::size_t max_tie_paths = 4096;
};

/// Action of a discrete path: sum L(step) + p(F(first)/2 + sum F(interior) + F(last)/2).
double path_action(const PointConfiguration& env, const BrokenLineCost& cost,
                   const std::vector<Vec>& path);

/// Sum of Euclidean step lengths.
double euclidean_length(const std::vector<Vec>& path);

/// Certified global minimiser of the action between x and y.
GeodesicResult geodesic(const PointConfiguration& env, const BrokenLineCost& cost, const Vec& x,
                        const Vec& y, const GeodesicOptions& opts = {});

/// Exhaustive search over ordered sequences of distinct configuration
/// points; requires env.size() <= max_points <= 8.
GeodesicResult brute_force_geodesic(const PointConfiguration& env, const BrokenLineCost& cost,
                                    const Vec& x, const Vec& y, std::size_t max_points = 8);

/// Minimal action; 0 when x == y.
double action(const PointConfiguration& env, const BrokenLineCost& cost, const Vec& x,
              const Vec& y, const GeodesicOptions& opts = {});

/// Expand binding vertices into the evenly spaced discrete path.
DiscretePath expand_binding(const PointConfiguration& env, const std::vector<Vec>& binding,
                            const std::vector<long>& n_opt);

/// Single-source minimal actions from x to every configuration point within
/// `radius` of x and to the query points. Used by the empirical metric-ball
/// scan. Values are exact when they are <= bound and exit_lower_bound >
/// bound; larger values are reported as +inf.
struct SingleSourceResult {
  std::vector<std::size_t> nodes;  // configuration indices in the ball
  std::vector<double> dist;        // action from x, parallel to nodes
  std::vector<double> query_dist;  // action from x, parallel to the queries
  double exit_lower_bound = 0.0;   // lower bound for paths leaving B(x, radius)
  bool x_is_poisson = false;
};
SingleSourceResult single_source(const PointConfiguration& env, const BrokenLineCost& cost,
                                 const Vec& x, double radius, double bound,
                                 const std::vector<Vec>& queries = {},
                                 const GeodesicOptions& opts = {});

nlohmann::json to_json(const GeodesicResult& g);

}  // namespace fpp
