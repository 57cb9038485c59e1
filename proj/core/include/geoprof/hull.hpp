#pragma once

// Upper convex hulls of likelihood point clouds and the piecewise-linear
// surfaces they define.

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace geoprof {

/// Indices of the upper-hull vertices of (x, y), sorted by x. Among points
/// sharing an abscissa only the highest is kept. Non-finite y are ignored.
std::vector<std::size_t> upperHull1D(std::span<const double> x, std::span<const double> y);

/// Linear interpolation through sorted vertices; NaN outside [x.front(), x.back()].
double interpolateLinear(std::span<const double> xs, std::span<const double> ys, double x);

/// Piecewise-linear upper envelope of a 3-D point cloud (x, y, z): the
/// upper facets of the convex hull. Lower and vertical facets are dropped.
class UpperHull2D {
 public:
  struct Facet {
    std::array<std::size_t, 3> v;  // indices into the input points
    double a, b, c;                // z = a x + b y + c over the facet
  };

  /// Throws std::invalid_argument for fewer than 4 points or a coplanar cloud.
  UpperHull2D(std::span<const double> x, std::span<const double> y, std::span<const double> z);

  /// Envelope value, or nullopt outside the convex hull of the (x, y) projection.
  [[nodiscard]] std::optional<double> operator()(double x, double y) const;

  [[nodiscard]] const std::vector<Facet>& facets() const { return facets_; }
  /// Input indices that are vertices of some upper facet.
  [[nodiscard]] std::vector<std::size_t> vertices() const;

 private:
  std::vector<Facet> facets_;
  std::vector<Eigen::Vector2d> footprint_;  // counter-clockwise convex polygon
};

/// Counter-clockwise convex hull of 2-D points (Andrew's monotone chain).
std::vector<Eigen::Vector2d> convexHull2D(std::vector<Eigen::Vector2d> pts);
bool insideConvexPolygon(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& q,
                         double tol = 1e-12);

using Polyline = std::vector<Eigen::Vector2d>;

/// Marching squares on a rectangular lattice: values(i, j) sits at
/// (xs[i], ys[j]); NaN cells are skipped. Segments are joined into polylines.
std::vector<Polyline> contourLines(std::span<const double> xs, std::span<const double> ys,
                                   const Eigen::MatrixXd& values, double level);

}  // namespace geoprof
