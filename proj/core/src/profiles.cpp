#include "geoprof/profiles.hpp"

#include "geoprof/distributions.hpp"
#include "geoprof/warnings.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace geoprof {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

std::string formatNumber(double v, int precision) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

double cloudMax(std::span<const double> y) {
  double m = kNegInf;
  for (double v : y)
    if (std::isfinite(v)) m = std::max(m, v);
  return m;
}

// -2 log-likelihood of cell (k, m) at variance sigmaSq, given its residual form r.
double m2llAt(const LikGrid& grid, std::size_t k, std::size_t m, double r, double sigmaSq) {
  const LikSummaries& s = grid.summaries;
  const double n = static_cast<double>(grid.n);
  const double dof = grid.mode == LikMode::ML ? n : n - static_cast<double>(grid.p);
  double v = dof * std::log(sigmaSq) + r / sigmaSq + s.detVar[k] - 2.0 * s.jacobian[m] + n * kLog2Pi;
  if (grid.mode == LikMode::REML) v += s.detReml[k];
  return v;
}

bool cellValid(const LikGrid& grid, std::size_t k, std::size_t m) {
  return grid.status[k] == SetStatus::ok &&
         std::isfinite(grid.logLik(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)));
}

// Monotone single-coordinate maps from a natural parameter to the internal
// coordinate it is hulled in.
struct CoordinateMap {
  Param internal;
  std::function<double(double)> toInternal;
};

std::optional<CoordinateMap> singleCoordinateMap(const ParamRef& p, KappaRegime regime) {
  switch (p.kind) {
    case Param::combinedRange:
      return CoordinateMap{Param::gamma1, [](double c) { return 2.0 * std::log(c); }};
    case Param::shape:
      return CoordinateMap{Param::kappaTilde,
                           [regime](double k) { return kappaToTilde(k, regime); }};
    case Param::nugget:
      return CoordinateMap{Param::nuInternal, [](double v) { return std::sqrt(std::max(0.0, v)); }};
    default:
      return std::nullopt;
  }
}

double cellCoordinate(const LikGrid& grid, const ParamRef& p, std::size_t k, std::size_t m,
                      KappaRegime regime) {
  if (p.kind == Param::boxcox) return grid.lambdaGrid[m];
  return correlationValue(p, grid.omegaSets[k], regime);
}

}  // namespace

const char* toString(Space s) { return s == Space::natural ? "natural" : "internal"; }

std::string ConfidenceInterval::loText(int precision) const {
  if (!lo) return "NA";
  return (loOpen ? "<" : "") + formatNumber(*lo, precision);
}

std::string ConfidenceInterval::hiText(int precision) const {
  if (!hi) return "NA";
  return (hiOpen ? ">" : "") + formatNumber(*hi, precision);
}

double ProfileCurve::argmax() const {
  if (hullY.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto it = std::max_element(hullY.begin(), hullY.end());
  return hullX[static_cast<std::size_t>(it - hullY.begin())];
}

ProfileCurve curveFromCloud(std::string name, const ParamRef& param, Space space,
                            std::span<const double> x, std::span<const double> y, bool hull,
                            std::optional<double> reference) {
  if (x.size() != y.size()) throw std::invalid_argument("cloud coordinates differ in length");
  ProfileCurve c;
  c.name = std::move(name);
  c.param = param;
  c.space = space;
  c.physicalLower = physicalLowerBound(param);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::isfinite(x[i]) && std::isfinite(y[i])) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] > y[b]);
  });
  std::size_t distinct = 0;
  for (std::size_t r = 0; r < order.size(); ++r)
    if (r == 0 || x[order[r]] != x[order[r - 1]]) ++distinct;
  if (distinct < 3)
    throw std::invalid_argument("profile of '" + c.name + "' needs at least 3 distinct abscissa values");

  c.maxLogLik = reference.value_or(cloudMax(y));
  std::vector<std::size_t> support;
  if (hull) {
    support = upperHull1D(x, y);
  } else {
    for (std::size_t r = 0; r < order.size(); ++r)
      if (r == 0 || x[order[r]] != x[order[r - 1]]) support.push_back(order[r]);
  }
  std::vector<char> isSupport(x.size(), 0);
  for (std::size_t i : support) isSupport[i] = 1;
  for (std::size_t i : order) {
    c.abscissa.push_back(x[i]);
    c.pll.push_back(y[i] - c.maxLogLik);
    c.isHullVertex.push_back(isSupport[i] != 0);
  }
  for (std::size_t i : support) {
    c.hullX.push_back(x[i]);
    c.hullY.push_back(y[i] - c.maxLogLik);
  }
  return c;
}

ProfileCurve profile1D(const LikGrid& grid, const ParamRef& param, KappaRegime regime, Space space,
                       std::optional<double> reference) {
  const std::size_t K = grid.K(), M = grid.M();
  std::vector<double> x, y;
  const double ref = reference.value_or(grid.logLik.maxCoeff());
  if (param.kind == Param::boxcox) {
    for (std::size_t m = 0; m < M; ++m) {
      x.push_back(grid.lambdaGrid[m]);
      y.push_back(grid.logLik.col(static_cast<Eigen::Index>(m)).maxCoeff());
    }
    return curveFromCloud("boxcox", param, space, x, y, false, ref);
  }
  if (!isCorrelationParam(param))
    throw std::invalid_argument("profile1D handles correlation parameters and lambda only");

  ParamRef coord = param;
  if (space == Space::internal) {
    if (auto map = singleCoordinateMap(param, regime)) coord = {map->internal, 0};
  }
  x.reserve(K);
  y.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double best = grid.bestOverLambda(k);
    if (!std::isfinite(best)) continue;
    x.push_back(correlationValue(coord, grid.omegaSets[k], regime));
    y.push_back(best);
  }
  return curveFromCloud(paramName(coord, {}), coord, space, x, y, true, ref);
}

ConfidenceInterval likelihoodCI(const ProfileCurve& curve, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
  ConfidenceInterval ci;
  ci.level = level;
  ci.method = CiMethod::likelihood;
  const auto& X = curve.hullX;
  const auto& Y = curve.hullY;
  if (X.empty()) return ci;
  const double t = -0.5 * chisqQuantile(level, 1.0);
  const auto top = static_cast<std::size_t>(std::max_element(Y.begin(), Y.end()) - Y.begin());

  std::size_t j = top;
  while (j > 0 && Y[j - 1] >= t) --j;
  if (j == 0) {
    ci.lo = X.front();
    const bool atBound =
        curve.physicalLower && std::abs(X.front() - *curve.physicalLower) <= 1e-12 * std::max(1.0, std::abs(X.front()));
    ci.loOpen = !atBound;
  } else {
    const double w = (t - Y[j - 1]) / (Y[j] - Y[j - 1]);
    ci.lo = X[j - 1] + w * (X[j] - X[j - 1]);
  }
  j = top;
  while (j + 1 < X.size() && Y[j + 1] >= t) ++j;
  if (j + 1 == X.size()) {
    ci.hi = X.back();
    ci.hiOpen = true;
  } else {
    const double w = (t - Y[j + 1]) / (Y[j] - Y[j + 1]);
    ci.hi = X[j + 1] + w * (X[j] - X[j + 1]);
  }
  return ci;
}

double logLikAtSigma(const LikGrid& grid, std::size_t k, std::size_t m, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (!cellValid(grid, k, m)) return kNegInf;
  return -0.5 * m2llAt(grid, k, m, grid.summaries.residual(k, m), sigma * sigma);
}

ProfileCurve profileBeta(const LikGrid& grid, int a, std::span<const double> betaGrid,
                         const std::vector<std::string>& covariateNames,
                         std::optional<double> reference) {
  const auto p = static_cast<Eigen::Index>(grid.p);
  if (a < 0 || a >= p) throw std::invalid_argument("covariate index out of range");
  const LikSummaries& s = grid.summaries;
  const std::size_t K = grid.K(), M = grid.M();
  const double n = static_cast<double>(grid.n);
  const double dof = grid.mode == LikMode::ML ? n : n - static_cast<double>(grid.p);
  std::vector<double> best(betaGrid.size(), kNegInf);
  std::vector<Eigen::Index> rest;
  for (Eigen::Index b = 0; b < p; ++b)
    if (b != a) rest.push_back(b);
  const auto q = static_cast<Eigen::Index>(rest.size());
  std::size_t skipped = 0;

  for (std::size_t k = 0; k < K; ++k) {
    if (grid.status[k] != SetStatus::ok) continue;
    Eigen::MatrixXd A(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) A(i, j) = s.xVx(k, i, j);
    Eigen::MatrixXd Arr(q, q);
    Eigen::VectorXd Ara(q);
    for (Eigen::Index i = 0; i < q; ++i) {
      Ara[i] = A(rest[i], a);
      for (Eigen::Index j = 0; j < q; ++j) Arr(i, j) = A(rest[i], rest[j]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (q > 0) {
      llt.compute(Arr);
      if (llt.info() != Eigen::Success) {
        ++skipped;
        continue;
      }
    }
    const Eigen::VectorXd GAra = q > 0 ? Eigen::VectorXd(llt.solve(Ara)) : Eigen::VectorXd();
    const double c2 = A(a, a) - (q > 0 ? Ara.dot(GAra) : 0.0);
    for (std::size_t m = 0; m < M; ++m) {
      if (!cellValid(grid, k, m)) continue;
      Eigen::VectorXd br(q);
      for (Eigen::Index i = 0; i < q; ++i) br[i] = s.xVy(k, static_cast<std::size_t>(rest[i]), m);
      const double ba = s.xVy(k, static_cast<std::size_t>(a), m);
      const Eigen::VectorXd Gbr = q > 0 ? Eigen::VectorXd(llt.solve(br)) : Eigen::VectorXd();
      const double c0 = s.yVy(k, m) - (q > 0 ? br.dot(Gbr) : 0.0);
      const double c1 = ba - (q > 0 ? Ara.dot(Gbr) : 0.0);
      double constant = s.detVar[k] - 2.0 * s.jacobian[m] + n * kLog2Pi + dof;
      if (grid.mode == LikMode::REML) constant += s.detReml[k];
      for (std::size_t g = 0; g < betaGrid.size(); ++g) {
        const double b = betaGrid[g];
        const double r = c0 - 2.0 * c1 * b + c2 * b * b;
        if (!(r > 0.0)) continue;
        const double ll = -0.5 * (dof * std::log(r / dof) + constant);
        best[g] = std::max(best[g], ll);
      }
    }
  }
  if (skipped > 0)
    warn(std::to_string(skipped) + " parameter sets skipped in the profile of " +
         paramName({Param::beta, a}, covariateNames) + " (singular cross-product block)");
  return curveFromCloud(paramName({Param::beta, a}, covariateNames), {Param::beta, a},
                        Space::natural, betaGrid, best, false,
                        reference.value_or(grid.logLik.maxCoeff()));
}

ProfileCurve profileSigma(const LikGrid& grid, std::span<const double> sigmaGrid,
                          std::optional<double> reference) {
  for (double v : sigmaGrid)
    if (!(v > 0.0)) throw std::invalid_argument("sigma grid values must be > 0");
  std::vector<double> best(sigmaGrid.size(), kNegInf);
  for (std::size_t k = 0; k < grid.K(); ++k) {
    for (std::size_t m = 0; m < grid.M(); ++m) {
      if (!cellValid(grid, k, m)) continue;
      const double r = grid.summaries.residual(k, m);
      for (std::size_t g = 0; g < sigmaGrid.size(); ++g) {
        const double ll = -0.5 * m2llAt(grid, k, m, r, sigmaGrid[g] * sigmaGrid[g]);
        best[g] = std::max(best[g], ll);
      }
    }
  }
  return curveFromCloud("sdSpatial", {Param::sdSpatial, 0}, Space::natural, sigmaGrid, best, false,
                        reference.value_or(grid.logLik.maxCoeff()));
}

ProfileCurve profileSdNugget(const LikGrid& grid, std::span<const double> tauGrid,
                             std::optional<double> reference) {
  for (double v : tauGrid)
    if (!(v >= 0.0)) throw std::invalid_argument("tau grid values must be >= 0");
  std::vector<double> best(tauGrid.size(), kNegInf);
  for (std::size_t k = 0; k < grid.K(); ++k) {
    const double nu = std::sqrt(grid.omegaSets[k].nuggetSq());
    for (std::size_t m = 0; m < grid.M(); ++m) {
      if (!cellValid(grid, k, m)) continue;
      const double r = grid.summaries.residual(k, m);
      for (std::size_t g = 0; g < tauGrid.size(); ++g) {
        const double tau = tauGrid[g];
        double ll;
        if (nu > 0.0) {
          if (tau <= 0.0) continue;
          const double sigma = tau / nu;
          ll = -0.5 * m2llAt(grid, k, m, r, sigma * sigma);
        } else {
          if (tau != 0.0) continue;
          ll = grid.logLik(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
        }
        best[g] = std::max(best[g], ll);
      }
    }
  }
  return curveFromCloud("sdNugget", {Param::sdNugget, 0}, Space::natural, tauGrid, best, false,
                        reference.value_or(grid.logLik.maxCoeff()));
}

Surface2D profile2D(const LikGrid& grid, const ParamRef& xParam, const ParamRef& yParam,
                    KappaRegime regime, const Surface2DOptions& opts,
                    std::optional<double> reference) {
  for (const auto& p : {xParam, yParam})
    if (!isCorrelationParam(p) && p.kind != Param::boxcox)
      throw std::invalid_argument("2-D profiles handle correlation parameters and lambda only");
  if (xParam == yParam) throw std::invalid_argument("2-D profile needs two different parameters");
  if (opts.gridSize < 2) throw std::invalid_argument("2-D lattice needs at least 2 points per side");

  Surface2D out;
  out.xParam = xParam;
  out.yParam = yParam;
  out.space = opts.space;
  const double ref = reference.value_or(grid.logLik.maxCoeff());

  // Hull coordinates and the map from requested coordinates into them.
  ParamRef hx = xParam, hy = yParam;
  std::function<std::pair<double, double>(double, double)> toHull =
      [](double u, double v) { return std::make_pair(u, v); };
  const bool polarPair = (xParam.kind == Param::anisoRatio && yParam.kind == Param::anisoAngle) ||
                         (xParam.kind == Param::anisoAngle && yParam.kind == Param::anisoRatio);
  if (opts.space == Space::natural && polarPair) {
    hx = {Param::aniso1, 0};
    hy = {Param::aniso2, 0};
    const bool ratioFirst = xParam.kind == Param::anisoRatio;
    toHull = [ratioFirst](double u, double v) {
      const double ratio = ratioFirst ? u : v;
      const double angle = ratioFirst ? v : u;
      const double r = std::sqrt(std::max(0.0, ratio - 1.0));
      return std::make_pair(r * std::cos(2.0 * angle), r * std::sin(2.0 * angle));
    };
  } else {
    const auto mx = singleCoordinateMap(xParam, regime);
    const auto my = singleCoordinateMap(yParam, regime);
    if (mx) hx = {mx->internal, 0};
    if (my) hy = {my->internal, 0};
    if (opts.space == Space::natural) {
      auto fx = mx ? mx->toInternal : std::function<double(double)>([](double u) { return u; });
      auto fy = my ? my->toInternal : std::function<double(double)>([](double v) { return v; });
      toHull = [fx, fy](double u, double v) { return std::make_pair(fx(u), fy(v)); };
    }
  }
  // In internal space the lattice is laid out directly in hull coordinates.
  const ParamRef gx = opts.space == Space::natural ? xParam : hx;
  const ParamRef gy = opts.space == Space::natural ? yParam : hy;

  const bool perCell = xParam.kind == Param::boxcox || yParam.kind == Param::boxcox;
  std::vector<double> cx, cy, cz, ux, uy;
  for (std::size_t k = 0; k < grid.K(); ++k) {
    if (perCell) {
      for (std::size_t m = 0; m < grid.M(); ++m) {
        const double z = grid.logLik(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
        if (!std::isfinite(z)) continue;
        cx.push_back(cellCoordinate(grid, hx, k, m, regime));
        cy.push_back(cellCoordinate(grid, hy, k, m, regime));
        cz.push_back(z - ref);
        ux.push_back(cellCoordinate(grid, gx, k, m, regime));
        uy.push_back(cellCoordinate(grid, gy, k, m, regime));
      }
    } else {
      const double z = grid.bestOverLambda(k);
      if (!std::isfinite(z)) continue;
      cx.push_back(cellCoordinate(grid, hx, k, 0, regime));
      cy.push_back(cellCoordinate(grid, hy, k, 0, regime));
      cz.push_back(z - ref);
      ux.push_back(cellCoordinate(grid, gx, k, 0, regime));
      uy.push_back(cellCoordinate(grid, gy, k, 0, regime));
    }
  }
  const UpperHull2D hull(cx, cy, cz);

  const auto [xmin, xmax] = std::minmax_element(ux.begin(), ux.end());
  const auto [ymin, ymax] = std::minmax_element(uy.begin(), uy.end());
  const int G = opts.gridSize;
  out.xs.resize(static_cast<std::size_t>(G));
  out.ys.resize(static_cast<std::size_t>(G));
  for (int i = 0; i < G; ++i) {
    out.xs[i] = *xmin + (*xmax - *xmin) * i / (G - 1);
    out.ys[i] = *ymin + (*ymax - *ymin) * i / (G - 1);
  }
  out.values = Eigen::MatrixXd::Constant(G, G, std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < G; ++i) {
    for (int j = 0; j < G; ++j) {
      const auto [qx, qy] = toHull(out.xs[i], out.ys[j]);
      if (const auto v = hull(qx, qy)) out.values(i, j) = *v;
    }
  }
  for (double level : opts.levels) {
    Surface2D::Contour c;
    c.level = level;
    c.threshold = -0.5 * chisqQuantile(level, 2.0);
    c.lines = contourLines(out.xs, out.ys, out.values, c.threshold);
    out.contours.push_back(std::move(c));
  }
  return out;
}

std::vector<double> defaultBetaGrid(double estimate, double se, int points) {
  if (points < 3) throw std::invalid_argument("beta grid needs at least 3 points");
  if (!(se > 0.0) || !std::isfinite(se)) se = std::max(1.0, std::abs(estimate)) * 0.5;
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[i] = estimate - 4.0 * se + 8.0 * se * i / (points - 1);
  return g;
}

std::vector<double> defaultSigmaGrid(double sigmaHat, int points, double factor) {
  if (points < 3) throw std::invalid_argument("sigma grid needs at least 3 points");
  if (!(sigmaHat > 0.0)) throw std::invalid_argument("sigma estimate must be > 0");
  std::vector<double> g(static_cast<std::size_t>(points));
  if (!(factor > 1.0)) throw std::invalid_argument("sigma grid factor must be > 1");
  const double lo = std::log(sigmaHat / factor), hi = std::log(sigmaHat * factor);
  for (int i = 0; i < points; ++i) g[i] = std::exp(lo + (hi - lo) * i / (points - 1));
  return g;
}

}  // namespace geoprof
