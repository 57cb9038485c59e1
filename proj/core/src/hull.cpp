#include "geoprof/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace geoprof {

std::vector<std::size_t> upperHull1D(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::isfinite(x[i]) && std::isfinite(y[i])) idx.push_back(i);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] > y[b]);
  });
  std::vector<std::size_t> uniq;
  for (std::size_t i : idx)
    if (uniq.empty() || x[uniq.back()] != x[i]) uniq.push_back(i);

  std::vector<std::size_t> hull;
  for (std::size_t i : uniq) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
      if (cross >= 0.0) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  return hull;
}

double interpolateLinear(std::span<const double> xs, std::span<const double> ys, double x) {
  if (xs.empty() || x < xs.front() || x > xs.back()) return std::numeric_limits<double>::quiet_NaN();
  if (xs.size() == 1) return ys.front();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys.back();
  const auto j = static_cast<std::size_t>(it - xs.begin());
  const std::size_t i = j - 1;
  const double w = (x - xs[i]) / (xs[j] - xs[i]);
  return ys[i] + w * (ys[j] - ys[i]);
}

std::vector<Eigen::Vector2d> convexHull2D(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> h(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

bool insideConvexPolygon(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& q,
                         double tol) {
  if (poly.size() < 3) return false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    const double cross = (b.x() - a.x()) * (q.y() - a.y()) - (b.y() - a.y()) * (q.x() - a.x());
    const double scale = (b - a).norm() * std::max(1.0, (q - a).norm());
    if (cross < -tol * scale) return false;
  }
  return true;
}

namespace {

struct Face {
  std::array<int, 3> v;
  Eigen::Vector3d n;
  double off;
  bool alive = true;
};

std::uint64_t edgeKey(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

UpperHull2D::UpperHull2D(std::span<const double> x, std::span<const double> y,
                         std::span<const double> z) {
  if (x.size() != y.size() || x.size() != z.size())
    throw std::invalid_argument("coordinate arrays differ in length");

  // Keep the highest point per (x, y) location.
  std::map<std::pair<double, double>, std::size_t> top;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]) || !std::isfinite(z[i])) continue;
    auto [it, fresh] = top.emplace(std::make_pair(x[i], y[i]), i);
    if (!fresh && z[i] > z[it->second]) it->second = i;
  }
  std::vector<std::size_t> orig;
  for (const auto& [key, i] : top) orig.push_back(i);
  if (orig.size() < 4) throw std::invalid_argument("surface hull needs at least 4 distinct points");

  // Work in unit-scaled coordinates.
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (std::size_t i : orig) {
    const Eigen::Vector3d p(x[i], y[i], z[i]);
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Eigen::Vector3d span = (hi - lo).cwiseMax(1e-300);
  if ((hi - lo).minCoeff() <= 0.0) throw std::invalid_argument("point cloud is coplanar");
  std::vector<Eigen::Vector3d> P;
  P.reserve(orig.size());
  for (std::size_t i : orig) P.push_back((Eigen::Vector3d(x[i], y[i], z[i]) - lo).cwiseQuotient(span));
  const int n = static_cast<int>(P.size());
  constexpr double eps = 1e-12;

  // Initial tetrahedron.
  int i0 = 0, i1 = 0;
  for (int i = 1; i < n; ++i) {
    if (P[i].x() < P[i0].x()) i0 = i;
    if (P[i].x() > P[i1].x()) i1 = i;
  }
  if (i0 == i1) throw std::invalid_argument("point cloud is coplanar");
  int i2 = -1;
  double best = eps;
  for (int i = 0; i < n; ++i) {
    const double dd = (P[i] - P[i0]).cross(P[i1] - P[i0]).norm();
    if (dd > best) { best = dd; i2 = i; }
  }
  if (i2 < 0) throw std::invalid_argument("point cloud is collinear");
  const Eigen::Vector3d nrm = (P[i1] - P[i0]).cross(P[i2] - P[i0]);
  int i3 = -1;
  best = eps * nrm.norm();
  for (int i = 0; i < n; ++i) {
    const double dd = std::abs(nrm.dot(P[i] - P[i0]));
    if (dd > best) { best = dd; i3 = i; }
  }
  if (i3 < 0) throw std::invalid_argument("point cloud is coplanar");

  std::vector<Face> faces;
  std::unordered_map<std::uint64_t, int> edgeFace;  // directed edge -> face
  const Eigen::Vector3d interior = (P[i0] + P[i1] + P[i2] + P[i3]) / 4.0;
  auto addFace = [&](int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    f.n = (P[b] - P[a]).cross(P[c] - P[a]);
    if (f.n.dot(interior - P[a]) > 0) {
      std::swap(f.v[1], f.v[2]);
      f.n = -f.n;
    }
    const double len = f.n.norm();
    f.n /= len;
    f.off = f.n.dot(P[f.v[0]]);
    faces.push_back(f);
    const int id = static_cast<int>(faces.size()) - 1;
    for (int e = 0; e < 3; ++e) edgeFace[edgeKey(f.v[e], f.v[(e + 1) % 3])] = id;
  };
  addFace(i0, i1, i2);
  addFace(i0, i1, i3);
  addFace(i0, i2, i3);
  addFace(i1, i2, i3);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // Deterministic pseudo-random insertion order keeps the expected cost low.
  std::uint64_t state = 0x2545F4914F6CDD1DULL;
  for (int i = n - 1; i > 0; --i) {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    std::swap(order[i], order[static_cast<int>(state % static_cast<std::uint64_t>(i + 1))]);
  }

  std::vector<char> visible;
  for (int pi : order) {
    if (pi == i0 || pi == i1 || pi == i2 || pi == i3) continue;
    const Eigen::Vector3d& p = P[pi];
    visible.assign(faces.size(), 0);
    bool any = false;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].alive && faces[f].n.dot(p) - faces[f].off > eps) {
        visible[f] = 1;
        any = true;
      }
    }
    if (!any) continue;
    std::vector<std::pair<int, int>> horizon;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (!visible[f]) continue;
      for (int e = 0; e < 3; ++e) {
        const int a = faces[f].v[e], b = faces[f].v[(e + 1) % 3];
        const auto it = edgeFace.find(edgeKey(b, a));
        if (it == edgeFace.end() || !visible[static_cast<std::size_t>(it->second)])
          horizon.emplace_back(a, b);
      }
    }
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (!visible[f]) continue;
      faces[f].alive = false;
      for (int e = 0; e < 3; ++e) edgeFace.erase(edgeKey(faces[f].v[e], faces[f].v[(e + 1) % 3]));
    }
    for (const auto& [a, b] : horizon) {
      Face f;
      f.v = {a, b, pi};
      f.n = (P[b] - P[a]).cross(P[pi] - P[a]);
      const double len = f.n.norm();
      f.n = len > 0 ? Eigen::Vector3d(f.n / len) : Eigen::Vector3d::Zero();
      f.off = f.n.dot(P[a]);
      faces.push_back(f);
      const int id = static_cast<int>(faces.size()) - 1;
      for (int e = 0; e < 3; ++e) edgeFace[edgeKey(f.v[e], f.v[(e + 1) % 3])] = id;
    }
    // Compact dead faces now and then.
    if (faces.size() > 64 && faces.size() > 4 * edgeFace.size() / 3) {
      std::vector<Face> keep;
      keep.reserve(edgeFace.size() / 3 + 1);
      for (auto& f : faces)
        if (f.alive) keep.push_back(f);
      faces = std::move(keep);
      edgeFace.clear();
      for (std::size_t id = 0; id < faces.size(); ++id)
        for (int e = 0; e < 3; ++e)
          edgeFace[edgeKey(faces[id].v[e], faces[id].v[(e + 1) % 3])] = static_cast<int>(id);
    }
  }

  // Upper facets in original coordinates: z = a x + b y + c.
  for (const auto& f : faces) {
    if (!f.alive || !(f.n.z() > 1e-12)) continue;
    const std::size_t va = orig[static_cast<std::size_t>(f.v[0])];
    const std::size_t vb = orig[static_cast<std::size_t>(f.v[1])];
    const std::size_t vc = orig[static_cast<std::size_t>(f.v[2])];
    Eigen::Matrix3d A;
    A << x[va], y[va], 1.0, x[vb], y[vb], 1.0, x[vc], y[vc], 1.0;
    const Eigen::Vector3d rhs(z[va], z[vb], z[vc]);
    const Eigen::Vector3d coef = A.fullPivLu().solve(rhs);
    if (!coef.allFinite()) continue;
    facets_.push_back({{va, vb, vc}, coef[0], coef[1], coef[2]});
  }
  if (facets_.empty()) throw std::invalid_argument("point cloud has no upper facets");

  std::vector<Eigen::Vector2d> proj;
  proj.reserve(orig.size());
  for (std::size_t i : orig) proj.emplace_back(x[i], y[i]);
  footprint_ = convexHull2D(std::move(proj));
}

std::optional<double> UpperHull2D::operator()(double qx, double qy) const {
  if (!insideConvexPolygon(footprint_, {qx, qy}, 1e-10)) return std::nullopt;
  double v = std::numeric_limits<double>::infinity();
  for (const auto& f : facets_) v = std::min(v, f.a * qx + f.b * qy + f.c);
  return v;
}

std::vector<std::size_t> UpperHull2D::vertices() const {
  std::vector<std::size_t> out;
  for (const auto& f : facets_) out.insert(out.end(), f.v.begin(), f.v.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Polyline> contourLines(std::span<const double> xs, std::span<const double> ys,
                                   const Eigen::MatrixXd& values, double level) {
  const auto nx = static_cast<Eigen::Index>(xs.size());
  const auto ny = static_cast<Eigen::Index>(ys.size());
  if (values.rows() != nx || values.cols() != ny)
    throw std::invalid_argument("contour lattice does not match the value matrix");

  using Seg = std::pair<Eigen::Vector2d, Eigen::Vector2d>;
  std::vector<Seg> segs;
  auto lerp = [&](Eigen::Index i0, Eigen::Index j0, Eigen::Index i1, Eigen::Index j1) {
    const double v0 = values(i0, j0), v1 = values(i1, j1);
    const double t = (level - v0) / (v1 - v0);
    return Eigen::Vector2d(xs[i0] + t * (xs[i1] - xs[i0]), ys[j0] + t * (ys[j1] - ys[j0]));
  };
  for (Eigen::Index i = 0; i + 1 < nx; ++i) {
    for (Eigen::Index j = 0; j + 1 < ny; ++j) {
      const double c[4] = {values(i, j), values(i + 1, j), values(i + 1, j + 1), values(i, j + 1)};
      if (!std::isfinite(c[0]) || !std::isfinite(c[1]) || !std::isfinite(c[2]) || !std::isfinite(c[3]))
        continue;
      int code = 0;
      for (int k = 0; k < 4; ++k)
        if (c[k] >= level) code |= 1 << k;
      if (code == 0 || code == 15) continue;
      // Edge crossing points: 0 bottom, 1 right, 2 top, 3 left.
      auto edgePt = [&](int e) {
        switch (e) {
          case 0: return lerp(i, j, i + 1, j);
          case 1: return lerp(i + 1, j, i + 1, j + 1);
          case 2: return lerp(i, j + 1, i + 1, j + 1);
          default: return lerp(i, j, i, j + 1);
        }
      };
      auto add = [&](int e0, int e1) { segs.emplace_back(edgePt(e0), edgePt(e1)); };
      const double centre = 0.25 * (c[0] + c[1] + c[2] + c[3]);
      switch (code) {
        case 1: case 14: add(3, 0); break;
        case 2: case 13: add(0, 1); break;
        case 3: case 12: add(3, 1); break;
        case 4: case 11: add(1, 2); break;
        case 6: case 9: add(0, 2); break;
        case 7: case 8: add(3, 2); break;
        case 5:
          if (centre >= level) { add(3, 2); add(0, 1); }
          else { add(3, 0); add(1, 2); }
          break;
        case 10:
          if (centre >= level) { add(3, 0); add(1, 2); }
          else { add(3, 2); add(0, 1); }
          break;
        default: break;
      }
    }
  }

  // Join segments sharing endpoints.
  auto key = [](const Eigen::Vector2d& p) {
    return std::make_pair(std::llround(p.x() * 1e9), std::llround(p.y() * 1e9));
  };
  std::erase_if(segs, [&](const Seg& s) { return key(s.first) == key(s.second); });
  std::multimap<std::pair<long long, long long>, std::size_t> ends;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    ends.emplace(key(segs[s].first), s);
    ends.emplace(key(segs[s].second), s);
  }
  std::vector<char> used(segs.size(), 0);
  auto takeNext = [&](const Eigen::Vector2d& at) -> std::optional<Eigen::Vector2d> {
    auto range = ends.equal_range(key(at));
    for (auto it = range.first; it != range.second; ++it) {
      const std::size_t s = it->second;
      if (used[s]) continue;
      used[s] = 1;
      return key(segs[s].first) == key(at) ? segs[s].second : segs[s].first;
    }
    return std::nullopt;
  };
  std::vector<Polyline> lines;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (used[s]) continue;
    used[s] = 1;
    Polyline fwd{segs[s].first, segs[s].second};
    while (auto nxt = takeNext(fwd.back())) fwd.push_back(*nxt);
    Polyline back;
    while (auto nxt = takeNext(back.empty() ? fwd.front() : back.back())) back.push_back(*nxt);
    Polyline line(back.rbegin(), back.rend());
    line.insert(line.end(), fwd.begin(), fwd.end());
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace geoprof
