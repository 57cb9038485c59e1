#include "geoprof/repsampler.hpp"

#include "geoprof/distributions.hpp"
#include "geoprof/warnings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace geoprof {
namespace {

std::vector<double> stepSizes(const Eigen::VectorXd& x, double step) {
  std::vector<double> h(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) h[i] = step * std::max(1.0, std::abs(x[i]));
  return h;
}

std::string formatPoint(const Eigen::VectorXd& x) {
  std::ostringstream os;
  os.precision(10);
  os << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

Eigen::MatrixXd hessianFromValues(const std::vector<double>& f, const std::vector<double>& h,
                                  int q) {
  Eigen::MatrixXd H(q, q);
  const double f0 = f[0];
  for (int i = 0; i < q; ++i) {
    const double fp = f[1 + 2 * i];
    const double fm = f[2 + 2 * i];
    H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
  }
  std::size_t idx = 1 + 2 * static_cast<std::size_t>(q);
  for (int i = 0; i < q; ++i) {
    for (int j = i + 1; j < q; ++j) {
      const double fpp = f[idx], fpm = f[idx + 1], fmp = f[idx + 2], fmm = f[idx + 3];
      idx += 4;
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
    }
  }
  return 0.5 * (H + H.transpose());
}

// Random orthogonal matrix (Haar) from the QR factorization of a Gaussian matrix.
Eigen::MatrixXd randomRotation(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd G(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) G(i, j) = z(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd R = qr.matrixQR();
  for (int j = 0; j < dim; ++j)
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  return Q;
}

std::vector<Eigen::VectorXd> sphereRun(int dim, int n, std::mt19937_64& rng,
                                       const SphereOptions& opts) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(dim, n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) X(a, i) = z(rng);
    X.col(i).normalize();
  }
  // Typical nearest-neighbour spacing on S^(dim-1) for n points.
  const double spacing = std::pow(1.0 / n, 1.0 / std::max(1, dim - 1)) * 2.0;
  const double s = 2.0 * dim;
  double eta = 0.25;

  auto minDist = [&](const Eigen::MatrixXd& P) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) best = std::min(best, (P.col(i) - P.col(j)).squaredNorm());
    return std::sqrt(best);
  };

  Eigen::MatrixXd bestX = X;
  double bestMin = minDist(X);
  double anchor = bestMin;
  int sinceAnchor = 0;
  Eigen::MatrixXd F(dim, n);
  Eigen::MatrixXd W(n, n), Ft(n, dim);
  Eigen::VectorXd rowSum(n);
  const int power = dim + 1;  // r^-(s + 2) = (r^2)^-(dim + 1)
  for (int iter = 0; iter < opts.maxIter; ++iter) {
    // Columns are unit vectors, so |x_i - x_j|^2 = 2 - 2 x_i . x_j.
    // Lower triangle only: |x_i - x_j|^2 = 2 - 2 x_i . x_j for unit columns.
    W.setZero();
    W.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
    double curMin2 = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      double* w = W.col(j).data();
      w[j] = 0.0;
      double maxDot = -1.0;
      for (int i = j + 1; i < n; ++i) maxDot = std::max(maxDot, w[i]);
      curMin2 = std::min(curMin2, 2.0 - 2.0 * maxDot);
      for (int i = j + 1; i < n; ++i) {
        const double inv = 1.0 / std::max(2.0 - 2.0 * w[i], 1e-24);
        double v = inv;
        for (int e = 1; e < power; ++e) v *= inv;
        w[i] = v;
      }
    }
    curMin2 = std::max(curMin2, 1e-24);
    // F_i = sum_j w_ij (x_i - x_j)
    Ft.noalias() = W.selfadjointView<Eigen::Lower>() * X.transpose();
    rowSum.noalias() = W.selfadjointView<Eigen::Lower>() * Eigen::VectorXd::Ones(n);
    F = X * rowSum.asDiagonal();
    F -= Ft.transpose();
    const double curMin = std::sqrt(curMin2);
    if (curMin > bestMin) {
      bestMin = curMin;
      bestX = X;
    }
    if (bestMin - anchor >= opts.tolerance) {
      anchor = bestMin;
      sinceAnchor = 0;
    } else if (++sinceAnchor >= opts.patience) {
      break;
    }
    double meanNorm = 0.0;
    for (int i = 0; i < n; ++i) {
      F.col(i) -= F.col(i).dot(X.col(i)) * X.col(i);
      meanNorm += F.col(i).norm();
    }
    meanNorm /= n;
    if (!(meanNorm > 0.0)) break;
    const double cap = 3.0 * eta * spacing;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd move = (eta * spacing / meanNorm) * F.col(i);
      const double len = move.norm();
      if (len > cap) move *= cap / len;
      X.col(i) += move;
      X.col(i).normalize();
    }
    eta *= 0.97;
  }
  // Final state may be the best one.
  const double last = minDist(X);
  if (last > bestMin) bestX = X;

  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = bestX.col(i).normalized();
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<Eigen::VectorXd> hessianStencil(const Eigen::VectorXd& center, double step) {
  const int q = static_cast<int>(center.size());
  const auto h = stepSizes(center, step);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(1 + 2 * q + 2 * q * (q - 1));
  pts.push_back(center);
  for (int i = 0; i < q; ++i) {
    Eigen::VectorXd p = center, m = center;
    p[i] += h[i];
    m[i] -= h[i];
    pts.push_back(p);
    pts.push_back(m);
  }
  for (int i = 0; i < q; ++i) {
    for (int j = i + 1; j < q; ++j) {
      for (const auto& [si, sj] : {std::pair{1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}}) {
        Eigen::VectorXd x = center;
        x[i] += si * h[i];
        x[j] += sj * h[j];
        pts.push_back(x);
      }
    }
  }
  return pts;
}

Eigen::MatrixXd numericHessian(const BatchObjective& objective, const Eigen::VectorXd& center,
                               double step) {
  const int q = static_cast<int>(center.size());
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto pts = hessianStencil(center, step);
    const auto f = objective(pts);
    if (f.size() != pts.size()) throw std::logic_error("objective returned the wrong number of values");
    auto bad = std::find_if(f.begin(), f.end(), [](double v) { return !std::isfinite(v); });
    if (bad == f.end()) return hessianFromValues(f, stepSizes(center, step), q);
    if (attempt == 1) {
      throw std::runtime_error("non-finite objective at stencil point " +
                               formatPoint(pts[static_cast<std::size_t>(bad - f.begin())]));
    }
    step /= 10.0;
  }
  return {};
}

Eigen::VectorXd repairEigenvalues(const Eigen::VectorXd& eigVals) {
  Eigen::VectorXd d = eigVals.cwiseAbs();
  if (d.size() == 0 || d.maxCoeff() == 0.0) throw std::runtime_error("degenerate Hessian");
  if (d.maxCoeff() > 100.0) {
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = std::max(d[i], 0.1);
  }
  return d;
}

Eigen::VectorXd QuadApprox::freeCoords(const InternalParams& p) const {
  if (fixedKappa) return Eigen::Vector4d(p.gamma1, p.nu, p.gamma2, p.gamma3);
  return p.asVector();
}

InternalParams QuadApprox::fromFree(const Eigen::VectorXd& v) const {
  if (fixedKappa) {
    return {v[0], kappaToTilde(*fixedKappa, regime), v[1], v[2], v[3]};
  }
  return {v[0], v[1], v[2], v[3], v[4]};
}

QuadApprox makeQuadApprox(const InternalParams& center, KappaRegime regime,
                          std::optional<double> fixedKappa, const Eigen::MatrixXd& negHessian) {
  QuadApprox q;
  q.center = center;
  q.regime = regime;
  q.fixedKappa = fixedKappa;
  if (negHessian.rows() != q.dim() || negHessian.cols() != q.dim())
    throw std::invalid_argument("negative Hessian has the wrong dimension");
  q.negHessian = 0.5 * (negHessian + negHessian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.negHessian);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigen-decomposition failed");
  q.eigVecs = es.eigenvectors();
  q.rawEigVals = es.eigenvalues();
  q.eigVals = repairEigenvalues(q.rawEigVals);
  return q;
}

QuadApprox likelihoodQuadApprox(const Dataset& d, const InternalParams& center,
                                KappaRegime regime, std::optional<double> fixedKappa,
                                double lambdaHat, LikMode mode, const QuadApproxOptions& opts) {
  QuadApprox shell;
  shell.center = center;
  shell.regime = regime;
  shell.fixedKappa = fixedKappa;
  if (fixedKappa) shell.center.kappaTilde = kappaToTilde(*fixedKappa, regime);

  const double hl = opts.step * std::max(1.0, std::abs(lambdaHat));
  std::vector<double> lambdas = opts.fixLambda
                                    ? std::vector<double>{lambdaHat}
                                    : std::vector<double>{lambdaHat - hl, lambdaHat, lambdaHat + hl};
  double centerValue = std::numeric_limits<double>::quiet_NaN();
  double curvature = 0.0;

  BatchObjective objective = [&](const std::vector<Eigen::VectorXd>& pts) {
    std::vector<NaturalParams> sets;
    sets.reserve(pts.size());
    for (const auto& v : pts) sets.push_back(toNatural(shell.fromFree(v), regime));
    const auto grid = evaluateBatch(d, sets, lambdas, mode, opts.evaluate);
    std::vector<double> out(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (opts.fixLambda) {
        out[k] = grid.logLik(static_cast<Eigen::Index>(k), 0);
        continue;
      }
      const double fm = grid.logLik(k, 0), f0 = grid.logLik(k, 1), fp = grid.logLik(k, 2);
      const double a = (fp + fm - 2.0 * f0) / (2.0 * hl * hl);
      const double b = (fp - fm) / (2.0 * hl);
      double best = std::max({fm, f0, fp});
      if (a < 0.0 && std::isfinite(best)) {
        const double shift = -b / (2.0 * a);
        if (std::abs(shift) <= 2.0 * hl) best = f0 - b * b / (4.0 * a);
      }
      out[k] = best;
      if (k == 0) curvature = 2.0 * a;
    }
    centerValue = out[0];
    return out;
  };

  const Eigen::MatrixXd H = numericHessian(objective, shell.freeCoords(shell.center), opts.step);
  QuadApprox q = makeQuadApprox(shell.center, regime, fixedKappa, -H);
  q.lambdaHat = lambdaHat;
  q.lambdaCurvature = curvature;
  q.logLikAtCenter = centerValue;
  return q;
}

double minPairwiseDistance(const std::vector<Eigen::VectorXd>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::min(best, (pts[i] - pts[j]).norm());
  return best;
}

std::vector<Eigen::VectorXd> spherePoints(int dim, int n, std::uint64_t seed,
                                          const SphereOptions& opts) {
  if (dim < 2) throw std::invalid_argument("sphere dimension must be at least 2");
  if (n < dim + 1) throw std::invalid_argument("need at least dim + 1 sphere points");

  using Key = std::tuple<int, int, std::uint64_t, int, int, int, double>;
  static std::mutex cacheMutex;
  static std::map<Key, std::vector<Eigen::VectorXd>> cache;
  const Key key{dim, n, seed, opts.restarts, opts.maxIter, opts.patience, opts.tolerance};
  {
    std::lock_guard lock(cacheMutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }

  std::vector<Eigen::VectorXd> best;
  double bestMin = -1.0;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(r + 1));
    auto pts = sphereRun(dim, n, rng, opts);
    const double m = minPairwiseDistance(pts);
    if (m > bestMin) {
      bestMin = m;
      best = std::move(pts);
    }
  }
  std::lock_guard lock(cacheMutex);
  cache.emplace(key, best);
  return best;
}

std::string Provenance::str() const {
  switch (kind) {
    case Kind::mle:
      return kappa > 0.0 ? "mle(kappa=" + fmt(kappa) + ")" : "mle";
    case Kind::contour:
      return "contour(dim=" + std::to_string(dim) + ")";
    case Kind::kappaFixed:
      return "kappaFixed(kappa=" + fmt(kappa) + ")";
  }
  return "unknown";
}

Provenance Provenance::parse(const std::string& s) {
  Provenance p;
  auto inner = [&](const std::string& prefix) {
    const auto open = s.find('(');
    const auto close = s.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
      throw std::invalid_argument("malformed provenance '" + s + "'");
    std::string body = s.substr(open + 1, close - open - 1);
    if (body.rfind(prefix, 0) != 0) throw std::invalid_argument("malformed provenance '" + s + "'");
    return std::stod(body.substr(prefix.size()));
  };
  if (s == "mle") {
    p.kind = Kind::mle;
  } else if (s.rfind("mle(", 0) == 0) {
    p.kind = Kind::mle;
    p.kappa = inner("kappa=");
    p.dim = 4;
  } else if (s.rfind("contour(", 0) == 0) {
    p.kind = Kind::contour;
    p.dim = static_cast<int>(inner("dim="));
  } else if (s.rfind("kappaFixed(", 0) == 0) {
    p.kind = Kind::kappaFixed;
    p.kappa = inner("kappa=");
    p.dim = 4;
  } else {
    throw std::invalid_argument("unknown provenance '" + s + "'");
  }
  return p;
}

void RepresentativeSet::add(const InternalParams& p, double a, const Provenance& prov) {
  points.push_back(p);
  natural.push_back(toNatural(p, regime));
  alpha.push_back(a);
  provenance.push_back(prov);
}

void RepresentativeSet::append(const RepresentativeSet& other) {
  if (other.regime != regime && !other.points.empty())
    throw std::invalid_argument("cannot mix shape regimes in one representative set");
  for (std::size_t i = 0; i < other.size(); ++i) {
    points.push_back(other.points[i]);
    natural.push_back(other.natural[i]);
    alpha.push_back(other.alpha[i]);
    provenance.push_back(other.provenance[i]);
  }
}

void RepresentativeSet::refreshNatural() {
  natural.clear();
  natural.reserve(points.size());
  for (const auto& p : points) natural.push_back(toNatural(p, regime));
}

double contourQuadraticForm(const QuadApprox& q, const InternalParams& w) {
  const Eigen::VectorXd delta = q.freeCoords(w) - q.freeCoords(q.center);
  const Eigen::VectorXd u = q.eigVecs.transpose() * delta;
  return u.dot(q.eigVals.cwiseProduct(u));
}

RepresentativeSet contourPoints(const QuadApprox& q, std::span<const double> alphas,
                                int nPerContour, std::uint64_t seed, const SphereOptions& sphere) {
  const int dim = q.dim();
  const auto base = spherePoints(dim, nPerContour, seed, sphere);
  const Eigen::VectorXd center = q.freeCoords(q.center);
  const Eigen::MatrixXd map = q.eigVecs * q.eigVals.cwiseSqrt().cwiseInverse().asDiagonal();
  // Smallest admissible inverse-root shape (kappa = 1e6 behaves as the Gaussian limit).
  constexpr double kMinInvSqrt = 1e-3;

  RepresentativeSet out;
  out.regime = q.regime;
  Provenance prov;
  prov.kind = q.fixedKappa ? Provenance::Kind::kappaFixed : Provenance::Kind::contour;
  prov.dim = dim;
  prov.kappa = q.fixedKappa.value_or(0.0);
  std::mt19937_64 rng(seed ^ 0xD1B54A32D192ED03ULL);
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("contour alpha must lie in (0, 1)");
    const double c = chisqUpperQuantile(a, dim);
    const Eigen::MatrixXd rot = randomRotation(dim, rng);
    const Eigen::MatrixXd scaled = std::sqrt(c) * map * rot;
    for (const auto& x : base) {
      InternalParams w = q.fromFree(center + scaled * x);
      if (q.regime == KappaRegime::invSqrt) w.kappaTilde = std::max(w.kappaTilde, kMinInvSqrt);
      out.add(w, a, prov);
    }
  }
  return out;
}

RepresentativeSet repairNugget(RepresentativeSet set, std::uint64_t seed) {
  std::vector<std::size_t> negative;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (set.points[i].nu < 0.0) negative.push_back(i);
  if (negative.empty()) return set;
  std::mt19937_64 rng(seed);
  std::shuffle(negative.begin(), negative.end(), rng);
  const std::size_t zeros = negative.size() / 2;
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  for (std::size_t r = 0; r < negative.size(); ++r) {
    auto& p = set.points[negative[r]];
    if (r < zeros) {
      p.nu = 0.0;
    } else {
      double v = 0.0;
      while (v <= 0.0) v = unif(rng);
      p.nu = std::sqrt(v);
    }
    set.natural[negative[r]] = toNatural(p, set.regime);
  }
  return set;
}

std::vector<double> lambdaGrid(double center, double curvature, int m) {
  if (m < 1) throw std::invalid_argument("lambda grid needs at least one value");
  if (m == 1) return {center};
  double half;
  if (curvature < 0.0 && std::isfinite(curvature)) {
    half = normalQuantile(0.99) / std::sqrt(-curvature);
  } else {
    warn("Box-Cox curvature is not negative; using lambda-hat +- 1 for the grid");
    half = 1.0;
  }
  std::vector<double> grid(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    grid[i] = center - half + 2.0 * half * static_cast<double>(i) / (m - 1);
  }
  grid.back() = center + half;
  const double tol = 1e-12 * std::max(1.0, half);
  if (std::none_of(grid.begin(), grid.end(), [&](double v) { return std::abs(v - center) <= tol; }))
    grid.push_back(center);
  std::sort(grid.begin(), grid.end());
  return grid;
}

void writeRepresentativeSetCsv(const RepresentativeSet& set, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << "# kappaRegime=" << toString(set.regime) << '\n';
  if (!set.lambdaGrid.empty()) {
    os << "# lambdaGrid=";
    for (std::size_t i = 0; i < set.lambdaGrid.size(); ++i)
      os << (i ? ";" : "") << set.lambdaGrid[i];
    os << '\n';
  }
  os << "gamma1,kappaTilde,nu,gamma2,gamma3,alpha,provenance\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& p = set.points[i];
    os << p.gamma1 << ',' << p.kappaTilde << ',' << p.nu << ',' << p.gamma2 << ',' << p.gamma3
       << ',';
    if (std::isnan(set.alpha[i])) os << "NA";
    else os << set.alpha[i];
    os << ',' << set.provenance[i].str() << '\n';
  }
}

RepresentativeSet readRepresentativeSetCsv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  RepresentativeSet set;
  std::string line;
  bool header = false;
  std::vector<InternalParams> pts;
  std::size_t lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = line.substr(1);
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      std::string key = body.substr(0, eq);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = body.substr(eq + 1);
      if (key == "kappaRegime") set.regime = kappaRegimeFromString(value);
      if (key == "lambdaGrid") {
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ';')) set.lambdaGrid.push_back(std::stod(tok));
      }
      continue;
    }
    if (!header) {
      if (line != "gamma1,kappaTilde,nu,gamma2,gamma3,alpha,provenance")
        throw std::runtime_error(path + ": unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cells.push_back(tok);
    if (cells.size() != 7)
      throw std::runtime_error(path + ": line " + std::to_string(lineNo) + " needs 7 fields");
    InternalParams p{std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[2]),
                     std::stod(cells[3]), std::stod(cells[4])};
    set.points.push_back(p);
    set.alpha.push_back(cells[5] == "NA" ? std::numeric_limits<double>::quiet_NaN()
                                         : std::stod(cells[5]));
    set.provenance.push_back(Provenance::parse(cells[6]));
  }
  set.refreshNatural();
  return set;
}

}  // namespace geoprof
