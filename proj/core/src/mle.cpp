#include "geoprof/mle.hpp"

#include "geoprof/distributions.hpp"
#include "geoprof/warnings.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace geoprof {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Optimization vector: free entries of (gamma1, log kappa, nu, gamma2, gamma3, lambda).
struct Layout {
  bool kappaFree = true;
  bool lambdaFree = true;
  double logKappaFixed = 0.0;
  double lambdaFixed = 1.0;

  [[nodiscard]] int size() const { return 4 + (kappaFree ? 1 : 0) + (lambdaFree ? 1 : 0); }

  [[nodiscard]] std::array<double, 6> expand(const Eigen::VectorXd& v) const {
    std::array<double, 6> f{};
    int i = 0;
    f[0] = v[i++];
    f[1] = kappaFree ? v[i++] : logKappaFixed;
    f[2] = v[i++];
    f[3] = v[i++];
    f[4] = v[i++];
    f[5] = lambdaFree ? v[i++] : lambdaFixed;
    return f;
  }

  [[nodiscard]] Eigen::VectorXd pack(const std::array<double, 6>& f) const {
    Eigen::VectorXd v(size());
    int i = 0;
    v[i++] = f[0];
    if (kappaFree) v[i++] = f[1];
    v[i++] = f[2];
    v[i++] = f[3];
    v[i++] = f[4];
    if (lambdaFree) v[i++] = f[5];
    return v;
  }
};

NaturalParams naturalFromFull(const std::array<double, 6>& f) {
  return toNatural(InternalParams{f[0], f[1], f[2], f[3], f[4]}, KappaRegime::log, f[5]);
}

std::array<double, 6> fullFromNatural(const NaturalParams& p) {
  const auto in = toInternal(p, KappaRegime::log);
  return {in.gamma1, in.kappaTilde, in.nu, in.gamma2, in.gamma3, p.lambda()};
}

// Batched profile likelihood over optimization vectors. Points sharing the
// correlation parameters share one factorization.
class ProfileObjective {
 public:
  ProfileObjective(const Dataset& d, const Layout& layout, LikMode mode, EvaluateOptions eval)
      : d_(d), layout_(layout), mode_(mode), eval_(eval) {}

  std::vector<double> operator()(const std::vector<Eigen::VectorXd>& pts) {
    std::vector<double> out(pts.size(), kNegInf);
    std::map<std::array<double, 5>, std::size_t> omegaIndex;
    std::map<double, std::size_t> lambdaIndex;
    std::vector<NaturalParams> omegas;
    std::vector<std::pair<std::size_t, std::size_t>> cell(pts.size(), {SIZE_MAX, SIZE_MAX});
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto f = layout_.expand(pts[i]);
      if (!std::all_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); })) continue;
      const std::array<double, 5> key{f[0], f[1], f[2], f[3], f[4]};
      auto it = omegaIndex.find(key);
      if (it == omegaIndex.end()) {
        try {
          omegas.push_back(naturalFromFull(f));
        } catch (const std::exception&) {
          continue;
        }
        it = omegaIndex.emplace(key, omegas.size() - 1).first;
      }
      auto lt = lambdaIndex.emplace(f[5], lambdaIndex.size()).first;
      cell[i] = {it->second, lt->second};
    }
    if (omegas.empty()) return out;
    std::vector<double> lambdas(lambdaIndex.size());
    for (const auto& [l, idx] : lambdaIndex) lambdas[idx] = l;
    factorizations += static_cast<int>(omegas.size());
    LikGrid grid;
    try {
      grid = evaluateBatch(d_, omegas, lambdas, mode_, eval_);
    } catch (const DomainError&) {
      return out;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (cell[i].first == SIZE_MAX) continue;
      out[i] = grid.logLik(static_cast<Eigen::Index>(cell[i].first),
                           static_cast<Eigen::Index>(cell[i].second));
    }
    return out;
  }

  int factorizations = 0;

 private:
  const Dataset& d_;
  Layout layout_;
  LikMode mode_;
  EvaluateOptions eval_;
};

double pairDistance(const Dataset& d, Eigen::Index i, Eigen::Index j) {
  return (d.coords.row(i) - d.coords.row(j)).norm();
}

// Coordinates of the full-likelihood information.
struct FullLayout {
  int p = 0;
  bool kappaFree = true;
  bool lambdaFree = true;

  [[nodiscard]] int size() const { return p + 1 + 4 + (kappaFree ? 1 : 0) + (lambdaFree ? 1 : 0); }
};

struct FullPoint {
  Eigen::VectorXd beta;
  double sigma = 1.0;
  std::array<double, 6> corr{};
};

FullPoint unpackFull(const Eigen::VectorXd& t, const FullLayout& L, const FitResult& fit) {
  FullPoint fp;
  fp.beta = t.head(L.p);
  int i = L.p;
  fp.sigma = std::exp(t[i++]);
  fp.corr[0] = t[i++];
  fp.corr[1] = L.kappaFree ? t[i++] : std::log(fit.mleNatural.kappa());
  fp.corr[2] = t[i++];
  fp.corr[3] = t[i++];
  fp.corr[4] = t[i++];
  fp.corr[5] = L.lambdaFree ? t[i++] : fit.lambdaHat;
  return fp;
}

double paramFromFull(const ParamRef& p, const FullPoint& fp) {
  switch (p.kind) {
    case Param::beta: return fp.beta[p.index];
    case Param::sdSpatial: return fp.sigma;
    case Param::sdNugget: return fp.sigma * std::abs(fp.corr[2]);
    case Param::boxcox: return fp.corr[5];
    case Param::gamma1: return fp.corr[0];
    case Param::nuInternal: return fp.corr[2];
    case Param::aniso1: return fp.corr[3];
    case Param::aniso2: return fp.corr[4];
    case Param::nugget: return fp.corr[2] * fp.corr[2];
    case Param::shape: return std::exp(fp.corr[1]);
    case Param::combinedRange: return std::exp(0.5 * fp.corr[0]);
    case Param::anisoRatio: return 1.0 + fp.corr[3] * fp.corr[3] + fp.corr[4] * fp.corr[4];
    case Param::range:
      return std::exp(0.5 * fp.corr[0]) *
             std::sqrt(1.0 + fp.corr[3] * fp.corr[3] + fp.corr[4] * fp.corr[4]);
    case Param::anisoAngle: return 0.5 * std::atan2(fp.corr[4], fp.corr[3]);
    case Param::kappaTilde: return fp.corr[1];
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

const char* toString(Convergence c) {
  switch (c) {
    case Convergence::converged: return "converged";
    case Convergence::maxIter: return "maxIter";
    case Convergence::boundary: return "boundary";
  }
  return "unknown";
}

FitBounds FitBounds::fromData(const Dataset& d) {
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    for (Eigen::Index j = i + 1; j < d.n(); ++j) {
      const double h = pairDistance(d, i, j);
      if (h > 0.0) dmin = std::min(dmin, h);
      dmax = std::max(dmax, h);
    }
  }
  if (!(dmax > 0.0)) throw DataError("all locations coincide");
  FitBounds b;
  b.gamma1Lo = std::log(dmin * dmin);
  b.gamma1Hi = std::log(100.0 * dmax * dmax);
  return b;
}

NaturalParams momentStart(const Dataset& d, double lambda) {
  const Eigen::VectorXd z = transformResponse(d.y, lambda);
  const Eigen::VectorXd coef = d.X.colPivHouseholderQr().solve(z);
  const Eigen::VectorXd r = z - d.X * coef;
  const double sill = r.squaredNorm() / static_cast<double>(d.n());

  double dmax = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i)
    for (Eigen::Index j = i + 1; j < d.n(); ++j) dmax = std::max(dmax, pairDistance(d, i, j));
  constexpr int kBins = 15;
  const double cutoff = 0.5 * dmax;
  std::array<double, kBins> sum{};
  std::array<int, kBins> cnt{};
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    for (Eigen::Index j = i + 1; j < d.n(); ++j) {
      const double h = pairDistance(d, i, j);
      if (h >= cutoff) continue;
      const int b = std::min(kBins - 1, static_cast<int>(h / cutoff * kBins));
      sum[b] += 0.5 * (r[i] - r[j]) * (r[i] - r[j]);
      ++cnt[b];
    }
  }
  double range = cutoff;
  double firstGamma = std::numeric_limits<double>::quiet_NaN();
  for (int b = 0; b < kBins; ++b) {
    if (cnt[b] == 0) continue;
    const double g = sum[b] / cnt[b];
    if (std::isnan(firstGamma)) firstGamma = g;
    if (g >= 0.63 * sill) {
      range = 2.0 * (b + 0.5) * cutoff / kBins;
      break;
    }
  }
  double nuggetSq = 0.25;
  if (std::isfinite(firstGamma) && sill > 0.0) {
    const double r0 = std::clamp(firstGamma / sill, 0.02, 0.8);
    nuggetSq = std::clamp(r0 / (1.0 - r0), 0.02, 4.0);
  }
  // Slightly anisotropic start, gamma2 = 0.1.
  const double s = std::pow(1.01, 0.25);
  return {range * s, range / s, 0.0, 1.0, nuggetSq, lambda};
}

FitResult fitMLE(const Dataset& d, const FitOptions& opts) {
  const bool positive = (d.y.array() > 0.0).all();
  Layout layout;
  layout.kappaFree = !opts.fixKappa.has_value();
  if (opts.fixKappa) {
    if (!(*opts.fixKappa > 0.0)) throw std::invalid_argument("fixed shape must be > 0");
    layout.logKappaFixed = std::log(*opts.fixKappa);
  }
  if (opts.fixLambda) {
    layout.lambdaFree = false;
    layout.lambdaFixed = *opts.fixLambda;
  } else if (!positive) {
    warn("response has non-positive values; holding the Box-Cox exponent at 1");
    layout.lambdaFree = false;
    layout.lambdaFixed = 1.0;
  }
  if (!positive && layout.lambdaFixed != 1.0)
    throw DomainError("Box-Cox exponent other than 1 needs a positive response");

  const FitBounds fb = opts.bounds.value_or(FitBounds::fromData(d));
  BoxBounds box;
  {
    std::array<double, 6> lo{fb.gamma1Lo, std::log(fb.kappaLo), fb.nuLo, fb.anisoLo, fb.anisoLo,
                             fb.lambdaLo};
    std::array<double, 6> hi{fb.gamma1Hi, std::log(fb.kappaHi), fb.nuHi, fb.anisoHi, fb.anisoHi,
                             fb.lambdaHi};
    box.lower = layout.pack(lo);
    box.upper = layout.pack(hi);
  }

  std::vector<NaturalParams> starts;
  const double lambda0 = layout.lambdaFree ? 1.0 : layout.lambdaFixed;
  if (opts.init) {
    starts.push_back(opts.init->withLambda(layout.lambdaFree ? opts.init->lambda() : lambda0));
  } else {
    const NaturalParams base = momentStart(d, lambda0);
    const double scales[] = {1.0, 0.5, 2.0};
    for (int s = 0; s < std::max(1, std::min(opts.starts, 3)); ++s) {
      const double k = scales[s];
      starts.emplace_back(base.phiX() * k, base.phiY() * k, base.phiA(), base.kappa(),
                          base.nuggetSq(), base.lambda());
    }
  }
  if (opts.fixKappa)
    for (auto& s : starts) s = s.withKappa(*opts.fixKappa);

  FitResult fit;
  fit.mode = opts.mode;
  fit.fixedKappa = opts.fixKappa;
  fit.lambdaFixed = !layout.lambdaFree;
  fit.bounds = fb;
  fit.covariateNames = d.covariateNames;

  ProfileObjective objective(d, layout, opts.mode, opts.evaluate);
  BatchObjective fn = [&objective](const std::vector<Eigen::VectorXd>& pts) { return objective(pts); };

  double bestValue = kNegInf;
  Eigen::VectorXd bestX;
  bool bestConverged = false;
  for (const auto& s : starts) {
    const int before = objective.factorizations;
    auto full = fullFromNatural(s);
    // Keep the start strictly inside the box and off the nugget boundary.
    Eigen::VectorXd x0 = box.project(layout.pack(full));
    const auto r = maximizeBox(fn, x0, box, opts.optimizer);
    StartRecord rec;
    rec.start = s;
    rec.lambdaStart = s.lambda();
    rec.logLik = r.value;
    rec.iterations = r.iterations;
    rec.factorizations = objective.factorizations - before;
    rec.converged = r.converged;
    rec.message = r.message;
    rec.trace = r.trace;
    fit.starts.push_back(rec);
    fit.iterations += r.iterations;
    if (std::isfinite(r.value) && r.value > bestValue) {
      bestValue = r.value;
      bestX = r.x;
      bestConverged = r.converged;
    }
  }
  fit.factorizations = objective.factorizations;
  if (!std::isfinite(bestValue)) {
    throw FitError("no start produced a finite likelihood", fit);
  }

  const auto full = layout.expand(bestX);
  fit.mleNatural = naturalFromFull(full);
  if (opts.fixKappa) fit.mleNatural = fit.mleNatural.withKappa(*opts.fixKappa);
  fit.lambdaHat = full[5];
  fit.regime = opts.regime.value_or(chooseKappaRegime(fit.mleNatural.kappa()));
  fit.mleInternal = toInternal(fit.mleNatural, fit.regime);

  const NaturalParams omega = fit.mleNatural;
  const double lambda = fit.lambdaHat;
  const auto grid = evaluateBatch(d, std::span<const NaturalParams>(&omega, 1),
                                  std::span<const double>(&lambda, 1), opts.mode, opts.evaluate);
  ++fit.factorizations;
  fit.logLikAtMax = grid.logLik(0, 0);
  fit.sigmaHat = grid.sigmaHat(0, 0);
  fit.betaHat.resize(d.p());
  for (Eigen::Index a = 0; a < d.p(); ++a) fit.betaHat[a] = grid.beta(0, 0, static_cast<std::size_t>(a));

  bool boundary = full[2] < 1e-6;
  if (layout.kappaFree) {
    const double tol = 1e-6 * std::max(1.0, std::abs(full[1]));
    boundary = boundary || full[1] <= std::log(fb.kappaLo) + tol ||
               full[1] >= std::log(fb.kappaHi) - tol;
  }
  fit.convergence = boundary ? Convergence::boundary
                             : (bestConverged ? Convergence::converged : Convergence::maxIter);

  if (opts.computeWald) {
    try {
      fit.wald = computeWaldInfo(d, fit);
    } catch (const std::exception& e) {
      warn(std::string("observed information unavailable: ") + e.what());
    }
  }
  return fit;
}

WaldInfo computeWaldInfo(const Dataset& d, const FitResult& fit) {
  FullLayout L;
  L.p = static_cast<int>(d.p());
  L.kappaFree = !fit.fixedKappa.has_value();
  L.lambdaFree = !fit.lambdaFixed;

  WaldInfo w;
  for (int a = 0; a < L.p; ++a) w.coordinates.push_back(paramName({Param::beta, a}, d.covariateNames));
  w.coordinates.emplace_back("log(sigma)");
  w.coordinates.emplace_back("gamma1");
  if (L.kappaFree) w.coordinates.emplace_back("log(kappa)");
  for (const char* c : {"nu", "gamma2", "gamma3"}) w.coordinates.emplace_back(c);
  if (L.lambdaFree) w.coordinates.emplace_back("lambda");

  const auto corr = fullFromNatural(fit.mleNatural.withLambda(fit.lambdaHat));
  Eigen::VectorXd t(L.size());
  {
    int i = 0;
    for (int a = 0; a < L.p; ++a) t[i++] = fit.betaHat[a];
    t[i++] = std::log(fit.sigmaHat);
    t[i++] = corr[0];
    if (L.kappaFree) t[i++] = corr[1];
    t[i++] = corr[2];
    t[i++] = corr[3];
    t[i++] = corr[4];
    if (L.lambdaFree) t[i++] = corr[5];
  }
  w.estimate = t;

  BatchObjective full = [&](const std::vector<Eigen::VectorXd>& pts) {
    std::vector<double> out(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
      try {
        const FullPoint fp = unpackFull(pts[k], L, fit);
        ScaleParams sc;
        sc.sigmaSq = fp.sigma * fp.sigma;
        sc.beta = fp.beta;
        out[k] = fullLogLik(d, naturalFromFull(fp.corr), sc);
      } catch (const std::exception&) {
        out[k] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    return out;
  };
  const Eigen::MatrixXd info = -numericHessian(full, t, 1e-4);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
  const Eigen::VectorXd ev = es.eigenvalues();
  const Eigen::MatrixXd E = es.eigenvectors();
  const double tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  w.covariance = Eigen::MatrixXd::Zero(info.rows(), info.cols());
  w.defined.assign(static_cast<std::size_t>(info.rows()), true);
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev[k] > tol) {
      w.covariance += E.col(k) * E.col(k).transpose() / ev[k];
    } else {
      for (Eigen::Index i = 0; i < E.rows(); ++i)
        if (std::abs(E(i, k)) > 1e-2) w.defined[static_cast<std::size_t>(i)] = false;
    }
  }

  const NaturalParams omega = fit.mleNatural;
  const double lambda = fit.lambdaHat;
  const auto grid = evaluateBatch(d, std::span<const NaturalParams>(&omega, 1),
                                  std::span<const double>(&lambda, 1), fit.mode);
  Eigen::MatrixXd xvx(L.p, L.p);
  for (int a = 0; a < L.p; ++a)
    for (int b = 0; b < L.p; ++b) xvx(a, b) = grid.summaries.xVx(0, a, b);
  w.betaCovariance = fit.sigmaHat * fit.sigmaHat * xvx.inverse();
  return w;
}

double fittedValue(const FitResult& fit, const ParamRef& p) {
  switch (p.kind) {
    case Param::beta: return fit.betaHat[p.index];
    case Param::sdSpatial: return fit.sigmaHat;
    case Param::sdNugget: return fit.sigmaHat * std::sqrt(fit.mleNatural.nuggetSq());
    case Param::boxcox: return fit.lambdaHat;
    default: return correlationValue(p, fit.mleNatural, fit.regime);
  }
}

std::vector<WaldInterval> waldIntervals(const FitResult& fit, std::span<const ParamRef> params,
                                        double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
  const double z = normalQuantile(0.5 + 0.5 * level);
  std::vector<WaldInterval> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    WaldInterval wi;
    wi.param = p;
    wi.estimate = fittedValue(fit, p);
    const bool heldFixed = (p.kind == Param::shape && fit.fixedKappa) ||
                           (p.kind == Param::kappaTilde && fit.fixedKappa) ||
                           (p.kind == Param::boxcox && fit.lambdaFixed);
    if (!fit.wald || heldFixed) {
      out.push_back(wi);
      continue;
    }
    const WaldInfo& w = *fit.wald;
    double se = std::numeric_limits<double>::quiet_NaN();
    if (p.kind == Param::beta) {
      se = std::sqrt(w.betaCovariance(p.index, p.index));
    } else {
      FullLayout L;
      L.p = static_cast<int>(fit.betaHat.size());
      L.kappaFree = !fit.fixedKappa.has_value();
      L.lambdaFree = !fit.lambdaFixed;
      const Eigen::VectorXd t = w.estimate;
      Eigen::VectorXd grad(t.size());
      bool ok = true;
      for (Eigen::Index i = 0; i < t.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(t[i]));
        Eigen::VectorXd tp = t, tm = t;
        tp[i] += h;
        tm[i] -= h;
        grad[i] = (paramFromFull(p, unpackFull(tp, L, fit)) - paramFromFull(p, unpackFull(tm, L, fit))) /
                  (2.0 * h);
        if (std::abs(grad[i]) > 1e-12 && !w.defined[static_cast<std::size_t>(i)]) ok = false;
      }
      if (ok) se = std::sqrt(std::max(0.0, grad.dot(w.covariance * grad)));
    }
    if (std::isfinite(se)) {
      wi.lo = wi.estimate - z * se;
      wi.hi = wi.estimate + z * se;
    }
    out.push_back(wi);
  }
  return out;
}

nlohmann::json toJson(const NaturalParams& p) {
  return {{"phiX", p.phiX()},         {"phiY", p.phiY()},   {"phiA", p.phiA()},
          {"kappa", p.kappa()},       {"nuggetSq", p.nuggetSq()}, {"lambda", p.lambda()},
          {"combinedRange", p.combinedRange()}, {"anisoRatio", p.ratio()}};
}

nlohmann::json toJson(const FitResult& fit) {
  nlohmann::json j;
  j["mode"] = toString(fit.mode);
  j["kappaRegime"] = toString(fit.regime);
  j["fixedKappa"] = fit.fixedKappa ? nlohmann::json(*fit.fixedKappa) : nlohmann::json(nullptr);
  j["lambdaFixed"] = fit.lambdaFixed;
  j["mleNatural"] = toJson(fit.mleNatural);
  j["mleInternal"] = {{"gamma1", fit.mleInternal.gamma1},
                      {"kappaTilde", fit.mleInternal.kappaTilde},
                      {"nu", fit.mleInternal.nu},
                      {"gamma2", fit.mleInternal.gamma2},
                      {"gamma3", fit.mleInternal.gamma3}};
  j["lambdaHat"] = fit.lambdaHat;
  nlohmann::json beta = nlohmann::json::object();
  for (Eigen::Index a = 0; a < fit.betaHat.size(); ++a)
    beta[paramName({Param::beta, static_cast<int>(a)}, fit.covariateNames)] = fit.betaHat[a];
  j["betaHat"] = beta;
  j["sigmaHat"] = fit.sigmaHat;
  j["logLikAtMax"] = fit.logLikAtMax;
  j["convergence"] = toString(fit.convergence);
  j["iterations"] = fit.iterations;
  j["factorizations"] = fit.factorizations;
  j["bounds"] = {{"gamma1", {fit.bounds.gamma1Lo, fit.bounds.gamma1Hi}},
                 {"kappa", {fit.bounds.kappaLo, fit.bounds.kappaHi}},
                 {"nu", {fit.bounds.nuLo, fit.bounds.nuHi}},
                 {"gamma23", {fit.bounds.anisoLo, fit.bounds.anisoHi}},
                 {"lambda", {fit.bounds.lambdaLo, fit.bounds.lambdaHi}}};
  nlohmann::json starts = nlohmann::json::array();
  for (const auto& s : fit.starts) {
    starts.push_back({{"start", toJson(s.start)},
                      {"logLik", std::isfinite(s.logLik) ? nlohmann::json(s.logLik) : nlohmann::json(nullptr)},
                      {"iterations", s.iterations},
                      {"factorizations", s.factorizations},
                      {"converged", s.converged},
                      {"message", s.message}});
  }
  j["starts"] = starts;
  if (fit.wald) {
    const auto& w = *fit.wald;
    nlohmann::json cov = nlohmann::json::array();
    for (Eigen::Index r = 0; r < w.covariance.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < w.covariance.cols(); ++c) row.push_back(w.covariance(r, c));
      cov.push_back(row);
    }
    j["waldInfo"] = {{"coordinates", w.coordinates},
                     {"estimate", std::vector<double>(w.estimate.data(), w.estimate.data() + w.estimate.size())},
                     {"inverseInformation", cov},
                     {"defined", w.defined}};
  } else {
    j["waldInfo"] = nullptr;
  }
  return j;
}

}  // namespace geoprof
