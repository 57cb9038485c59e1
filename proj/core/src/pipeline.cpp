#include "geoprof/pipeline.hpp"

#include "geoprof/warnings.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace geoprof {

EvaluateOptions PipelineConfig::evaluateOptions() const {
  EvaluateOptions e;
  e.batchSize = batchSize;
  e.threads = threads;
  e.precision = precision;
  return e;
}

std::size_t PipelineConfig::expectedRepresentativeCount() const {
  const bool mainFixed = fixKappa.has_value();
  const std::size_t families = mainFixed ? 0 : kappaFixed.size();
  const std::size_t mainPoints = static_cast<std::size_t>(mainFixed ? pointsPerContourFixed : pointsPerContour);
  return 1 + families + alphas.size() * mainPoints +
         families * kappaFixedAlphas.size() * static_cast<std::size_t>(pointsPerContourFixed);
}

nlohmann::json toJson(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["mode"] = toString(cfg.mode);
  j["alphas"] = cfg.alphas;
  j["kappaFixed"] = cfg.kappaFixed;
  j["kappaFixedAlphas"] = cfg.kappaFixedAlphas;
  j["pointsPerContour"] = cfg.pointsPerContour;
  j["pointsPerContourFixed"] = cfg.pointsPerContourFixed;
  j["lambdaGridSize"] = cfg.lambdaGridSize;
  j["batchSize"] = cfg.batchSize;
  j["ciLevel"] = cfg.ciLevel;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["precision"] = cfg.precision == Precision::Double ? "double" : "single";
  j["fixKappa"] = cfg.fixKappa ? nlohmann::json(*cfg.fixKappa) : nlohmann::json(nullptr);
  j["fixLambda"] = cfg.fixLambda ? nlohmann::json(*cfg.fixLambda) : nlohmann::json(nullptr);
  j["starts"] = cfg.starts;
  j["hessianStep"] = cfg.hessianStep;
  j["params"] = cfg.params;
  return j;
}

PipelineConfig pipelineConfigFromJson(const nlohmann::json& j) {
  PipelineConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "mode") {
      const auto s = v.get<std::string>();
      if (s != "ML" && s != "REML") throw std::invalid_argument("mode must be ML or REML");
      c.mode = s == "ML" ? LikMode::ML : LikMode::REML;
    } else if (key == "alphas") c.alphas = v.get<std::vector<double>>();
    else if (key == "kappaFixed") c.kappaFixed = v.get<std::vector<double>>();
    else if (key == "kappaFixedAlphas") c.kappaFixedAlphas = v.get<std::vector<double>>();
    else if (key == "pointsPerContour") c.pointsPerContour = v.get<int>();
    else if (key == "pointsPerContourFixed") c.pointsPerContourFixed = v.get<int>();
    else if (key == "lambdaGridSize") c.lambdaGridSize = v.get<int>();
    else if (key == "batchSize") c.batchSize = v.get<std::size_t>();
    else if (key == "ciLevel") c.ciLevel = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "threads") c.threads = v.get<int>();
    else if (key == "precision") {
      const auto s = v.get<std::string>();
      if (s != "double" && s != "single") throw std::invalid_argument("precision must be double or single");
      c.precision = s == "double" ? Precision::Double : Precision::Single;
    } else if (key == "fixKappa") {
      if (!v.is_null()) c.fixKappa = v.get<double>();
    } else if (key == "fixLambda") {
      if (!v.is_null()) c.fixLambda = v.get<double>();
    } else if (key == "starts") c.starts = v.get<int>();
    else if (key == "hessianStep") c.hessianStep = v.get<double>();
    else if (key == "params") c.params = v.get<std::vector<std::string>>();
    else throw std::invalid_argument("unknown pipeline setting '" + key + "'");
  }
  return c;
}

RepresentativeSet assembleRepresentativeSet(const PipelineConfig& cfg, const QuadApprox& main,
                                            std::span<const QuadApprox> companions) {
  RepresentativeSet reps;
  reps.regime = main.regime;
  const double na = std::numeric_limits<double>::quiet_NaN();
  Provenance mleProv;
  mleProv.kind = Provenance::Kind::mle;
  mleProv.dim = main.dim();
  mleProv.kappa = main.fixedKappa.value_or(0.0);
  reps.add(main.center, na, mleProv);
  for (const auto& q : companions) {
    if (!q.fixedKappa) throw std::invalid_argument("companion approximations must hold the shape fixed");
    if (q.regime != main.regime) throw std::invalid_argument("companion uses a different shape regime");
    Provenance p;
    p.kind = Provenance::Kind::mle;
    p.dim = 4;
    p.kappa = *q.fixedKappa;
    reps.add(q.center, na, p);
  }
  const int mainPoints = main.fixedKappa ? cfg.pointsPerContourFixed : cfg.pointsPerContour;
  reps.append(contourPoints(main, cfg.alphas, mainPoints, cfg.seed, cfg.sphere));
  for (std::size_t i = 0; i < companions.size(); ++i) {
    reps.append(contourPoints(companions[i], cfg.kappaFixedAlphas, cfg.pointsPerContourFixed,
                              cfg.seed + 1000 * (i + 1), cfg.sphere));
  }
  return repairNugget(std::move(reps), cfg.seed + 7);
}

PipelineResult runSampling(const Dataset& d, const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!(cfg.ciLevel > 0.0 && cfg.ciLevel < 1.0)) throw std::invalid_argument("ciLevel must lie in (0, 1)");
  PipelineResult res;
  const EvaluateOptions eval = cfg.evaluateOptions();

  FitOptions fo;
  fo.mode = cfg.mode;
  fo.fixKappa = cfg.fixKappa;
  fo.fixLambda = cfg.fixLambda;
  fo.starts = cfg.starts;
  fo.evaluate = eval;
  res.fit = fitMLE(d, fo);
  const KappaRegime regime = res.fit.regime;

  if (!cfg.fixKappa) {
    for (double kv : cfg.kappaFixed) {
      FitOptions ko = fo;
      ko.fixKappa = kv;
      ko.regime = regime;
      ko.computeWald = false;
      ko.fixLambda = res.fit.lambdaFixed ? std::optional<double>(res.fit.lambdaHat) : std::nullopt;
      ko.init = res.fit.mleNatural.withKappa(kv);
      ko.starts = 1;
      res.kappaFits.push_back(fitMLE(d, ko));
    }
  }

  QuadApproxOptions qo;
  qo.step = cfg.hessianStep;
  qo.fixLambda = res.fit.lambdaFixed;
  qo.evaluate = eval;
  res.quad = likelihoodQuadApprox(d, res.fit.mleInternal, regime, cfg.fixKappa, res.fit.lambdaHat,
                                  cfg.mode, qo);

  for (const auto& kf : res.kappaFits) {
    res.kappaQuads.push_back(likelihoodQuadApprox(d, toInternal(kf.mleNatural, regime), regime,
                                                  kf.fixedKappa, kf.lambdaHat, cfg.mode, qo));
  }
  RepresentativeSet reps = assembleRepresentativeSet(cfg, res.quad, res.kappaQuads);
  reps.lambdaGrid = res.fit.lambdaFixed
                        ? std::vector<double>{res.fit.lambdaHat}
                        : lambdaGrid(res.fit.lambdaHat, res.quad.lambdaCurvature, cfg.lambdaGridSize);
  res.reps = std::move(reps);
  res.grid = evaluateBatch(d, res.reps.natural, res.reps.lambdaGrid, cfg.mode, eval);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

namespace {

constexpr int kMaxWiden = 6;

// Rebuilds a lattice-based profile on successively wider lattices while the
// interval stays open on either side.
template <typename Build>
ProfileCurve widenUntilClosed(double level, Build build) {
  for (int r = 0;; ++r) {
    ProfileCurve c = build(r);
    c.ci = likelihoodCI(c, level);
    if ((!c.ci.loOpen && !c.ci.hiOpen) || r == kMaxWiden) return c;
  }
}

}  // namespace

void buildProfiles(const Dataset& d, const PipelineConfig& cfg, PipelineResult& res) {
  const auto t0 = std::chrono::steady_clock::now();
  const int p = static_cast<int>(d.p());
  std::vector<ParamRef> wanted;
  if (cfg.params.empty()) {
    wanted = tableParams(p);
  } else {
    for (const auto& name : cfg.params) {
      const auto ref = parseParam(name, d.covariateNames);
      if (!ref) throw std::invalid_argument("unknown parameter '" + name + "'");
      wanted.push_back(*ref);
    }
  }
  const double reference = std::max(res.grid.logLik.maxCoeff(), res.fit.logLikAtMax);
  const auto wald = waldIntervals(res.fit, wanted, cfg.ciLevel);
  const KappaRegime regime = res.fit.regime;

  res.curves.clear();
  res.table.clear();
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    const ParamRef& ref = wanted[i];
    CiRow row;
    row.param = ref;
    row.name = paramName(ref, d.covariateNames);
    row.notation = paramNotation(ref);
    row.estimate = fittedValue(res.fit, ref);
    row.wald = ConfidenceInterval{cfg.ciLevel, CiMethod::wald, wald[i].lo, wald[i].hi, false, false};
    row.likelihood.level = cfg.ciLevel;
    try {
      std::optional<ProfileCurve> curve;
      switch (ref.kind) {
        case Param::beta: {
          double se = std::numeric_limits<double>::quiet_NaN();
          if (res.fit.wald) se = std::sqrt(res.fit.wald->betaCovariance(ref.index, ref.index));
          curve = widenUntilClosed(cfg.ciLevel, [&](int r) {
            const auto g = defaultBetaGrid(row.estimate, se * std::ldexp(1.0, r), 201 + 100 * r);
            return profileBeta(res.grid, ref.index, g, d.covariateNames, reference);
          });
          break;
        }
        case Param::sdSpatial:
          curve = widenUntilClosed(cfg.ciLevel, [&](int r) {
            const double factor = std::pow(4.0, r + 1);
            return profileSigma(res.grid, defaultSigmaGrid(res.fit.sigmaHat, 201 + 100 * r, factor),
                                reference);
          });
          break;
        case Param::sdNugget: {
          const double top = std::max(4.0 * row.estimate, res.fit.sigmaHat);
          curve = widenUntilClosed(cfg.ciLevel, [&](int r) {
            const int m = 201 + 100 * r;
            std::vector<double> g(static_cast<std::size_t>(m));
            for (int k = 0; k < m; ++k) g[k] = top * std::ldexp(1.0, r) * k / (m - 1);
            return profileSdNugget(res.grid, g, reference);
          });
          break;
        }
        case Param::boxcox:
          if (!res.fit.lambdaFixed) curve = profile1D(res.grid, ref, regime, Space::natural, reference);
          break;
        case Param::shape:
          if (!res.fit.fixedKappa) curve = profile1D(res.grid, ref, regime, Space::natural, reference);
          break;
        default:
          curve = profile1D(res.grid, ref, regime, Space::natural, reference);
          break;
      }
      if (curve) {
        curve->name = row.name;
        curve->ci = likelihoodCI(*curve, cfg.ciLevel);
        row.likelihood = curve->ci;
        res.curves.push_back(std::move(*curve));
      }
    } catch (const std::invalid_argument& e) {
      warn("no profile for " + row.name + ": " + e.what());
    }
    res.table.push_back(row);
  }
  res.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PipelineResult runPipeline(const Dataset& d, const PipelineConfig& cfg) {
  PipelineResult res = runSampling(d, cfg);
  buildProfiles(d, cfg, res);
  return res;
}

Surface2D pairSurface(const PipelineResult& res, const Dataset& d, const std::string& pair,
                      const Surface2DOptions& opts) {
  const auto comma = pair.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("pair must look like 'a,b'");
  const auto a = parseParam(pair.substr(0, comma), d.covariateNames);
  const auto b = parseParam(pair.substr(comma + 1), d.covariateNames);
  if (!a || !b) throw std::invalid_argument("unknown parameter in pair '" + pair + "'");
  const double reference = std::max(res.grid.logLik.maxCoeff(), res.fit.logLikAtMax);
  return profile2D(res.grid, *a, *b, res.fit.regime, opts, reference);
}

}  // namespace geoprof
