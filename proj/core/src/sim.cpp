#include "geoprof/sim.hpp"

#include "geoprof/batchlinalg.hpp"
#include "geoprof/distributions.hpp"
#include "geoprof/hull.hpp"
#include "geoprof/io.hpp"
#include "geoprof/matern.hpp"
#include "geoprof/warnings.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace geoprof {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// CSV whose header names an x and a y column; other columns are ignored.
Eigen::MatrixXd readCoords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open coordinate file: " + path);
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) {
      while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
      out.push_back(f);
    }
    return out;
  };
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty coordinate file: " + path);
  const auto header = split(line);
  const auto ix = std::find(header.begin(), header.end(), "x");
  const auto iy = std::find(header.begin(), header.end(), "y");
  if (ix == header.end() || iy == header.end())
    throw DataError("coordinate file needs x and y columns: " + path);
  const auto cx = static_cast<std::size_t>(ix - header.begin());
  const auto cy = static_cast<std::size_t>(iy - header.begin());
  std::vector<std::array<double, 2>> pts;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split(line);
    if (f.size() <= std::max(cx, cy)) throw DataError("short row in " + path);
    try {
      pts.push_back({std::stod(f[cx]), std::stod(f[cy])});
    } catch (const std::exception&) {
      throw DataError("cannot parse coordinates '" + line + "' in " + path);
    }
  }
  Eigen::MatrixXd c(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    c(static_cast<Eigen::Index>(i), 0) = pts[i][0];
    c(static_cast<Eigen::Index>(i), 1) = pts[i][1];
  }
  return c;
}

}  // namespace

void SimDesign::validate() const {
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (!coordsPath && n < 3) throw std::invalid_argument("design needs at least 3 locations");
  if (!(side > 0.0)) throw std::invalid_argument("domain side must be > 0");
  if (!(sigmaSq >= 0.0)) throw std::invalid_argument("sigma^2 must be >= 0");
  if (beta.size() != covariates.size() + 1)
    throw std::invalid_argument("beta needs one entry per covariate plus the intercept");
  for (const auto& c : covariates)
    if (c.source != 'x' && c.source != 'y') throw std::invalid_argument("covariate source must be x or y");
  if (!(ciLevel > 0.0 && ciLevel < 1.0)) throw std::invalid_argument("ciLevel must lie in (0, 1)");
}

SimDesign isotropicDesign() { return SimDesign{}; }

SimDesign anisotropicDesign() {
  SimDesign d;
  d.truth = NaturalParams(1000.0, 500.0, 0.2, 2.0, 0.64, 1.0);
  d.beta = {5.0, 1.0, 1.0};
  d.fixKappaAtTruth = false;
  return d;
}

nlohmann::json toJson(const SimDesign& d) {
  nlohmann::json covs = nlohmann::json::array();
  for (const auto& c : d.covariates)
    covs.push_back({{"name", c.name}, {"source", std::string(1, c.source)}, {"scale", c.scale}, {"power", c.power}});
  return {{"n", d.n},
          {"side", d.side},
          {"minSeparation", d.minSeparation},
          {"coordsPath", d.coordsPath ? nlohmann::json(*d.coordsPath) : nlohmann::json(nullptr)},
          {"truth",
           {{"phiX", d.truth.phiX()}, {"phiY", d.truth.phiY()}, {"phiA", d.truth.phiA()},
            {"kappa", d.truth.kappa()}, {"nuggetSq", d.truth.nuggetSq()}, {"lambda", d.truth.lambda()}}},
          {"sigmaSq", d.sigmaSq},
          {"beta", d.beta},
          {"covariates", covs},
          {"replicates", d.replicates},
          {"ciLevel", d.ciLevel},
          {"seed", d.seed},
          {"fixKappaAtTruth", d.fixKappaAtTruth},
          {"fixLambdaAtTruth", d.fixLambdaAtTruth}};
}

SimDesign simDesignFromJson(const nlohmann::json& j) {
  SimDesign d;
  for (const auto& [key, v] : j.items()) {
    if (key == "n") d.n = v.get<int>();
    else if (key == "side") d.side = v.get<double>();
    else if (key == "minSeparation") d.minSeparation = v.get<double>();
    else if (key == "coordsPath") {
      if (!v.is_null()) d.coordsPath = v.get<std::string>();
    } else if (key == "truth") {
      const double phiX = v.value("phiX", d.truth.phiX());
      d.truth = NaturalParams(phiX, v.value("phiY", phiX), v.value("phiA", 0.0),
                              v.value("kappa", d.truth.kappa()), v.value("nuggetSq", d.truth.nuggetSq()),
                              v.value("lambda", 1.0));
    } else if (key == "sigmaSq") d.sigmaSq = v.get<double>();
    else if (key == "beta") d.beta = v.get<std::vector<double>>();
    else if (key == "covariates") {
      d.covariates.clear();
      for (const auto& c : v) {
        CovariateRule r;
        r.name = c.at("name").get<std::string>();
        const auto src = c.value("source", std::string("x"));
        if (src.size() != 1) throw std::invalid_argument("covariate source must be x or y");
        r.source = src[0];
        r.scale = c.value("scale", 1.0);
        r.power = c.value("power", 1);
        d.covariates.push_back(r);
      }
    } else if (key == "replicates") d.replicates = v.get<int>();
    else if (key == "ciLevel") d.ciLevel = v.get<double>();
    else if (key == "seed") d.seed = v.get<std::uint64_t>();
    else if (key == "fixKappaAtTruth") d.fixKappaAtTruth = v.get<bool>();
    else if (key == "fixLambdaAtTruth") d.fixLambdaAtTruth = v.get<bool>();
    else throw std::invalid_argument("unknown design setting '" + key + "'");
  }
  d.validate();
  return d;
}

Eigen::MatrixXd generateCoords(int n, double side, double minDist, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, side);
  Eigen::MatrixXd c(n, 2);
  int have = 0;
  long attempts = 0;
  while (have < n) {
    if (++attempts > 1000L * n) throw std::runtime_error("cannot place points with the requested separation");
    const double x = u(rng), y = u(rng);
    bool ok = true;
    for (int i = 0; i < have && ok; ++i)
      ok = std::hypot(c(i, 0) - x, c(i, 1) - y) >= minDist;
    if (!ok) continue;
    c(have, 0) = x;
    c(have, 1) = y;
    ++have;
  }
  return c;
}

Dataset designDataset(const SimDesign& design) {
  design.validate();
  Dataset d;
  d.coords = design.coordsPath ? readCoords(*design.coordsPath)
                               : generateCoords(design.n, design.side, design.minSeparation * design.side,
                                                design.seed);
  const Eigen::Index n = d.coords.rows();
  const auto p = static_cast<Eigen::Index>(design.covariates.size() + 1);
  d.X.resize(n, p);
  d.X.col(0).setOnes();
  d.covariateNames = {"(Intercept)"};
  for (std::size_t c = 0; c < design.covariates.size(); ++c) {
    const auto& rule = design.covariates[c];
    const Eigen::Index col = rule.source == 'x' ? 0 : 1;
    for (Eigen::Index i = 0; i < n; ++i)
      d.X(i, static_cast<Eigen::Index>(c) + 1) = std::pow(d.coords(i, col) / rule.scale, rule.power);
    d.covariateNames.push_back(rule.name);
  }
  d.y = Eigen::VectorXd::Zero(n);
  return d;
}

Dataset simulateGRF(const SimDesign& design, int replicate) {
  Dataset d = designDataset(design);
  const Eigen::Index n = d.n();
  const Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(design.beta.data(),
                                                                 static_cast<Eigen::Index>(design.beta.size()));
  Eigen::VectorXd z = d.X * beta;
  if (design.sigmaSq > 0.0) {
    MatrixBatch<double> V(1, static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    const NaturalParams omega = design.truth.withLambda(1.0);
    maternBatch<double>(d.coords, std::span<const NaturalParams>(&omega, 1), V);
    const auto f = cholBatch<double>(std::move(V));
    if (f.status[0] != SetStatus::ok)
      throw std::runtime_error(std::string("true covariance is not positive definite (") +
                               toString(f.status[0]) + ")");
    std::mt19937_64 rng(splitmix(design.seed ^ splitmix(static_cast<std::uint64_t>(replicate) + 1)));
    std::normal_distribution<double> normal;
    Eigen::VectorXd e(n);
    for (Eigen::Index i = 0; i < n; ++i)
      e[i] = normal(rng) * std::sqrt(design.sigmaSq * f.D[static_cast<std::size_t>(i)]);
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = e[i];
      for (Eigen::Index j = 0; j < i; ++j) acc += f.L(0, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) * e[j];
      z[i] += acc;
    }
  }
  const double lambda = design.truth.lambda();
  d.y = lambda == 1.0 ? Eigen::VectorXd(z.array() + 1.0) : boxcoxInverse(z, lambda);
  return d;
}

double CoverageRow::likelihoodCoverage() const {
  return likelihoodCount ? static_cast<double>(likelihoodHits) / likelihoodCount : std::nan("");
}
double CoverageRow::waldCoverage() const {
  return waldCount ? static_cast<double>(waldHits) / waldCount : std::nan("");
}
double CoverageRow::likelihoodMeanWidth() const {
  return likelihoodWidthCount ? likelihoodWidthSum / likelihoodWidthCount : std::nan("");
}
double CoverageRow::waldMeanWidth() const {
  return waldCount ? waldWidthSum / waldCount : std::nan("");
}

CoverageReport runCoverage(const SimDesign& design, PipelineConfig cfg, const CoverageProgress& progress) {
  design.validate();
  const auto t0 = std::chrono::steady_clock::now();
  cfg.ciLevel = design.ciLevel;
  if (design.fixKappaAtTruth) cfg.fixKappa = design.truth.kappa();
  if (design.fixLambdaAtTruth) cfg.fixLambda = design.truth.lambda();

  const Dataset shape = designDataset(design);
  const InternalParams truthInternal = toInternal(design.truth, KappaRegime::log);
  std::vector<ParamRef> params;
  std::vector<double> truth;
  for (int a = 0; a < static_cast<int>(design.beta.size()); ++a) {
    params.push_back({Param::beta, a});
    truth.push_back(design.beta[static_cast<std::size_t>(a)]);
  }
  const std::pair<Param, double> corr[] = {
      {Param::combinedRange, design.truth.combinedRange()}, {Param::shape, design.truth.kappa()},
      {Param::nugget, design.truth.nuggetSq()},             {Param::aniso1, truthInternal.gamma2},
      {Param::aniso2, truthInternal.gamma3},                {Param::boxcox, design.truth.lambda()}};
  for (const auto& [k, v] : corr) {
    params.push_back({k, 0});
    truth.push_back(v);
  }
  cfg.params.clear();
  for (const auto& p : params) cfg.params.push_back(paramName(p, shape.covariateNames));

  CoverageReport report;
  report.level = design.ciLevel;
  report.replicates = design.replicates;
  for (std::size_t i = 0; i < params.size(); ++i)
    report.rows.push_back({paramName(params[i], shape.covariateNames), truth[i]});
  const double regionThreshold = -0.5 * chisqQuantile(design.ciLevel, 2.0);
  const bool anisoFree = true;

  struct Outcome {
    bool ok = false;
    std::string error;
    std::vector<CiRow> table;
    std::optional<bool> regionHit;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(design.replicates));
  const int outer = cfg.threads > 1 ? cfg.threads : 1;
  PipelineConfig inner = cfg;
  if (outer > 1) inner.threads = 1;

#pragma omp parallel for schedule(dynamic) num_threads(outer)
  for (int r = 0; r < design.replicates; ++r) {
    Outcome& out = outcomes[static_cast<std::size_t>(r)];
    try {
      const Dataset d = simulateGRF(design, r);
      PipelineConfig c = inner;
      c.seed = splitmix(cfg.seed + static_cast<std::uint64_t>(r));
      const PipelineResult res = runPipeline(d, c);
      out.table = res.table;
      if (anisoFree) {
        std::vector<double> gx, gy, gz;
        const double ref = std::max(res.grid.logLik.maxCoeff(), res.fit.logLikAtMax);
        for (std::size_t k = 0; k < res.grid.K(); ++k) {
          const double v = res.grid.bestOverLambda(k);
          if (!std::isfinite(v)) continue;
          const auto in = toInternal(res.grid.omegaSets[k], res.fit.regime);
          gx.push_back(in.gamma2);
          gy.push_back(in.gamma3);
          gz.push_back(v - ref);
        }
        try {
          const UpperHull2D hull(gx, gy, gz);
          const auto v = hull(truthInternal.gamma2, truthInternal.gamma3);
          out.regionHit = v && *v >= regionThreshold;
        } catch (const std::invalid_argument&) {
        }
      }
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    if (progress) {
#pragma omp critical(coverage_progress)
      progress(r, out.ok);
    }
  }

  for (int r = 0; r < design.replicates; ++r) {
    const Outcome& out = outcomes[static_cast<std::size_t>(r)];
    if (!out.ok) {
      report.failures.emplace_back(r, out.error);
      warn("replicate " + std::to_string(r) + " failed: " + out.error);
      continue;
    }
    if (out.regionHit) {
      ++report.regionCount;
      if (*out.regionHit) ++report.regionHits;
    }
    for (std::size_t i = 0; i < params.size() && i < out.table.size(); ++i) {
      CoverageRow& row = report.rows[i];
      const CiRow& ci = out.table[i];
      const auto& L = ci.likelihood;
      if (L.lo && L.hi) {
        const double lo = L.loOpen ? -std::numeric_limits<double>::infinity() : *L.lo;
        const double hi = L.hiOpen ? std::numeric_limits<double>::infinity() : *L.hi;
        ++row.likelihoodCount;
        if (lo <= row.truth && row.truth <= hi) ++row.likelihoodHits;
        if (!L.loOpen && !L.hiOpen) {
          row.likelihoodWidthSum += *L.hi - *L.lo;
          ++row.likelihoodWidthCount;
        }
      }
      const auto& W = ci.wald;
      if (W.lo && W.hi) {
        ++row.waldCount;
        if (*W.lo <= row.truth && row.truth <= *W.hi) ++row.waldHits;
        row.waldWidthSum += *W.hi - *W.lo;
      }
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void writeCoverageCsv(const CoverageReport& r, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "parameter,truth,likelihood_coverage,wald_coverage,likelihood_meanWidth,wald_meanWidth,"
        "likelihood_n,wald_n\n";
  for (const auto& row : r.rows) {
    os << row.name << ',' << formatDouble(row.truth) << ',' << formatDouble(row.likelihoodCoverage())
       << ',' << formatDouble(row.waldCoverage()) << ',' << formatDouble(row.likelihoodMeanWidth())
       << ',' << formatDouble(row.waldMeanWidth()) << ',' << row.likelihoodCount << ','
       << row.waldCount << '\n';
  }
}

nlohmann::json toJson(const CoverageReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"parameter", row.name},
                    {"truth", row.truth},
                    {"likelihood", {{"coverage", num(row.likelihoodCoverage())},
                                    {"hits", row.likelihoodHits},
                                    {"n", row.likelihoodCount},
                                    {"meanWidth", num(row.likelihoodMeanWidth())},
                                    {"closedIntervals", row.likelihoodWidthCount}}},
                    {"wald", {{"coverage", num(row.waldCoverage())},
                              {"hits", row.waldHits},
                              {"n", row.waldCount},
                              {"meanWidth", num(row.waldMeanWidth())}}}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& [rep, msg] : r.failures) failures.push_back({{"replicate", rep}, {"error", msg}});
  return {{"level", r.level},
          {"replicates", r.replicates},
          {"rows", rows},
          {"failures", failures},
          {"region2d", {{"parameters", {"aniso1", "aniso2"}},
                        {"hits", r.regionHits},
                        {"n", r.regionCount},
                        {"coverage", r.regionCount ? nlohmann::json(static_cast<double>(r.regionHits) / r.regionCount)
                                                   : nlohmann::json(nullptr)}}},
          {"seconds", r.seconds}};
}

}  // namespace geoprof
