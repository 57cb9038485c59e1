// geoprof: fit, profile, simulate and coverage subcommands.

#include "geoprof/io.hpp"
#include "geoprof/mle.hpp"
#include "geoprof/model.hpp"
#include "geoprof/pipeline.hpp"
#include "geoprof/sim.hpp"
#include "geoprof/warnings.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using geoprof::PipelineConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitUsage = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string out = "geoprof-out";
  int threads = 0;
  std::uint64_t seed = PipelineConfig{}.seed;
};

struct DataArgs {
  std::string path;
  std::vector<std::string> covariates;
};

struct ModelArgs {
  bool reml = false;
  std::optional<double> fixKappa;
  std::optional<double> fixLambda;
  int starts = 3;
};

struct ProfileArgs {
  PipelineConfig cfg;
  std::vector<std::string> pairs;
  int surfaceGrid = 101;
  std::string precision = "double";
};

struct SimArgs {
  std::string designPath;
  std::optional<int> replicates;
  std::optional<double> ciLevel;
  std::optional<std::uint64_t> designSeed;
};

std::string isoTimestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Manifest {
 public:
  Manifest(std::string command, int argc, char** argv)
      : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["argv"] = std::vector<std::string>(argv, argv + argc);
    j_["startedAt"] = isoTimestamp();
    j_["versions"] = {{"geoprof", GEOPROF_VERSION},
                      {"compiler", __VERSION__},
                      {"cli11", CLI11_VERSION},
                      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    j_["outputs"] = nlohmann::json::array();
  }

  nlohmann::json& operator[](const std::string& key) { return j_[key]; }
  void output(const fs::path& p) { j_["outputs"].push_back(p.filename().string()); }

  void write(const fs::path& dir, int exitCode) {
    j_["exitCode"] = exitCode;
    j_["wallSeconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    geoprof::writeJson(j_, (dir / "run.json").string());
  }

 private:
  nlohmann::json j_;
  std::chrono::steady_clock::time_point start_;
};

geoprof::Dataset loadData(const DataArgs& a) {
  if (!fs::exists(a.path)) throw geoprof::DataError("data file not found: " + a.path);
  auto d = geoprof::readDatasetCsv(a.path, a.covariates);
  geoprof::validateDataset(d, {false});
  return d;
}

fs::path prepareDir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

std::string fileSafe(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return s;
}

void addCommon(CLI::App* sub, Common& c) {
  sub->add_option("-o,--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads (0: OpenMP default)")->capture_default_str();
  sub->add_option("--seed", c.seed, "Master random seed")->capture_default_str();
}

void addData(CLI::App* sub, DataArgs& a) {
  sub->add_option("-d,--data", a.path, "CSV with columns x,y,response and covariates")->required();
  sub->add_option("--covariates", a.covariates,
                  "Covariate columns to use (default: all columns after response)")
      ->delimiter(',');
}

void addModel(CLI::App* sub, ModelArgs& m) {
  sub->add_flag("--reml", m.reml, "Use the restricted likelihood");
  sub->add_option("--fix-kappa", m.fixKappa, "Hold the Matern shape fixed");
  sub->add_option("--fix-lambda", m.fixLambda, "Hold the Box-Cox exponent fixed");
  sub->add_option("--starts", m.starts, "Optimizer starting points (1-3)")->capture_default_str();
}

void addPipeline(CLI::App* sub, ProfileArgs& p) {
  auto& c = p.cfg;
  sub->add_option("--alphas", c.alphas, "Contour levels alpha")->delimiter(',');
  sub->add_option("--kappa-fixed", c.kappaFixed, "Shapes of the companion fits")->delimiter(',');
  sub->add_option("--kappa-fixed-alphas", c.kappaFixedAlphas, "Contour levels for companion fits")
      ->delimiter(',');
  sub->add_option("--points", c.pointsPerContour, "Points per 5-dimensional contour")->capture_default_str();
  sub->add_option("--points-fixed", c.pointsPerContourFixed, "Points per 4-dimensional contour")
      ->capture_default_str();
  sub->add_option("--lambda-grid", c.lambdaGridSize, "Box-Cox grid size")->capture_default_str();
  sub->add_option("--batch-size", c.batchSize, "Parameter sets per likelihood wave")->capture_default_str();
  sub->add_option("--ci-level", c.ciLevel, "Confidence level")->capture_default_str();
  sub->add_option("--precision", p.precision, "double or single")
      ->check(CLI::IsMember({"double", "single"}))
      ->capture_default_str();
}

void applyModel(const ModelArgs& m, const Common& c, PipelineConfig& cfg) {
  cfg.mode = m.reml ? geoprof::LikMode::REML : geoprof::LikMode::ML;
  cfg.fixKappa = m.fixKappa;
  cfg.fixLambda = m.fixLambda;
  cfg.starts = m.starts;
  cfg.threads = c.threads;
  cfg.seed = c.seed;
}

int cmdFit(const DataArgs& data, const ModelArgs& model, const Common& common, Manifest& man) {
  const fs::path dir = prepareDir(common.out);
  const auto d = loadData(data);
  geoprof::FitOptions fo;
  fo.mode = model.reml ? geoprof::LikMode::REML : geoprof::LikMode::ML;
  fo.fixKappa = model.fixKappa;
  fo.fixLambda = model.fixLambda;
  fo.starts = model.starts;
  fo.evaluate.threads = common.threads;
  man["config"] = {{"data", data.path},
                   {"covariates", d.covariateNames},
                   {"mode", geoprof::toString(fo.mode)},
                   {"fixKappa", model.fixKappa ? nlohmann::json(*model.fixKappa) : nlohmann::json(nullptr)},
                   {"fixLambda", model.fixLambda ? nlohmann::json(*model.fixLambda) : nlohmann::json(nullptr)},
                   {"starts", model.starts},
                   {"threads", common.threads}};
  man["seeds"] = nlohmann::json::object();

  geoprof::FitResult fit;
  try {
    fit = geoprof::fitMLE(d, fo);
  } catch (const geoprof::FitError& e) {
    if (e.partial()) geoprof::writeJson(geoprof::toJson(*e.partial()), (dir / "fit.json").string());
    std::cerr << "error: " << e.what() << '\n';
    return kExitConvergence;
  }
  geoprof::writeJson(geoprof::toJson(fit), (dir / "fit.json").string());
  man.output(dir / "fit.json");

  const auto params = geoprof::tableParams(static_cast<int>(d.p()));
  const auto wald = geoprof::waldIntervals(fit, params, 0.9);
  std::ofstream txt(dir / "fit.txt");
  txt << "mode " << geoprof::toString(fit.mode) << ", log-likelihood " << fit.logLikAtMax << ", "
      << geoprof::toString(fit.convergence) << " after " << fit.iterations << " iterations\n\n";
  for (const auto& w : wald) {
    txt << paramName(w.param, d.covariateNames) << '\t' << w.estimate << "\t90% Wald ["
        << (w.lo ? geoprof::formatDouble(*w.lo) : "NA") << ", "
        << (w.hi ? geoprof::formatDouble(*w.hi) : "NA") << "]\n";
  }
  man.output(dir / "fit.txt");
  std::cout << "log-likelihood " << fit.logLikAtMax << " (" << geoprof::toString(fit.convergence)
            << "), results in " << dir.string() << '\n';
  return fit.convergence == geoprof::Convergence::maxIter ? kExitConvergence : kExitOk;
}

int cmdProfile(const DataArgs& data, const ModelArgs& model, ProfileArgs& pa, const Common& common,
               std::vector<std::string> params, Manifest& man) {
  const auto d = loadData(data);
  PipelineConfig cfg = pa.cfg;
  applyModel(model, common, cfg);
  cfg.precision = pa.precision == "single" ? geoprof::Precision::Single : geoprof::Precision::Double;
  for (const auto& name : params) {
    if (!geoprof::parseParam(name, d.covariateNames)) {
      std::string valid;
      for (const auto& v : geoprof::validParamNames(d.covariateNames)) valid += " " + v;
      throw UsageError("unknown parameter '" + name + "'; valid names:" + valid);
    }
  }
  for (const auto& pair : pa.pairs) {
    const auto comma = pair.find(',');
    if (comma == std::string::npos || !geoprof::parseParam(pair.substr(0, comma), d.covariateNames) ||
        !geoprof::parseParam(pair.substr(comma + 1), d.covariateNames)) {
      std::string valid;
      for (const auto& v : geoprof::validParamNames(d.covariateNames)) valid += " " + v;
      throw UsageError("bad pair '" + pair + "'; use name,name with names from:" + valid);
    }
  }
  cfg.params = params;
  const fs::path dir = prepareDir(common.out);
  man["config"] = geoprof::toJson(cfg);
  man["config"]["data"] = data.path;
  man["config"]["covariates"] = d.covariateNames;
  man["config"]["pairs"] = pa.pairs;
  man["seeds"] = {{"sampling", cfg.seed}, {"nuggetRepair", cfg.seed + 7}};

  geoprof::PipelineResult res;
  try {
    res = geoprof::runPipeline(d, cfg);
  } catch (const geoprof::FitError& e) {
    if (e.partial()) geoprof::writeJson(geoprof::toJson(*e.partial()), (dir / "fit.json").string());
    std::cerr << "error: " << e.what() << '\n';
    return kExitConvergence;
  }

  geoprof::writeJson(geoprof::toJson(res.fit), (dir / "fit.json").string());
  man.output(dir / "fit.json");
  nlohmann::json companions = nlohmann::json::array();
  for (const auto& kf : res.kappaFits) companions.push_back(geoprof::toJson(kf));
  geoprof::writeJson(companions, (dir / "fit_kappa_fixed.json").string());
  man.output(dir / "fit_kappa_fixed.json");
  geoprof::writeRepresentativeSetCsv(res.reps, (dir / "representative_points.csv").string());
  man.output(dir / "representative_points.csv");

  const fs::path curves = dir / "curves";
  fs::create_directories(curves);
  for (const auto& c : res.curves) {
    geoprof::writeCurveCsv(c, (curves / (fileSafe(c.name) + ".csv")).string());
  }
  man["outputs"].push_back("curves/");
  geoprof::writeCiTableCsv(res.table, (dir / "ci_table.csv").string());
  man.output(dir / "ci_table.csv");
  const std::string table = geoprof::formatCiTable(res.table);
  std::ofstream(dir / "ci_table.txt") << table;
  man.output(dir / "ci_table.txt");

  geoprof::Surface2DOptions so;
  so.gridSize = pa.surfaceGrid;
  for (const auto& pair : pa.pairs) {
    const auto s = geoprof::pairSurface(res, d, pair, so);
    const std::string stem = fileSafe(pair);
    geoprof::writeSurfaceCsv(s, (dir / ("surface_" + stem + ".csv")).string(), d.covariateNames);
    geoprof::writeContoursCsv(s, (dir / ("contours_" + stem + ".csv")).string());
    man.output(dir / ("surface_" + stem + ".csv"));
    man.output(dir / ("contours_" + stem + ".csv"));
  }
  man["representativePoints"] = res.reps.size();
  man["lambdaGrid"] = res.reps.lambdaGrid;
  std::cout << table << "\n" << res.reps.size() << " parameter sets x " << res.reps.lambdaGrid.size()
            << " Box-Cox values in " << res.seconds << " s; results in " << dir.string() << '\n';
  return res.fit.convergence == geoprof::Convergence::maxIter ? kExitConvergence : kExitOk;
}

geoprof::SimDesign loadDesign(const SimArgs& s, const Common& c) {
  geoprof::SimDesign design = geoprof::isotropicDesign();
  if (!s.designPath.empty()) design = geoprof::simDesignFromJson(geoprof::readJson(s.designPath));
  if (s.replicates) design.replicates = *s.replicates;
  if (s.ciLevel) design.ciLevel = *s.ciLevel;
  design.seed = s.designSeed.value_or(c.seed);
  design.validate();
  return design;
}

int cmdSimulate(const SimArgs& s, const Common& c, Manifest& man) {
  const auto design = loadDesign(s, c);
  const fs::path dir = prepareDir(c.out);
  man["config"] = geoprof::toJson(design);
  man["seeds"] = {{"design", design.seed}};
  geoprof::writeJson(geoprof::toJson(design), (dir / "design.json").string());
  man.output(dir / "design.json");
  for (int r = 0; r < design.replicates; ++r) {
    const auto d = geoprof::simulateGRF(design, r);
    char name[32];
    std::snprintf(name, sizeof name, "replicate_%04d.csv", r + 1);
    geoprof::writeDatasetCsv(d, (dir / name).string());
    man.output(dir / name);
  }
  std::cout << design.replicates << " datasets written to " << dir.string() << '\n';
  return kExitOk;
}

int cmdCoverage(const SimArgs& s, ProfileArgs& pa, const Common& c, Manifest& man) {
  const auto design = loadDesign(s, c);
  PipelineConfig cfg = pa.cfg;
  cfg.threads = c.threads;
  cfg.seed = c.seed;
  cfg.precision = pa.precision == "single" ? geoprof::Precision::Single : geoprof::Precision::Double;
  const fs::path dir = prepareDir(c.out);
  man["config"] = {{"design", geoprof::toJson(design)}, {"pipeline", geoprof::toJson(cfg)}};
  man["seeds"] = {{"design", design.seed}, {"pipeline", cfg.seed}};
  const auto report = geoprof::runCoverage(design, cfg, [&](int r, bool ok) {
    std::cerr << "replicate " << r + 1 << "/" << design.replicates << (ok ? "" : " failed") << '\n';
  });
  geoprof::writeCoverageCsv(report, (dir / "coverage.csv").string());
  geoprof::writeJson(geoprof::toJson(report), (dir / "coverage.json").string());
  man.output(dir / "coverage.csv");
  man.output(dir / "coverage.json");
  std::cout << "coverage of " << report.replicates - static_cast<int>(report.failures.size()) << "/"
            << report.replicates << " replicates written to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Profile likelihood inference for linear geostatistical models"};
  app.set_version_flag("--version", GEOPROF_VERSION);
  app.set_config("--config", "", "TOML/INI file with option values (flags take precedence)");
  app.require_subcommand(1);

  Common common;
  DataArgs data;
  ModelArgs model;
  ProfileArgs prof;
  SimArgs sim;
  std::vector<std::string> params;
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");
  app.fallthrough();

  auto* fit = app.add_subcommand("fit", "Maximum likelihood fit");
  addData(fit, data);
  addModel(fit, model);
  addCommon(fit, common);

  auto* profile = app.add_subcommand("profile", "Profile likelihood curves and confidence intervals");
  addData(profile, data);
  addModel(profile, model);
  addCommon(profile, common);
  addPipeline(profile, prof);
  profile->add_option("--params", params, "Parameters to profile (default: every table row)")
      ->delimiter(',');
  profile->add_option("--pairs", prof.pairs, "2-D surfaces, each as name,name (repeatable)");
  profile->add_option("--surface-grid", prof.surfaceGrid, "Lattice points per side of 2-D surfaces")
      ->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Simulate datasets from a design");
  simulate->add_option("--design", sim.designPath, "Design JSON (default: isotropic design)");
  simulate->add_option("--replicates", sim.replicates, "Number of datasets");
  simulate->add_option("--design-seed", sim.designSeed, "Seed for coordinates and draws (default: --seed)");
  addCommon(simulate, common);

  auto* coverage = app.add_subcommand("coverage", "Confidence interval coverage study");
  coverage->add_option("--design", sim.designPath, "Design JSON (default: isotropic design)");
  coverage->add_option("--replicates", sim.replicates, "Number of replicates");
  coverage->add_option("--design-seed", sim.designSeed, "Seed for coordinates and draws (default: --seed)");
  addCommon(coverage, common);
  addPipeline(coverage, prof);
  coverage->add_option("--level", sim.ciLevel, "Confidence level of the scored intervals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (quiet) geoprof::setWarningHandler({});

  const CLI::App* chosen = app.get_subcommands().front();
  Manifest man(chosen->get_name(), argc, argv);
  int code = kExitOk;
  try {
    if (chosen == fit) code = cmdFit(data, model, common, man);
    else if (chosen == profile) code = cmdProfile(data, model, prof, common, params, man);
    else if (chosen == simulate) code = cmdSimulate(sim, common, man);
    else code = cmdCoverage(sim, prof, common, man);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const geoprof::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = kExitInput;
  } catch (const geoprof::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = kExitInput;
  }
  try {
    if (fs::exists(common.out)) man.write(common.out, code);
  } catch (const std::exception& e) {
    std::cerr << "warning: could not write run.json: " << e.what() << '\n';
  }
  return code;
}
