#include "geoprof/model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace geoprof {

namespace {

constexpr double kLambdaLogBranch = 1e-10;

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    auto first = field.find_first_not_of(" \t\r\"");
    auto last = field.find_last_not_of(" \t\r\"");
    out.push_back(first == std::string::npos ? std::string{}
                                             : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parseField(const std::string& s, size_t row, const std::string& column) {
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan") {
    throw DataError("missing value in row " + std::to_string(row) + ", column '" + column + "'");
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DataError("cannot parse '" + s + "' in row " + std::to_string(row) + ", column '" +
                    column + "'");
  }
  return v;
}

}  // namespace

double wrapAngleHalfPi(double angle) {
  constexpr double pi = std::numbers::pi;
  double a = std::fmod(angle, pi);  // (-pi, pi)
  if (a <= -pi / 2) a += pi;
  if (a > pi / 2) a -= pi;
  return a;
}

NaturalParams::NaturalParams(double phiX, double phiY, double phiA, double kappa,
                             double nuggetSq, double lambda)
    : phiX_(phiX), phiY_(phiY), phiA_(phiA), kappa_(kappa), nuggetSq_(nuggetSq),
      lambda_(lambda) {
  if (!(phiX > 0.0) || !(phiY > 0.0)) throw std::invalid_argument("range parameters must be > 0");
  if (!(kappa > 0.0)) throw std::invalid_argument("Matern shape must be > 0");
  if (!(nuggetSq >= 0.0)) throw std::invalid_argument("nugget must be >= 0");
  if (!std::isfinite(phiA) || !std::isfinite(lambda))
    throw std::invalid_argument("angle and Box-Cox parameter must be finite");
  if (phiX_ < phiY_) {
    std::swap(phiX_, phiY_);
    phiA_ += std::numbers::pi / 2;
  }
  phiA_ = wrapAngleHalfPi(phiA_);
}

double NaturalParams::combinedRange() const { return std::sqrt(phiX_ * phiY_); }

NaturalParams NaturalParams::withLambda(double lambda) const {
  NaturalParams p = *this;
  p.lambda_ = lambda;
  return p;
}

NaturalParams NaturalParams::withKappa(double kappa) const {
  return {phiX_, phiY_, phiA_, kappa, nuggetSq_, lambda_};
}

NaturalParams NaturalParams::withNuggetSq(double nuggetSq) const {
  return {phiX_, phiY_, phiA_, kappa_, nuggetSq, lambda_};
}

Eigen::VectorXd boxcoxTransform(std::span<const double> y, double lambda) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(y.size()));
  const bool logBranch = std::abs(lambda) < kLambdaLogBranch;
  for (size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) {
      throw DomainError("Box-Cox transform needs positive responses; element " +
                        std::to_string(i) + " is " + std::to_string(y[i]));
    }
    out[static_cast<Eigen::Index>(i)] =
        logBranch ? std::log(y[i]) : std::expm1(lambda * std::log(y[i])) / lambda;
  }
  return out;
}

Eigen::VectorXd boxcoxInverse(const Eigen::VectorXd& z, double lambda) {
  if (std::abs(lambda) < kLambdaLogBranch) return z.array().exp();
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double base = lambda * z[i] + 1.0;
    if (!(base > 0.0)) {
      throw DomainError("inverse Box-Cox undefined for element " + std::to_string(i));
    }
    out[i] = std::exp(std::log1p(lambda * z[i]) / lambda);
  }
  return out;
}

double sumLogResponse(std::span<const double> y) {
  double s = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) {
      throw DomainError("log of non-positive response at element " + std::to_string(i));
    }
    s += std::log(y[i]);
  }
  return s;
}

double boxcoxJacobianLog(std::span<const double> y, double lambda) {
  return (lambda - 1.0) * sumLogResponse(y);
}

void validateDataset(const Dataset& d, ValidationOptions opts) {
  const Eigen::Index n = d.n();
  const Eigen::Index p = d.p();
  if (d.coords.rows() != n || d.coords.cols() != 2)
    throw DataError("coordinates must be an n x 2 matrix");
  if (d.X.rows() != n) throw DataError("design matrix has a different row count than y");
  if (n < p + 2)
    throw DataError("need at least p + 2 observations (n = " + std::to_string(n) +
                    ", p = " + std::to_string(p) + ")");
  if (!d.covariateNames.empty() && static_cast<Eigen::Index>(d.covariateNames.size()) != p)
    throw DataError("covariate name count does not match design columns");

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!d.coords.row(i).allFinite() || !std::isfinite(d.y[i]) || !d.X.row(i).allFinite())
      throw DataError("non-finite value in row " + std::to_string(i));
    if (opts.requirePositiveResponse && !(d.y[i] > 0.0))
      throw DataError("non-positive response at row " + std::to_string(i));
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if ((d.coords.row(i) - d.coords.row(j)).squaredNorm() == 0.0) {
        throw DataError("duplicate location at rows " + std::to_string(i) + " and " +
                        std::to_string(j));
      }
    }
  }

  if (p > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.X);
    qr.setThreshold(1e-10);
    if (qr.rank() < p)
      throw DataError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                      " < " + std::to_string(p) + ")");
  }
}

Dataset readDatasetCsv(const std::string& path, const std::vector<std::string>& covariates) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty data file: " + path);
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  const auto header = splitCsvLine(line);
  if (header.size() < 3 || header[0] != "x" || header[1] != "y" || header[2] != "response") {
    throw DataError("header must start with x,y,response in " + path);
  }

  std::vector<size_t> covCols;
  std::vector<std::string> covNames{"(Intercept)"};
  if (covariates.empty()) {
    for (size_t c = 3; c < header.size(); ++c) {
      covCols.push_back(c);
      covNames.push_back(header[c]);
    }
  } else {
    for (const auto& name : covariates) {
      auto it = std::find(header.begin() + 3, header.end(), name);
      if (it == header.end()) throw DataError("covariate '" + name + "' not found in " + path);
      covCols.push_back(static_cast<size_t>(it - header.begin()));
      covNames.push_back(name);
    }
  }

  std::vector<std::array<double, 3>> base;
  std::vector<std::vector<double>> cov;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = splitCsvLine(line);
    if (f.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    base.push_back({parseField(f[0], row, "x"), parseField(f[1], row, "y"),
                    parseField(f[2], row, "response")});
    std::vector<double> c;
    c.reserve(covCols.size());
    for (size_t col : covCols) c.push_back(parseField(f[col], row, header[col]));
    cov.push_back(std::move(c));
  }

  const auto n = static_cast<Eigen::Index>(base.size());
  const auto p = static_cast<Eigen::Index>(covCols.size() + 1);
  Dataset d;
  d.coords.resize(n, 2);
  d.y.resize(n);
  d.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.coords(i, 0) = base[static_cast<size_t>(i)][0];
    d.coords(i, 1) = base[static_cast<size_t>(i)][1];
    d.y[i] = base[static_cast<size_t>(i)][2];
    d.X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) d.X(i, j) = cov[static_cast<size_t>(i)][static_cast<size_t>(j - 1)];
  }
  d.covariateNames = std::move(covNames);
  return d;
}

void writeDatasetCsv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "x,y,response";
  // the intercept is implicit in the file format
  for (Eigen::Index j = 1; j < d.p(); ++j) {
    const std::string name = static_cast<size_t>(j) < d.covariateNames.size()
                                 ? d.covariateNames[static_cast<size_t>(j)]
                                 : "x" + std::to_string(j);
    out << ',' << name;
  }
  out << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    out << d.coords(i, 0) << ',' << d.coords(i, 1) << ',' << d.y[i];
    for (Eigen::Index j = 1; j < d.p(); ++j) out << ',' << d.X(i, j);
    out << '\n';
  }
}

}  // namespace geoprof
