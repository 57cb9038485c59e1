#include "geoprof/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace geoprof {
namespace {

std::ofstream openOut(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

std::string csvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string formatDouble(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

void writeCurveCsv(const ProfileCurve& curve, const std::string& path) {
  auto os = openOut(path);
  os << "abscissa,pll,isHullVertex\n";
  for (std::size_t i = 0; i < curve.abscissa.size(); ++i) {
    os << formatDouble(curve.abscissa[i]) << ',' << formatDouble(curve.pll[i]) << ','
       << (curve.isHullVertex[i] ? 1 : 0) << '\n';
  }
}

void writeCiTableCsv(const std::vector<CiRow>& rows, const std::string& path) {
  auto os = openOut(path);
  os << "name,notation,estimate,likelihood_ciLo,likelihood_ciHi,wald_ciLo,wald_ciHi\n";
  for (const auto& r : rows) {
    os << csvField(r.name) << ',' << csvField(r.notation) << ',' << formatDouble(r.estimate) << ','
       << r.likelihood.loText(10) << ',' << r.likelihood.hiText(10) << ',' << r.wald.loText(10)
       << ',' << r.wald.hiText(10) << '\n';
  }
}

std::string formatCiTable(const std::vector<CiRow>& rows) {
  std::ostringstream os;
  const int level = rows.empty() ? 90 : static_cast<int>(std::lround(rows.front().likelihood.level * 100));
  os << std::left << std::setw(20) << "parameter" << std::setw(20) << "notation" << std::right
     << std::setw(12) << "estimate" << std::setw(12) << "lik.lo" << std::setw(12) << "lik.hi"
     << std::setw(12) << "wald.lo" << std::setw(12) << "wald.hi" << "   (" << level << "%)\n";
  for (const auto& r : rows) {
    std::ostringstream est;
    est.precision(4);
    est << r.estimate;
    os << std::left << std::setw(20) << r.name << std::setw(20) << r.notation << std::right
       << std::setw(12) << est.str() << std::setw(12) << r.likelihood.loText(4) << std::setw(12)
       << r.likelihood.hiText(4) << std::setw(12) << r.wald.loText(4) << std::setw(12)
       << r.wald.hiText(4) << '\n';
  }
  return os.str();
}

void writeSurfaceCsv(const Surface2D& s, const std::string& path,
                     const std::vector<std::string>& covariateNames) {
  auto os = openOut(path);
  os << paramName(s.xParam, covariateNames) << ',' << paramName(s.yParam, covariateNames) << ",pll\n";
  for (std::size_t i = 0; i < s.xs.size(); ++i) {
    for (std::size_t j = 0; j < s.ys.size(); ++j) {
      os << formatDouble(s.xs[i]) << ',' << formatDouble(s.ys[j]) << ','
         << formatDouble(s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
    }
  }
}

void writeContoursCsv(const Surface2D& s, const std::string& path) {
  auto os = openOut(path);
  os << "level,line,x,y\n";
  for (const auto& c : s.contours) {
    for (std::size_t l = 0; l < c.lines.size(); ++l) {
      for (const auto& pt : c.lines[l]) {
        os << formatDouble(c.level) << ',' << l << ',' << formatDouble(pt.x()) << ','
           << formatDouble(pt.y()) << '\n';
      }
    }
  }
}

void writeJson(const nlohmann::json& j, const std::string& path) {
  auto os = openOut(path);
  os << j.dump(2) << '\n';
}

nlohmann::json readJson(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace geoprof
