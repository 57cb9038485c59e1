#pragma once

// File output for curves, interval tables, surfaces and JSON documents.

#include "geoprof/pipeline.hpp"
#include "geoprof/profiles.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace geoprof {

/// Columns abscissa,pll,isHullVertex.
void writeCurveCsv(const ProfileCurve& curve, const std::string& path);

/// Columns name,notation,estimate,likelihood_ciLo,likelihood_ciHi,wald_ciLo,wald_ciHi.
void writeCiTableCsv(const std::vector<CiRow>& rows, const std::string& path);

/// Fixed-width text rendering of the table.
std::string formatCiTable(const std::vector<CiRow>& rows);

/// Columns <x name>,<y name>,pll with one row per lattice node (NA off the hull).
void writeSurfaceCsv(const Surface2D& s, const std::string& path,
                     const std::vector<std::string>& covariateNames = {});

/// Columns level,line,x,y.
void writeContoursCsv(const Surface2D& s, const std::string& path);

void writeJson(const nlohmann::json& j, const std::string& path);
nlohmann::json readJson(const std::string& path);

/// Shortest text that reads back to the same double.
std::string formatDouble(double v);

}  // namespace geoprof
