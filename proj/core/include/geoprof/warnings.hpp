#pragma once

#include <functional>
#include <string>

namespace geoprof {

/// Receives non-fatal diagnostics (fallbacks, skipped sets, boundary fits).
/// The default handler writes "warning: <msg>" to stderr.
using WarningHandler = std::function<void(const std::string&)>;

/// Installs a handler and returns the previous one. An empty handler
/// silences warnings.
WarningHandler setWarningHandler(WarningHandler handler);

void warn(const std::string& message);

}  // namespace geoprof
