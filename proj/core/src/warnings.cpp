#include "geoprof/warnings.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace geoprof {
namespace {

std::mutex& handlerMutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handlerSlot() {
  static WarningHandler h = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return h;
}

}  // namespace

WarningHandler setWarningHandler(WarningHandler handler) {
  std::lock_guard lock(handlerMutex());
  return std::exchange(handlerSlot(), std::move(handler));
}

void warn(const std::string& message) {
  std::lock_guard lock(handlerMutex());
  if (handlerSlot()) handlerSlot()(message);
}

}  // namespace geoprof
