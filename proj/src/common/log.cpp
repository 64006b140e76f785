#include "pfd/common/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace pfd {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("pfd");
    l->set_pattern("[%Y-%m-%d %H:%M:%S] [%^%l%$] %v");
    return l;
  }();
  return instance;
}

}  // namespace pfd
