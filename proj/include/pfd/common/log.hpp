#pragma once

#include <spdlog/spdlog.h>

#include <memory>

namespace pfd {

// Shared stderr logger named "pfd".
std::shared_ptr<spdlog::logger> logger();

}  // namespace pfd
