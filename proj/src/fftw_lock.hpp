#pragma once

#include <mutex>

namespace vortexlab::detail {

// The FFTW planner is not thread-safe; every plan creation/destruction takes this lock.
std::mutex& fftw_planner_mutex();

}  // namespace vortexlab::detail
