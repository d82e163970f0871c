#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace kamtori {

/// Verbosity from the KAMTORI_LOG environment variable:
/// quiet (default for the library), info, debug.
inline int log_level() {
  static int lvl = [] {
    const char* e = std::getenv("KAMTORI_LOG");
    if (!e) return 0;
    if (std::strcmp(e, "debug") == 0) return 2;
    if (std::strcmp(e, "info") == 0) return 1;
    return 0;
  }();
  return lvl;
}

template <class... Args>
inline void log_info(const char* fmt, Args... args) {
  if (log_level() >= 1) {
    std::fprintf(stderr, "[kamtori] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

template <class... Args>
inline void log_debug(const char* fmt, Args... args) {
  if (log_level() >= 2) {
    std::fprintf(stderr, "[kamtori] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

}  // namespace kamtori
