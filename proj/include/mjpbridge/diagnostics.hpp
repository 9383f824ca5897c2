#ifndef MJPBRIDGE_DIAGNOSTICS_HPP
#define MJPBRIDGE_DIAGNOSTICS_HPP

#include <atomic>
#include <cstdint>

namespace mjpbridge {

/// Process-wide counters for events that are handled silently but should be
/// visible to the caller (clamps, caps, fallbacks). Relaxed atomics: the
/// counts are informational, never used for control flow.
struct Diagnostics {
  std::atomic<std::uint64_t> hazard_clamps{0};
  std::atomic<std::uint64_t> gw_blind_fallbacks{0};
  std::atomic<std::uint64_t> log_ratio_caps{0};
  std::atomic<std::uint64_t> psd_repairs{0};
  std::atomic<std::uint64_t> ode_integrations{0};
  std::atomic<std::uint64_t> weight_collapses{0};
  std::atomic<std::uint64_t> constant_series{0};

  void reset() {
    hazard_clamps = 0;
    gw_blind_fallbacks = 0;
    log_ratio_caps = 0;
    psd_repairs = 0;
    ode_integrations = 0;
    weight_collapses = 0;
    constant_series = 0;
  }
};

inline Diagnostics& diagnostics() {
  static Diagnostics d;
  return d;
}

inline void bump(std::atomic<std::uint64_t>& counter) {
  counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace mjpbridge

#endif
