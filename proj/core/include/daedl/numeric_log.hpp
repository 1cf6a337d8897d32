#pragma once

#include <cstdint>

namespace daedl {

/// Counters for numeric-range interventions (clamps, floors). These fire on
/// extreme inputs only; callers can snapshot them to audit a run.
enum class NumericEvent { alpha_floor_clamp = 0, exp_range_clamp = 1 };

void log_numeric_event(NumericEvent ev);
std::uint64_t numeric_event_count(NumericEvent ev);
void reset_numeric_event_counts();

}  // namespace daedl
