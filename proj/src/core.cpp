#include "ionbench/core.hpp"

namespace ionbench {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::domain: return "domain";
    case Errc::instability: return "instability";
    case Errc::saturation: return "saturation";
    case Errc::negative_concentration: return "negative_concentration";
    case Errc::singular_system: return "singular_system";
    case Errc::porosity_collapse: return "porosity_collapse";
    case Errc::degenerate_phase: return "degenerate_phase";
    case Errc::boundary_collision: return "boundary_collision";
    case Errc::infeasible_window: return "infeasible_window";
    case Errc::non_positive_definite: return "non_positive_definite";
    case Errc::no_charge_event: return "no_charge_event";
    case Errc::window_too_short: return "window_too_short";
    case Errc::degenerate_feature: return "degenerate_feature";
    case Errc::schema_mismatch: return "schema_mismatch";
    case Errc::empty_file: return "empty_file";
    case Errc::non_monotone_time: return "non_monotone_time";
    case Errc::misalignment: return "misalignment";
    case Errc::validation: return "validation";
    case Errc::io: return "io";
  }
  return "unknown";
}

}  // namespace ionbench
