#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "contact_kam/flow.hpp"
#include "contact_kam/model.hpp"

namespace contact_kam::cli {

struct SvgCurve {
  const Orbit* orbit = nullptr;
  std::string color;
  std::string label;
};

/// Orbits projected to (x, u) over the fold curve H(x, u, 0) = 0 of the energy shell, with optional fixed-point markers.
void write_phase_svg(const std::filesystem::path& path, const ContactModel& model, const std::vector<SvgCurve>& curves,
                     const std::vector<PhasePoint>& markers = {});

}  // namespace contact_kam::cli
