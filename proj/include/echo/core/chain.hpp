#pragma once

#include "echo/core/types.hpp"

#include <filesystem>
#include <string>

namespace echo {

KinematicChain load_chain(const std::filesystem::path& path);
KinematicChain chain_from_json_text(const std::string& text, std::string name = {});
std::string chain_to_json_text(const KinematicChain& chain);

/// Rotation about a unit axis.
Mat3 axis_angle(const Vec3& axis, double angle);

}  // namespace echo
