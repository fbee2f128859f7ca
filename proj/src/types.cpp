#include "avstress/types.hpp"

#include <stdexcept>

namespace avs {

const char* maneuver_name(Maneuver m) {
  switch (m) {
    case Maneuver::kKeep:
      return "keep";
    case Maneuver::kLeft:
      return "left";
    case Maneuver::kRight:
      return "right";
  }
  return "keep";
}

std::optional<Maneuver> maneuver_from_name(const std::string& name) {
  if (name == "keep") return Maneuver::kKeep;
  if (name == "left") return Maneuver::kLeft;
  if (name == "right") return Maneuver::kRight;
  return std::nullopt;
}

const VehicleState* Scene::find(int id) const {
  for (const auto& v : vehicles) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

const VehicleState& Scene::cav() const { return by_id(cav_id); }

const VehicleState& Scene::by_id(int id) const {
  const VehicleState* v = find(id);
  if (v == nullptr) {
    throw std::invalid_argument("no vehicle with id " + std::to_string(id));
  }
  return *v;
}

}  // namespace avs
