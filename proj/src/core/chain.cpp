#include "echo/core/chain.hpp"

#include "echo/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace echo {

using nlohmann::json;

namespace {

Vec3 vec3(const json& j, const char* what) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw DataError(std::string(what) + " must have 3 entries");
  return {v[0], v[1], v[2]};
}

}  // namespace

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

KinematicChain chain_from_json_text(const std::string& text, std::string name) {
  try {
    const json j = json::parse(text);
    std::vector<ChainJoint> joints;
    const auto& arr = j.at("joints");
    for (size_t i = 0; i < arr.size(); ++i) {
      const auto& jj = arr[i];
      ChainJoint cj;
      cj.axis = vec3(jj.at("axis"), "axis");
      if (jj.contains("origin")) {
        const auto& o = jj.at("origin");
        if (o.contains("rotation")) {
          const auto& r = o.at("rotation");
          if (r.size() != 3) throw DataError("origin rotation must be 3x3");
          for (int a = 0; a < 3; ++a) cj.origin.rotation.row(a) = vec3(r[a], "rotation row");
        }
        if (o.contains("translation_mm")) {
          cj.origin.translation_mm = vec3(o.at("translation_mm"), "translation_mm");
        }
      }
      auto lim = jj.at("limits_rad").get<std::vector<double>>();
      if (lim.size() != 2) throw DataError("limits_rad must be [lo, hi]");
      cj.lo = lim[0];
      cj.hi = lim[1];
      cj.parent = jj.value("parent", static_cast<int>(i) - 1);
      joints.push_back(cj);
    }
    std::vector<Marker> markers;
    if (j.contains("end_effectors")) {
      for (const auto& m : j.at("end_effectors")) {
        if (m.is_number_integer()) {
          markers.push_back({m.get<int>(), Vec3::Zero()});
        } else {
          Marker mk;
          mk.joint = m.at("joint").get<int>();
          if (m.contains("offset_mm")) mk.offset_mm = vec3(m.at("offset_mm"), "offset_mm");
          markers.push_back(mk);
        }
      }
    }
    if (j.contains("name")) name = j.at("name").get<std::string>();
    return KinematicChain(std::move(joints), std::move(markers), std::move(name));
  } catch (const json::exception& e) {
    throw DataError(std::string("chain parse failure: ") + e.what());
  }
}

KinematicChain load_chain(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open chain file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return chain_from_json_text(ss.str(), path.stem().string());
}

std::string chain_to_json_text(const KinematicChain& chain) {
  json j;
  j["name"] = chain.name();
  json joints = json::array();
  for (const auto& cj : chain.joints()) {
    json r = json::array();
    for (int a = 0; a < 3; ++a) {
      r.push_back({cj.origin.rotation(a, 0), cj.origin.rotation(a, 1), cj.origin.rotation(a, 2)});
    }
    joints.push_back({{"axis", {cj.axis.x(), cj.axis.y(), cj.axis.z()}},
                      {"origin",
                       {{"rotation", r},
                        {"translation_mm",
                         {cj.origin.translation_mm.x(), cj.origin.translation_mm.y(),
                          cj.origin.translation_mm.z()}}}},
                      {"limits_rad", {cj.lo, cj.hi}},
                      {"parent", cj.parent}});
  }
  j["joints"] = joints;
  json markers = json::array();
  for (const auto& m : chain.end_effectors()) {
    markers.push_back(
        {{"joint", m.joint}, {"offset_mm", {m.offset_mm.x(), m.offset_mm.y(), m.offset_mm.z()}}});
  }
  j["end_effectors"] = markers;
  return j.dump(2) + "\n";
}

}  // namespace echo
