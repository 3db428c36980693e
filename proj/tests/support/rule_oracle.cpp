#include "rule_oracle.hpp"

#include <map>
#include <sstream>

namespace hoigen::testing {
namespace {

using Section = std::map<std::string, std::string>;

std::map<std::string, Section> sections_of(std::string_view text) {
  std::map<std::string, Section> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::string current;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.back() == ':' && line.find(' ') == std::string::npos) {
      current = line.substr(0, line.size() - 1);
      out[current];
      continue;
    }
    const auto dash = line.find("- ");
    const auto colon = line.find(": ");
    out[current][line.substr(dash + 2, colon - dash - 2)] = line.substr(colon + 2);
  }
  return out;
}

}  // namespace

OracleVerdict oracle_check(std::string_view canonical_text) {
  auto s = sections_of(canonical_text);
  const bool has_right = s.count("Right_Hand") != 0;
  const bool has_left = s.count("Left_Hand") != 0;
  const Section& obj = s["Object"];

  // Contact hand: a grasping/pressing hand, right first; otherwise whichever exists.
  std::string hand_name;
  if (has_right && s["Right_Hand"]["Motion_Type"] != "Support") {
    hand_name = "Right_Hand";
  } else if (has_left && s["Left_Hand"]["Motion_Type"] != "Support") {
    hand_name = "Left_Hand";
  } else if (has_right) {
    hand_name = "Right_Hand";
  } else {
    hand_name = "Left_Hand";
  }
  const Section& hand = s[hand_name];
  const std::string motion = hand.at("Motion_Type");

  const std::string fingers[5] = {hand.at("Thumb"), hand.at("Index_Finger"),
                                  hand.at("Middle_Finger"), hand.at("Ring_Finger"),
                                  hand.at("Little_Finger")};
  const std::string contact[5] = {
      obj.at("Contact_with_Thumb"), obj.at("Contact_with_Index_Finger"),
      obj.at("Contact_with_Middle_Finger"), obj.at("Contact_with_Ring_Finger"),
      obj.at("Contact_with_Little_Finger")};
  const std::string size = obj.at("Object_Size_wrt_Hand");
  const std::string palm = obj.at("Position_wrt_Palm");

  auto is_full = [](const std::string& c) { return c.rfind("Full_", 0) == 0; };
  auto is_none = [](const std::string& c) { return c.rfind("No_", 0) == 0; };
  auto is_tip = [](const std::string& c) { return c.rfind("Tip_", 0) == 0; };
  auto is_base = [](const std::string& c) { return c.rfind("Base_", 0) == 0; };

  OracleVerdict v;
  // E1
  if (palm == "Fully_Touching_Palm" && motion != "Full_Finger_Grasp" &&
      motion != "Full_Finger_Wrap" && motion != "Support" && motion != "Press" &&
      motion != "Lever_Grasp") {
    v.counts[0] = 1;
  }
  // E2
  if (motion == "Finger_Tip_Grasp") {
    for (const auto& c : contact) {
      if (is_full(c) || is_base(c)) v.counts[1] = 1;
    }
  }
  // E3
  int touching = 0;
  for (const auto& c : contact) touching += is_none(c) ? 0 : 1;
  if ((motion == "Two_Finger_Grasp" && touching != 2) ||
      (motion == "Three_Finger_Grasp" && touching != 3)) {
    v.counts[2] = 1;
  }
  // E4
  if (touching == 0 && palm == "Not_Touching_Palm") v.counts[3] = 1;
  // E5
  if (motion == "Full_Finger_Wrap" &&
      (fingers[1] == "Fully_Open" || fingers[2] == "Fully_Open" || fingers[3] == "Fully_Open" ||
       fingers[4] == "Fully_Open")) {
    v.counts[4] = 1;
  }
  // E6
  if (motion == "Support") {
    for (const auto& f : fingers) {
      if (f == "Fully_Closed") v.counts[5] = 1;
    }
  }
  // E7
  if (motion == "Press") {
    int tips = 0;
    for (const auto& c : contact) tips += is_tip(c) ? 1 : 0;
    if (tips == 0) v.counts[6] = 1;
  }
  // E8, W1
  for (int d = 0; d < 5; ++d) {
    if (fingers[d] == "Fully_Open" && is_full(contact[d]) && size == "Tiny") ++v.counts[7];
    if (fingers[d] == "Fully_Closed" && is_full(contact[d]) && size != "Tiny" && size != "Small") {
      ++v.counts[8];
    }
  }
  // W2
  if (size == "Larger_Than_Palm" && palm == "Fully_Touching_Palm") {
    bool fist = true;
    for (const auto& f : fingers) fist = fist && f == "Fully_Closed";
    if (fist) v.counts[9] = 1;
  }
  for (int i = 0; i < 8; ++i) v.plausible = v.plausible && v.counts[i] == 0;
  return v;
}

}  // namespace hoigen::testing
