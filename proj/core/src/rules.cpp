#include "hoigen/rules.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace hoigen {
namespace {

constexpr std::array<std::string_view, kRuleCount> kRuleNames = {
    "E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "W1", "W2", "A1"};

class ReportBuilder {
 public:
  explicit ReportBuilder(const RuleProfile& profile) : profile_(profile) {}

  void add(RuleId id, Location loc, std::string message) {
    if (const auto sev = profile_.severity(id)) {
      report_.violations.push_back({id, *sev, std::move(message), loc});
    }
  }

  ValidationReport finish() && {
    std::stable_sort(report_.violations.begin(), report_.violations.end(),
                     [](const Violation& a, const Violation& b) {
                       if (a.rule != b.rule) return a.rule < b.rule;
                       return a.location < b.location;
                     });
    return std::move(report_);
  }

 private:
  const RuleProfile& profile_;
  ValidationReport report_;
};

}  // namespace

std::string_view to_string(RuleId id) { return kRuleNames[static_cast<std::size_t>(id)]; }

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Note: return "note";
  }
  return "?";
}

std::optional<RuleId> rule_id_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kRuleCount; ++i) {
    if (kRuleNames[i] == s) return static_cast<RuleId>(i);
  }
  return std::nullopt;
}

bool ValidationReport::is_plausible() const { return count(Severity::Error) == 0; }

std::size_t ValidationReport::count(Severity s) const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(), [s](const Violation& v) { return v.severity == s; }));
}

std::size_t ValidationReport::count(RuleId r) const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(), [r](const Violation& v) { return v.rule == r; }));
}

std::vector<std::string> ValidationReport::warning_ids() const {
  std::vector<std::string> out;
  for (const auto& v : violations) {
    if (v.severity == Severity::Warning) out.emplace_back(to_string(v.rule));
  }
  return out;
}

std::string ValidationReport::error_summary() const {
  std::string out;
  for (const auto& v : violations) {
    if (v.severity != Severity::Error) continue;
    if (!out.empty()) out += "; ";
    out += fmt::format("{}: {}", to_string(v.rule), v.message);
  }
  return out;
}

RuleProfile::RuleProfile() {
  for (std::size_t i = 0; i < kRuleCount; ++i) {
    severities_[i] = default_severity(static_cast<RuleId>(i));
  }
}

Severity RuleProfile::default_severity(RuleId id) {
  if (id == RuleId::A1) return Severity::Note;
  if (id == RuleId::W1 || id == RuleId::W2) return Severity::Warning;
  return Severity::Error;
}

RuleProfile RuleProfile::from_overrides(const std::map<std::string, std::string>& overrides) {
  RuleProfile profile;
  for (const auto& [key, level] : overrides) {
    const auto id = rule_id_from_string(key);
    if (!id) throw std::invalid_argument("unknown rule id '" + key + "'");
    if (level == "off") {
      profile.disable(*id);
    } else if (level == "error") {
      profile.set_severity(*id, Severity::Error);
    } else if (level == "warning") {
      profile.set_severity(*id, Severity::Warning);
    } else if (level == "note") {
      profile.set_severity(*id, Severity::Note);
    } else {
      throw std::invalid_argument("rule " + key + ": unknown level '" + level + "'");
    }
  }
  return profile;
}

bool is_grasp_like(MotionType m) { return m != MotionType::Support; }

Side contact_side(const HandProgram& program) {
  const bool right = program.right && is_grasp_like(program.right->motion);
  const bool left = program.left && is_grasp_like(program.left->motion);
  if (right) return Side::Right;
  if (left) return Side::Left;
  return program.right ? Side::Right : Side::Left;
}

ValidationReport validate_program(const HandProgram& program, const RuleProfile& profile) {
  ReportBuilder out(profile);

  for (const auto& alias : program.aliases) {
    const auto& hand = program.hand(alias.side);
    out.add(RuleId::A1, {section_of(alias.side), Field::MotionType},
            fmt::format("motion '{}' rewritten to {}", alias.token,
                        hand ? to_string(hand->motion) : "?"));
  }

  const ObjectSpec& obj = program.object;
  const auto contacts = [&obj](ContactLevel level) {
    return std::count(obj.contact.begin(), obj.contact.end(), level);
  };
  const Location palm_loc{Section::Object, Field::PalmPosition};

  if (contacts(ContactLevel::None) == 5 && obj.palm == PalmPosition::NotTouching) {
    out.add(RuleId::E4, palm_loc, "nothing touches the object: no digit contact and palm not touching");
  }

  if (!program.right && !program.left) return std::move(out).finish();

  const Side side = contact_side(program);
  const HandSpec& hand = *program.hand(side);
  const Section sec = section_of(side);
  const Location motion_loc{sec, Field::MotionType};
  const auto motion_name = to_string(hand.motion);

  switch (hand.motion) {
    case MotionType::FullFingerGrasp:
    case MotionType::FullFingerWrap:
    case MotionType::Support:
    case MotionType::Press:
    case MotionType::LeverGrasp:
      break;
    default:
      if (obj.palm == PalmPosition::FullyTouching) {
        out.add(RuleId::E1, palm_loc,
                fmt::format("palm fully touching is incompatible with {}", motion_name));
      }
  }

  if (hand.motion == MotionType::FingerTipGrasp &&
      contacts(ContactLevel::Full) + contacts(ContactLevel::Base) > 0) {
    out.add(RuleId::E2, motion_loc, "finger tip grasp allows only tip contact or none");
  }

  const auto touching = 5 - contacts(ContactLevel::None);
  if (hand.motion == MotionType::TwoFingerGrasp && touching != 2) {
    out.add(RuleId::E3, motion_loc,
            fmt::format("two finger grasp needs exactly 2 contacting digits, got {}", touching));
  }
  if (hand.motion == MotionType::ThreeFingerGrasp && touching != 3) {
    out.add(RuleId::E3, motion_loc,
            fmt::format("three finger grasp needs exactly 3 contacting digits, got {}", touching));
  }

  if (hand.motion == MotionType::FullFingerWrap) {
    for (Digit d : {Digit::Index, Digit::Middle, Digit::Ring, Digit::Little}) {
      if (hand.finger(d) == FingerState::FullyOpen) {
        out.add(RuleId::E5, motion_loc,
                fmt::format("full finger wrap with {} fully open", to_string(d)));
        break;
      }
    }
  }

  if (hand.motion == MotionType::Support) {
    for (Digit d : kAllDigits) {
      if (hand.finger(d) == FingerState::FullyClosed) {
        out.add(RuleId::E6, motion_loc,
                fmt::format("support with {} fully closed", to_string(d)));
        break;
      }
    }
  }

  if (hand.motion == MotionType::Press && contacts(ContactLevel::Tip) == 0) {
    out.add(RuleId::E7, motion_loc, "press needs at least one tip contact");
  }

  for (Digit d : kAllDigits) {
    const FingerState state = hand.finger(d);
    if (obj.contact_of(d) != ContactLevel::Full) continue;
    if (state == FingerState::FullyOpen && obj.size == ObjectSize::Tiny) {
      out.add(RuleId::E8, {sec, finger_field(d)},
              fmt::format("{} fully open cannot fully contact a tiny object", to_string(d)));
    }
    if (state == FingerState::FullyClosed && obj.size != ObjectSize::Tiny &&
        obj.size != ObjectSize::Small) {
      out.add(RuleId::W1, {sec, finger_field(d)},
              fmt::format("{} fully closed with full contact on a {} object", to_string(d),
                          to_string(obj.size)));
    }
  }

  if (obj.size == ObjectSize::LargerThanPalm && obj.palm == PalmPosition::FullyTouching &&
      std::all_of(hand.fingers.begin(), hand.fingers.end(),
                  [](FingerState f) { return f == FingerState::FullyClosed; })) {
    out.add(RuleId::W2, {Section::Object, Field::ObjectSize},
            "a closed fist cannot enclose an object larger than the palm");
  }

  return std::move(out).finish();
}

}  // namespace hoigen
