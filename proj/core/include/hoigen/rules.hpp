#pragma once

// Symbolic physical-plausibility rules for hand programs.
//
// The object block describes contact for a single hand, the "contact hand":
// the hand whose motion is a grasp, wrap or press; the right hand if both
// qualify; otherwise the right hand if present, else the left.
//
//   E1  palm fully touching requires a grasp/wrap/support/press/lever motion
//   E2  finger-tip grasp allows only tip or no contact
//   E3  two-/three-finger grasp needs exactly 2/3 contacting digits
//   E4  no digit and no palm touching the object
//   E5  full finger wrap needs the four fingers half or fully closed
//   E6  support needs all five fingers fully open or half closed
//   E7  press needs at least one tip contact
//   E8  fully open digit cannot have full contact with a tiny object
//   W1  fully closed digit with full contact on an object bigger than small
//   W2  fist fully touching an object larger than the palm
//   A1  motion token was rewritten through the alias table (note)

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hoigen/dsl.hpp"

namespace hoigen {

enum class RuleId : std::uint8_t { E1, E2, E3, E4, E5, E6, E7, E8, W1, W2, A1 };
inline constexpr std::size_t kRuleCount = 11;

enum class Severity : std::uint8_t { Error, Warning, Note };

std::string_view to_string(RuleId id);
std::string_view to_string(Severity s);
std::optional<RuleId> rule_id_from_string(std::string_view s);

struct Location {
  Section section;
  Field field;

  auto operator<=>(const Location&) const = default;
};

struct Violation {
  RuleId rule;
  Severity severity;
  std::string message;
  Location location;
};

struct ValidationReport {
  /// Sorted by rule id, then location.
  std::vector<Violation> violations;

  bool is_plausible() const;
  std::size_t count(Severity s) const;
  std::size_t count(RuleId r) const;
  /// Rule ids of every Warning entry, in report order (duplicates kept).
  std::vector<std::string> warning_ids() const;
  /// "E3: message; E5: message" over Error entries.
  std::string error_summary() const;
};

/// Which rules run and at what severity. Default: every rule at its
/// built-in severity (E* Error, W* Warning, A1 Note).
class RuleProfile {
 public:
  RuleProfile();

  static Severity default_severity(RuleId id);

  void disable(RuleId id) { severities_[static_cast<std::size_t>(id)].reset(); }
  void set_severity(RuleId id, Severity s) { severities_[static_cast<std::size_t>(id)] = s; }
  std::optional<Severity> severity(RuleId id) const {
    return severities_[static_cast<std::size_t>(id)];
  }

  /// Overrides keyed by rule id: "error" | "warning" | "note" | "off".
  /// Throws std::invalid_argument on unknown ids or levels.
  static RuleProfile from_overrides(const std::map<std::string, std::string>& overrides);

 private:
  std::array<std::optional<Severity>, kRuleCount> severities_;
};

bool is_grasp_like(MotionType m);

/// The hand the object block binds to. Requires at least one hand.
Side contact_side(const HandProgram& program);

ValidationReport validate_program(const HandProgram& program,
                                  const RuleProfile& profile = RuleProfile());

}  // namespace hoigen
