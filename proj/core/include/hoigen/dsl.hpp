#pragma once

// Hand-object interaction description language.
//
// A program describes up to two hands (motion type and the state of each
// finger) and a single object block (size, palm position and per-digit
// contact). Canonical text layout:
//
//   Right_Hand:
//       - Motion_Type: Support
//       - Thumb: Fully_Open
//       ...
//   Left_Hand:
//       ...
//   Object:
//       - Object_Name: Tea Filled Cup
//       - Object_Size_wrt_Hand: Size_Of_Palm
//       - Position_wrt_Palm: Not_Touching_Palm
//       - Contact_with_Thumb: Full_Thumb
//       - Contact_with_Index_Finger: Full_Finger
//       ...
//
// Token matching is case-insensitive and treats spaces, hyphens and
// underscores as the same separator. A missing hand section means the hand
// is not visible in the scene.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hoigen {

enum class FingerState : std::uint8_t { FullyOpen, HalfClosed, FullyClosed };

enum class MotionType : std::uint8_t {
  FullFingerGrasp,
  FullFingerWrap,
  FingerTipGrasp,
  Support,
  LeverGrasp,
  Press,
  TwoFingerGrasp,
  ThreeFingerGrasp,
};

enum class ContactLevel : std::uint8_t { Full, None, Tip, Base };

enum class ObjectSize : std::uint8_t { Tiny, Small, SizeOfPalm, LargerThanPalm };

enum class PalmPosition : std::uint8_t { FullyTouching, NotTouching, PartiallyTouching };

enum class Digit : std::uint8_t { Thumb, Index, Middle, Ring, Little };

enum class Side : std::uint8_t { Right, Left };

inline constexpr std::array kAllFingerStates = {
    FingerState::FullyOpen, FingerState::HalfClosed, FingerState::FullyClosed};
inline constexpr std::array kAllMotionTypes = {
    MotionType::FullFingerGrasp, MotionType::FullFingerWrap, MotionType::FingerTipGrasp,
    MotionType::Support,         MotionType::LeverGrasp,     MotionType::Press,
    MotionType::TwoFingerGrasp,  MotionType::ThreeFingerGrasp};
inline constexpr std::array kAllContactLevels = {ContactLevel::Full, ContactLevel::None,
                                                 ContactLevel::Tip, ContactLevel::Base};
inline constexpr std::array kAllObjectSizes = {ObjectSize::Tiny, ObjectSize::Small,
                                               ObjectSize::SizeOfPalm,
                                               ObjectSize::LargerThanPalm};
inline constexpr std::array kAllPalmPositions = {PalmPosition::FullyTouching,
                                                 PalmPosition::NotTouching,
                                                 PalmPosition::PartiallyTouching};
inline constexpr std::array kAllDigits = {Digit::Thumb, Digit::Index, Digit::Middle,
                                          Digit::Ring, Digit::Little};

/// Program sections, in canonical order.
enum class Section : std::uint8_t { RightHand, LeftHand, Object };

/// Every keyed line of the language, in canonical order within its section.
enum class Field : std::uint8_t {
  MotionType,
  Thumb,
  IndexFinger,
  MiddleFinger,
  RingFinger,
  LittleFinger,
  ObjectName,
  ObjectSize,
  PalmPosition,
  ContactThumb,
  ContactIndex,
  ContactMiddle,
  ContactRing,
  ContactLittle,
};

constexpr Section section_of(Side side) {
  return side == Side::Right ? Section::RightHand : Section::LeftHand;
}
constexpr Field finger_field(Digit d) {
  return static_cast<Field>(static_cast<int>(Field::Thumb) + static_cast<int>(d));
}
constexpr Field contact_field(Digit d) {
  return static_cast<Field>(static_cast<int>(Field::ContactThumb) + static_cast<int>(d));
}

// Canonical spellings (underscore form).
std::string_view to_string(FingerState v);
std::string_view to_string(MotionType v);
std::string_view to_string(ObjectSize v);
std::string_view to_string(PalmPosition v);
std::string_view to_string(Section v);
std::string_view to_string(Field v);
std::string_view to_string(Side v);
std::string_view to_string(Digit v);
/// Contact spellings are digit-specific: Full_Thumb vs Full_Finger.
std::string_view contact_token(ContactLevel v, Digit d);

/// Lowercases and folds runs of space, '-' and '_' into one '_'.
std::string normalize_token(std::string_view token);

struct HandSpec {
  MotionType motion = MotionType::Support;
  std::array<FingerState, 5> fingers{};

  FingerState finger(Digit d) const { return fingers[static_cast<std::size_t>(d)]; }
  bool operator==(const HandSpec&) const = default;
};

struct ObjectSpec {
  std::string name;
  ObjectSize size = ObjectSize::Small;
  PalmPosition palm = PalmPosition::NotTouching;
  std::array<ContactLevel, 5> contact{};

  ContactLevel contact_of(Digit d) const { return contact[static_cast<std::size_t>(d)]; }
  bool operator==(const ObjectSpec&) const = default;
};

/// A motion token that was accepted through the alias table.
struct MotionAlias {
  Side side;
  std::string token;
};

struct HandProgram {
  std::optional<HandSpec> right;
  std::optional<HandSpec> left;
  ObjectSpec object;

  // Parse provenance; not part of structural equality.
  std::string source_text;
  std::vector<MotionAlias> aliases;

  const std::optional<HandSpec>& hand(Side side) const {
    return side == Side::Right ? right : left;
  }
  std::optional<HandSpec>& hand(Side side) { return side == Side::Right ? right : left; }

  friend bool operator==(const HandProgram& a, const HandProgram& b) {
    return a.right == b.right && a.left == b.left && a.object == b.object;
  }
};

class ParseError : public std::runtime_error {
 public:
  enum class Kind {
    NoHandSection,
    MissingObjectBlock,
    UnknownToken,
    DuplicateField,
    MissingField,
  };

  ParseError(Kind kind, std::size_t line, std::string got,
             std::vector<std::string> expected, const std::string& message);

  Kind kind() const { return kind_; }
  /// 1-based line number in the input, 0 when not tied to a line.
  std::size_t line() const { return line_; }
  const std::string& got() const { return got_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  Kind kind_;
  std::size_t line_;
  std::string got_;
  std::vector<std::string> expected_;
};

std::string_view to_string(ParseError::Kind kind);

/// Parses the first program block in `text`. Surrounding prose is ignored;
/// the block runs from the first Right_Hand/Left_Hand header through the end
/// of the Object section.
HandProgram parse_program(std::string_view text);

/// Extent of a program block, as 0-based line indices [begin, end).
struct ProgramBlock {
  std::size_t begin;
  std::size_t end;
};

/// Locates every program block in `text`, in order of appearance.
std::vector<ProgramBlock> find_program_blocks(std::string_view text);

/// Parses a single block previously located by find_program_blocks.
HandProgram parse_program_block(std::string_view text, ProgramBlock block);

/// Canonical layout; byte-identical for structurally equal programs.
std::string serialize_program(const HandProgram& program);

/// Deterministic per seed; uniform over hand presence and every enum field.
/// Never emits alias tokens.
HandProgram random_program(std::uint64_t seed);

}  // namespace hoigen
