#include "hoigen/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <utility>

#include <fmt/format.h>

#include "hoigen/util.hpp"

namespace hoigen {
namespace {

template <typename E>
struct Spelling {
  std::string_view token;  // normalized form
  E value;
};

constexpr std::array<std::string_view, 3> kFingerStateNames = {"Fully_Open", "Half_Closed",
                                                               "Fully_Closed"};
constexpr std::array<std::string_view, 8> kMotionNames = {
    "Full_Finger_Grasp", "Full_Finger_Wrap", "Finger_Tip_Grasp", "Support",
    "Lever_Grasp",       "Press",            "Two_Finger_Grasp", "Three_Finger_Grasp"};
constexpr std::array<std::string_view, 4> kSizeNames = {"Tiny", "Small", "Size_Of_Palm",
                                                        "Larger_Than_Palm"};
constexpr std::array<std::string_view, 3> kPalmNames = {
    "Fully_Touching_Palm", "Not_Touching_Palm", "Partially_Touching_Palm"};
constexpr std::array<std::string_view, 4> kThumbContactNames = {"Full_Thumb", "No_Thumb",
                                                                "Tip_of_Thumb",
                                                                "Base_of_Thumb"};
constexpr std::array<std::string_view, 4> kFingerContactNames = {
    "Full_Finger", "No_Finger", "Tip_of_Finger", "Base_of_Finger"};
constexpr std::array<std::string_view, 3> kSectionNames = {"Right_Hand", "Left_Hand",
                                                           "Object"};
constexpr std::array<std::string_view, 14> kFieldNames = {
    "Motion_Type",
    "Thumb",
    "Index_Finger",
    "Middle_Finger",
    "Ring_Finger",
    "Little_Finger",
    "Object_Name",
    "Object_Size_wrt_Hand",
    "Position_wrt_Palm",
    "Contact_with_Thumb",
    "Contact_with_Index_Finger",
    "Contact_with_Middle_Finger",
    "Contact_with_Ring_Finger",
    "Contact_with_Little_Finger",
};

// Non-menu motion spellings accepted with a note.
constexpr std::array<Spelling<MotionType>, 1> kMotionAliases = {{
    {"full_hand_grasp", MotionType::FullFingerWrap},
}};

constexpr std::array<Spelling<ContactLevel>, 15> kContactSpellings = {{
    {"full_thumb", ContactLevel::Full},
    {"full_finger", ContactLevel::Full},
    {"full", ContactLevel::Full},
    {"no_thumb", ContactLevel::None},
    {"no_finger", ContactLevel::None},
    {"no_contact", ContactLevel::None},
    {"none", ContactLevel::None},
    {"tip_of_thumb", ContactLevel::Tip},
    {"tip_of_finger", ContactLevel::Tip},
    {"tip", ContactLevel::Tip},
    {"base_of_thumb", ContactLevel::Base},
    {"base_of_finger", ContactLevel::Base},
    {"base", ContactLevel::Base},
    {"thumb_tip", ContactLevel::Tip},
    {"finger_tip", ContactLevel::Tip},
}};

constexpr std::array<Spelling<PalmPosition>, 6> kPalmSpellings = {{
    {"fully_touching_palm", PalmPosition::FullyTouching},
    {"fully_touching", PalmPosition::FullyTouching},
    {"not_touching_palm", PalmPosition::NotTouching},
    {"not_touching", PalmPosition::NotTouching},
    {"partially_touching_palm", PalmPosition::PartiallyTouching},
    {"partially_touching", PalmPosition::PartiallyTouching},
}};

struct KeySpelling {
  std::string_view token;
  Field field;
};

constexpr std::array<KeySpelling, 13> kHandKeys = {{
    {"motion_type", Field::MotionType},
    {"motion", Field::MotionType},
    {"thumb", Field::Thumb},
    {"index_finger", Field::IndexFinger},
    {"index", Field::IndexFinger},
    {"middle_finger", Field::MiddleFinger},
    {"middle", Field::MiddleFinger},
    {"ring_finger", Field::RingFinger},
    {"ring", Field::RingFinger},
    {"little_finger", Field::LittleFinger},
    {"little", Field::LittleFinger},
    {"pinky_finger", Field::LittleFinger},
    {"pinky", Field::LittleFinger},
}};

constexpr std::array<KeySpelling, 13> kObjectKeys = {{
    {"object_name", Field::ObjectName},
    {"name", Field::ObjectName},
    {"object_size_wrt_hand", Field::ObjectSize},
    {"object_size", Field::ObjectSize},
    {"size", Field::ObjectSize},
    {"position_wrt_palm", Field::PalmPosition},
    {"palm_position", Field::PalmPosition},
    {"contact_with_thumb", Field::ContactThumb},
    {"contact_with_index_finger", Field::ContactIndex},
    {"contact_with_middle_finger", Field::ContactMiddle},
    {"contact_with_ring_finger", Field::ContactRing},
    {"contact_with_little_finger", Field::ContactLittle},
    {"contact_with_pinky_finger", Field::ContactLittle},
}};

template <typename Names>
std::vector<std::string> to_strings(const Names& names) {
  return std::vector<std::string>(names.begin(), names.end());
}

template <typename E, std::size_t N>
std::optional<E> lookup_canonical(const std::array<std::string_view, N>& names,
                                  const std::string& norm) {
  for (std::size_t i = 0; i < N; ++i) {
    if (normalize_token(names[i]) == norm) return static_cast<E>(i);
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::optional<E> lookup_spelling(const std::array<Spelling<E>, N>& table,
                                 const std::string& norm) {
  for (const auto& s : table) {
    if (s.token == norm) return s.value;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Line classification

struct Classified {
  enum class Kind { Blank, Header, KeyValue, Other };
  Kind kind = Kind::Blank;
  Section section = Section::Object;
  bool absent_hand = false;
  std::string key;       // normalized
  std::string_view raw_key;
  std::string_view value;
};

std::string_view strip_decoration(std::string_view s) {
  s = trim(s);
  while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '#' ||
                        s.front() == '>' || s.front() == '`')) {
    s.remove_prefix(1);
    s = trim(s);
  }
  while (!s.empty() && (s.back() == '*' || s.back() == '`')) {
    s.remove_suffix(1);
    s = trim(s);
  }
  return s;
}

std::optional<Section> section_for_key(const std::string& key) {
  if (key == "right_hand") return Section::RightHand;
  if (key == "left_hand") return Section::LeftHand;
  if (key == "object") return Section::Object;
  return std::nullopt;
}

bool means_absent(std::string_view value) {
  const std::string v = normalize_token(value);
  return v == "not_visible" || v == "none" || v == "absent" || v == "n/a" ||
         v == "not_present" || v == "not_visible.";
}

Classified classify(std::string_view raw) {
  Classified c;
  const std::string_view s = strip_decoration(raw);
  if (s.empty()) return c;
  const auto colon = s.find(':');
  if (colon == std::string_view::npos || colon == 0) {
    c.kind = Classified::Kind::Other;
    return c;
  }
  c.raw_key = trim(s.substr(0, colon));
  c.value = strip_decoration(s.substr(colon + 1));
  c.key = normalize_token(c.raw_key);
  if (const auto sec = section_for_key(c.key)) {
    if (c.value.empty()) {
      c.kind = Classified::Kind::Header;
      c.section = *sec;
      return c;
    }
    if (*sec != Section::Object && means_absent(c.value)) {
      c.kind = Classified::Kind::Header;
      c.section = *sec;
      c.absent_hand = true;
      return c;
    }
  }
  c.kind = Classified::Kind::KeyValue;
  return c;
}

std::optional<Field> field_for_key(Section section, const std::string& key) {
  if (section == Section::Object) {
    for (const auto& k : kObjectKeys) {
      if (k.token == key) return k.field;
    }
  } else {
    for (const auto& k : kHandKeys) {
      if (k.token == key) return k.field;
    }
  }
  return std::nullopt;
}

std::vector<std::string> field_names_of(Section section) {
  std::vector<std::string> out;
  const int begin = section == Section::Object ? static_cast<int>(Field::ObjectName) : 0;
  const int end = section == Section::Object ? static_cast<int>(kFieldNames.size())
                                             : static_cast<int>(Field::ObjectName);
  for (int i = begin; i < end; ++i) out.emplace_back(kFieldNames[i]);
  return out;
}

bool is_hand_header(const Classified& c) {
  return c.kind == Classified::Kind::Header && c.section != Section::Object;
}

ProgramBlock scan_block(const std::vector<std::string_view>& lines, std::size_t start) {
  std::size_t last = start;
  bool in_object = false;
  std::array<bool, 8> object_seen{};
  auto object_complete = [&] {
    return std::all_of(object_seen.begin(), object_seen.end(), [](bool b) { return b; });
  };
  for (std::size_t j = start + 1; j < lines.size(); ++j) {
    const Classified c = classify(lines[j]);
    using K = Classified::Kind;
    if (c.kind == K::Blank) continue;
    if (c.kind == K::Header) {
      if (in_object) break;
      if (c.section == Section::Object) in_object = true;
      last = j;
      continue;
    }
    if (c.kind == K::KeyValue) {
      if (!in_object) {
        last = j;
        continue;
      }
      if (const auto f = field_for_key(Section::Object, c.key)) {
        object_seen[static_cast<int>(*f) - static_cast<int>(Field::ObjectName)] = true;
        last = j;
        continue;
      }
      if (!object_complete()) {
        last = j;
        continue;
      }
    }
    break;
  }
  return {start, last + 1};
}

[[noreturn]] void throw_unknown(std::size_t line, std::string_view got, std::string_view what,
                                std::vector<std::string> expected) {
  std::string list;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) list += ", ";
    list += expected[i];
  }
  throw ParseError(ParseError::Kind::UnknownToken, line, std::string(got), std::move(expected),
                   fmt::format("line {}: unknown {} '{}'; expected one of: {}", line, what, got,
                               list));
}

struct PartialHand {
  bool present = false;
  bool absent = false;
  std::size_t header_line = 0;
  std::optional<MotionType> motion;
  std::array<std::optional<FingerState>, 5> fingers;
  std::optional<std::string> alias;
};

struct PartialObject {
  bool present = false;
  std::size_t header_line = 0;
  std::optional<std::string> name;
  std::optional<ObjectSize> size;
  std::optional<PalmPosition> palm;
  std::array<std::optional<ContactLevel>, 5> contact;
};

[[noreturn]] void throw_duplicate(std::size_t line, std::string_view got) {
  throw ParseError(ParseError::Kind::DuplicateField, line, std::string(got), {},
                   fmt::format("line {}: duplicate '{}'", line, got));
}

[[noreturn]] void throw_missing(std::size_t line, Section section, Field field) {
  throw ParseError(ParseError::Kind::MissingField, line, {},
                   {std::string(to_string(field))},
                   fmt::format("{} section (line {}) is missing {}", to_string(section), line,
                               to_string(field)));
}

void assign_hand_field(PartialHand& hand, Field field, const Classified& c, std::size_t line) {
  const std::string norm = normalize_token(c.value);
  if (field == Field::MotionType) {
    if (hand.motion) throw_duplicate(line, c.raw_key);
    if (auto m = lookup_canonical<MotionType>(kMotionNames, norm)) {
      hand.motion = m;
      return;
    }
    if (auto m = lookup_spelling(kMotionAliases, norm)) {
      hand.motion = m;
      hand.alias = std::string(c.value);
      return;
    }
    throw_unknown(line, c.value, "motion type", to_strings(kMotionNames));
  }
  auto& slot = hand.fingers[static_cast<int>(field) - static_cast<int>(Field::Thumb)];
  if (slot) throw_duplicate(line, c.raw_key);
  if (auto s = lookup_canonical<FingerState>(kFingerStateNames, norm)) {
    slot = s;
    return;
  }
  throw_unknown(line, c.value, "finger state", to_strings(kFingerStateNames));
}

void assign_object_field(PartialObject& obj, Field field, const Classified& c,
                         std::size_t line) {
  const std::string norm = normalize_token(c.value);
  switch (field) {
    case Field::ObjectName:
      if (obj.name) throw_duplicate(line, c.raw_key);
      if (c.value.empty()) throw_unknown(line, c.value, "object name", {"<object name>"});
      obj.name = std::string(c.value);
      return;
    case Field::ObjectSize:
      if (obj.size) throw_duplicate(line, c.raw_key);
      obj.size = lookup_canonical<ObjectSize>(kSizeNames, norm);
      if (!obj.size) throw_unknown(line, c.value, "object size", to_strings(kSizeNames));
      return;
    case Field::PalmPosition:
      if (obj.palm) throw_duplicate(line, c.raw_key);
      obj.palm = lookup_spelling(kPalmSpellings, norm);
      if (!obj.palm) throw_unknown(line, c.value, "palm position", to_strings(kPalmNames));
      return;
    default: {
      const int d = static_cast<int>(field) - static_cast<int>(Field::ContactThumb);
      auto& slot = obj.contact[d];
      if (slot) throw_duplicate(line, c.raw_key);
      slot = lookup_spelling(kContactSpellings, norm);
      if (!slot) {
        throw_unknown(line, c.value, "contact level",
                      d == 0 ? to_strings(kThumbContactNames)
                             : to_strings(kFingerContactNames));
      }
      return;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(FingerState v) { return kFingerStateNames[static_cast<int>(v)]; }
std::string_view to_string(MotionType v) { return kMotionNames[static_cast<int>(v)]; }
std::string_view to_string(ObjectSize v) { return kSizeNames[static_cast<int>(v)]; }
std::string_view to_string(PalmPosition v) { return kPalmNames[static_cast<int>(v)]; }
std::string_view to_string(Section v) { return kSectionNames[static_cast<int>(v)]; }
std::string_view to_string(Field v) { return kFieldNames[static_cast<int>(v)]; }
std::string_view to_string(Side v) { return v == Side::Right ? "Right" : "Left"; }
std::string_view to_string(Digit v) { return kFieldNames[static_cast<int>(finger_field(v))]; }

std::string_view contact_token(ContactLevel v, Digit d) {
  return d == Digit::Thumb ? kThumbContactNames[static_cast<int>(v)]
                           : kFingerContactNames[static_cast<int>(v)];
}

std::string normalize_token(std::string_view token) {
  token = trim(token);
  std::string out;
  out.reserve(token.size());
  bool pending_sep = false;
  for (char ch : token) {
    if (ch == ' ' || ch == '_' || ch == '-' || ch == '\t') {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) {
      out.push_back('_');
      pending_sep = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

ParseError::ParseError(Kind kind, std::size_t line, std::string got,
                       std::vector<std::string> expected, const std::string& message)
    : std::runtime_error(message),
      kind_(kind),
      line_(line),
      got_(std::move(got)),
      expected_(std::move(expected)) {}

std::string_view to_string(ParseError::Kind kind) {
  switch (kind) {
    case ParseError::Kind::NoHandSection: return "NoHandSection";
    case ParseError::Kind::MissingObjectBlock: return "MissingObjectBlock";
    case ParseError::Kind::UnknownToken: return "UnknownToken";
    case ParseError::Kind::DuplicateField: return "DuplicateField";
    case ParseError::Kind::MissingField: return "MissingField";
  }
  return "?";
}

std::vector<ProgramBlock> find_program_blocks(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<ProgramBlock> blocks;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (is_hand_header(classify(lines[i]))) {
      const ProgramBlock b = scan_block(lines, i);
      blocks.push_back(b);
      i = b.end;
    } else {
      ++i;
    }
  }
  return blocks;
}

HandProgram parse_program_block(std::string_view text, ProgramBlock block) {
  const auto lines = split_lines(text);
  block.end = std::min(block.end, lines.size());

  std::array<PartialHand, 2> hands;  // indexed by Side
  PartialObject object;
  std::optional<Section> current;

  for (std::size_t j = block.begin; j < block.end; ++j) {
    const std::size_t line_no = j + 1;
    const Classified c = classify(lines[j]);
    using K = Classified::Kind;
    switch (c.kind) {
      case K::Blank:
        break;
      case K::Header: {
        if (c.section == Section::Object) {
          if (object.present) throw_duplicate(line_no, c.raw_key);
          object.present = true;
          object.header_line = line_no;
        } else {
          auto& h = hands[c.section == Section::RightHand ? 0 : 1];
          if (h.present || h.absent) throw_duplicate(line_no, c.raw_key);
          (c.absent_hand ? h.absent : h.present) = true;
          h.header_line = line_no;
        }
        current = c.section;
        break;
      }
      case K::KeyValue: {
        if (!current) {
          throw_unknown(line_no, c.raw_key, "line", to_strings(kSectionNames));
        }
        const auto field = field_for_key(*current, c.key);
        if (!field) throw_unknown(line_no, c.raw_key, "key", field_names_of(*current));
        if (*current == Section::Object) {
          assign_object_field(object, *field, c, line_no);
        } else {
          auto& h = hands[*current == Section::RightHand ? 0 : 1];
          if (h.absent) {
            throw_unknown(line_no, c.raw_key, "key under a hand marked not visible", {});
          }
          assign_hand_field(h, *field, c, line_no);
        }
        break;
      }
      case K::Other:
        throw_unknown(line_no, trim(lines[j]), "line", field_names_of(current.value_or(
                                                           Section::RightHand)));
    }
  }

  if (!hands[0].present && !hands[1].present) {
    throw ParseError(ParseError::Kind::NoHandSection, block.begin + 1, {},
                     {"Right_Hand", "Left_Hand"}, "program describes no visible hand");
  }
  if (!object.present) {
    throw ParseError(ParseError::Kind::MissingObjectBlock, block.end, {}, {"Object"},
                     "program has no Object section");
  }

  HandProgram program;
  program.source_text = std::string(text);
  for (Side side : {Side::Right, Side::Left}) {
    const auto& h = hands[side == Side::Right ? 0 : 1];
    if (!h.present) continue;
    const Section sec = section_of(side);
    if (!h.motion) throw_missing(h.header_line, sec, Field::MotionType);
    HandSpec spec;
    spec.motion = *h.motion;
    for (Digit d : kAllDigits) {
      const auto& f = h.fingers[static_cast<int>(d)];
      if (!f) throw_missing(h.header_line, sec, finger_field(d));
      spec.fingers[static_cast<int>(d)] = *f;
    }
    program.hand(side) = spec;
    if (h.alias) program.aliases.push_back({side, *h.alias});
  }
  const std::size_t oline = object.header_line;
  if (!object.name) throw_missing(oline, Section::Object, Field::ObjectName);
  if (!object.size) throw_missing(oline, Section::Object, Field::ObjectSize);
  if (!object.palm) throw_missing(oline, Section::Object, Field::PalmPosition);
  program.object.name = *object.name;
  program.object.size = *object.size;
  program.object.palm = *object.palm;
  for (Digit d : kAllDigits) {
    const auto& c = object.contact[static_cast<int>(d)];
    if (!c) throw_missing(oline, Section::Object, contact_field(d));
    program.object.contact[static_cast<int>(d)] = *c;
  }
  return program;
}

HandProgram parse_program(std::string_view text) {
  const auto blocks = find_program_blocks(text);
  if (blocks.empty()) {
    throw ParseError(ParseError::Kind::NoHandSection, 0, {}, {"Right_Hand", "Left_Hand"},
                     "no Right_Hand or Left_Hand section found");
  }
  return parse_program_block(text, blocks.front());
}

std::string serialize_program(const HandProgram& program) {
  std::string out;
  auto line = [&out](std::string_view key, std::string_view value) {
    out += "    - ";
    out += key;
    out += ": ";
    out += value;
    out += '\n';
  };
  for (Side side : {Side::Right, Side::Left}) {
    const auto& hand = program.hand(side);
    if (!hand) continue;
    out += to_string(section_of(side));
    out += ":\n";
    line(to_string(Field::MotionType), to_string(hand->motion));
    for (Digit d : kAllDigits) line(to_string(finger_field(d)), to_string(hand->finger(d)));
  }
  out += "Object:\n";
  line(to_string(Field::ObjectName), trim(program.object.name));
  line(to_string(Field::ObjectSize), to_string(program.object.size));
  line(to_string(Field::PalmPosition), to_string(program.object.palm));
  for (Digit d : kAllDigits) {
    line(to_string(contact_field(d)), contact_token(program.object.contact_of(d), d));
  }
  return out;
}

HandProgram random_program(std::uint64_t seed) {
  static constexpr std::array<std::string_view, 16> kObjectNames = {
      "Tea Filled Cup", "Coffee Mug",    "Kitchen Knife", "Tennis Ball",
      "Smartphone",     "Paintbrush",    "Screwdriver",   "Guitar Pick",
      "Umbrella Handle", "Wine Glass",   "Hardcover Book", "Gold Ring",
      "Ballpoint Pen",  "Stethoscope",   "Garden Trowel", "Steering Wheel"};
  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(uniform_below(rng, n)); };
  auto random_hand = [&] {
    HandSpec h;
    h.motion = kAllMotionTypes[pick(kAllMotionTypes.size())];
    for (auto& f : h.fingers) f = kAllFingerStates[pick(kAllFingerStates.size())];
    return h;
  };

  HandProgram p;
  switch (pick(3)) {
    case 0: p.right = random_hand(); break;
    case 1: p.left = random_hand(); break;
    default:
      p.right = random_hand();
      p.left = random_hand();
      break;
  }
  p.object.name = std::string(kObjectNames[pick(kObjectNames.size())]);
  p.object.size = kAllObjectSizes[pick(kAllObjectSizes.size())];
  p.object.palm = kAllPalmPositions[pick(kAllPalmPositions.size())];
  for (auto& c : p.object.contact) c = kAllContactLevels[pick(kAllContactLevels.size())];
  return p;
}

}  // namespace hoigen
