#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace traceqa {

// The eight-verb plan vocabulary. GotoLocation and ToggleObject take one
// argument; every other verb takes (object, receptacle-or-tool).
enum class Verb {
  GotoLocation,
  PickupObject,
  PutObject,
  HeatObject,
  CoolObject,
  CleanObject,
  SliceObject,
  ToggleObject,
};

struct VerbInfo {
  Verb verb;
  const char* name;
  int arity;
};

inline constexpr std::array<VerbInfo, 8> kVerbTable{{
    {Verb::GotoLocation, "GotoLocation", 1},
    {Verb::PickupObject, "PickupObject", 2},
    {Verb::PutObject, "PutObject", 2},
    {Verb::HeatObject, "HeatObject", 2},
    {Verb::CoolObject, "CoolObject", 2},
    {Verb::CleanObject, "CleanObject", 2},
    {Verb::SliceObject, "SliceObject", 2},
    {Verb::ToggleObject, "ToggleObject", 1},
}};

inline const char* verb_name(Verb v) {
  return kVerbTable[static_cast<std::size_t>(v)].name;
}

inline int verb_arity(Verb v) {
  return kVerbTable[static_cast<std::size_t>(v)].arity;
}

inline std::optional<Verb> verb_from_name(std::string_view name) {
  for (const auto& info : kVerbTable) {
    if (name == info.name) return info.verb;
  }
  return std::nullopt;
}

}  // namespace traceqa
