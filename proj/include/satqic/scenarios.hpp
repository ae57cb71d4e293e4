#pragma once

#include <cstdint>
#include <string>

#include "satqic/linkem.hpp"

namespace satqic {

// Full description of one emulated path plus the transfer to run over it.
struct ScenarioSpec {
  std::string name;
  LinkDirectionParams forward;  // server -> client (download direction)
  LinkDirectionParams reverse;  // client -> server
  double one_way_delay_s = 0.0;
  uint64_t file_size = 0;
  int iterations = 1;
  double timeout_s = 120.0;

  void validate() const;
};

// Bandwidth-delay product of the forward direction, in bytes.
uint64_t bdp_bytes(const ScenarioSpec& spec);

// Built-in scenarios: TERR, SAT, SATL.
ScenarioSpec builtin_scenario(const std::string& name);
bool is_builtin_scenario(const std::string& name);

// Line-oriented `key = value` scenario files; '#' starts a comment, rate
// values take K/M suffixes (powers of ten, bits per second). Unset fields
// default to the SAT scenario.
ScenarioSpec parse_scenario(const std::string& text);

std::string serialize_scenario(const ScenarioSpec& spec);

}  // namespace satqic
