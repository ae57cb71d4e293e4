#include "satqic/scenarios.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace satqic {
namespace {

constexpr uint64_t kTenMiB = 10ull * 1024 * 1024;

double parse_rate(const std::string& value, int line_no) {
  std::string v = value;
  double mult = 1.0;
  if (!v.empty() && (v.back() == 'K' || v.back() == 'k')) {
    mult = 1e3;
    v.pop_back();
  } else if (!v.empty() && (v.back() == 'M' || v.back() == 'm')) {
    mult = 1e6;
    v.pop_back();
  }
  size_t pos = 0;
  double r;
  try {
    r = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line_no) + ": bad rate '" + value + "'");
  }
  if (pos != v.size())
    throw ConfigError("line " + std::to_string(line_no) + ": bad rate '" + value + "'");
  return r * mult;
}

double parse_double(const std::string& value, int line_no, const std::string& key) {
  size_t pos = 0;
  double r;
  try {
    r = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != value.size())
    throw ConfigError("line " + std::to_string(line_no) + ": bad value for " + key);
  return r;
}

}  // namespace

void ScenarioSpec::validate() const {
  forward.validate();
  reverse.validate();
  if (one_way_delay_s < 0.0) throw ConfigError("delay must be >= 0");
  if (file_size < 1) throw ConfigError("file_size must be >= 1");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (timeout_s <= 0.0) throw ConfigError("timeout must be > 0");
}

uint64_t bdp_bytes(const ScenarioSpec& spec) {
  return static_cast<uint64_t>(spec.forward.data_rate_bps * (2.0 * spec.one_way_delay_s) / 8.0);
}

bool is_builtin_scenario(const std::string& name) {
  return name == "TERR" || name == "SAT" || name == "SATL";
}

ScenarioSpec builtin_scenario(const std::string& name) {
  ScenarioSpec s;
  s.name = name;
  s.file_size = kTenMiB;
  s.iterations = 10;
  s.timeout_s = 120.0;
  if (name == "TERR") {
    s.forward = {20e6, 25, 0.0};
    s.reverse = {20e6, 25, 0.0};
    s.one_way_delay_s = 0.015;
  } else if (name == "SAT" || name == "SATL") {
    s.forward = {20e6, 0, 0.0};
    s.reverse = {2e6, 0, 0.0};
    s.one_way_delay_s = 0.3;
    // BDP-sized buffer: ceil(20 Mbit/s * 600 ms / 8 / MTU) = 1000 packets.
    const int q = static_cast<int>(
        std::ceil(static_cast<double>(bdp_bytes(s)) / kMtuBytes));
    s.forward.queue_capacity = q;
    s.reverse.queue_capacity = q;
    if (name == "SATL") {
      s.forward.plr = 0.01;
      s.reverse.plr = 0.01;
    }
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  return s;
}

ScenarioSpec parse_scenario(const std::string& text) {
  ScenarioSpec s = builtin_scenario("SAT");
  s.name = "custom";
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    // Tokens are whitespace-separated key=value pairs; '=' may be padded.
    std::string compact;
    compact.reserve(line.size());
    for (size_t i = 0; i < line.size(); ++i) {
      if (std::isspace(static_cast<unsigned char>(line[i]))) {
        size_t j = i;
        while (j < line.size() && std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        const bool around_eq = (!compact.empty() && compact.back() == '=') ||
                               (j < line.size() && line[j] == '=');
        if (!around_eq && !compact.empty()) compact.push_back(' ');
        i = j - 1;
      } else {
        compact.push_back(line[i]);
      }
    }
    std::istringstream toks(compact);
    std::string tok;
    while (toks >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 >= tok.size())
        throw ConfigError("line " + std::to_string(line_no) +
                          ": expected key=value, got '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string value = tok.substr(eq + 1);
      if (key == "name") {
        s.name = value;
      } else if (key == "forward.rate") {
        s.forward.data_rate_bps = parse_rate(value, line_no);
      } else if (key == "reverse.rate") {
        s.reverse.data_rate_bps = parse_rate(value, line_no);
      } else if (key == "forward.queue") {
        s.forward.queue_capacity = static_cast<int>(parse_double(value, line_no, key));
      } else if (key == "reverse.queue") {
        s.reverse.queue_capacity = static_cast<int>(parse_double(value, line_no, key));
      } else if (key == "forward.plr") {
        s.forward.plr = parse_double(value, line_no, key);
      } else if (key == "reverse.plr") {
        s.reverse.plr = parse_double(value, line_no, key);
      } else if (key == "delay_ms") {
        s.one_way_delay_s = parse_double(value, line_no, key) / 1000.0;
      } else if (key == "file_size") {
        s.file_size = static_cast<uint64_t>(parse_double(value, line_no, key));
      } else if (key == "iterations") {
        s.iterations = static_cast<int>(parse_double(value, line_no, key));
      } else if (key == "timeout_s") {
        s.timeout_s = parse_double(value, line_no, key);
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      }
    }
  }
  s.validate();
  return s;
}

std::string serialize_scenario(const ScenarioSpec& spec) {
  std::ostringstream out;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "name = " << spec.name << "\n";
  out << "forward.rate = " << num(spec.forward.data_rate_bps) << "\n";
  out << "reverse.rate = " << num(spec.reverse.data_rate_bps) << "\n";
  out << "forward.queue = " << spec.forward.queue_capacity << "\n";
  out << "reverse.queue = " << spec.reverse.queue_capacity << "\n";
  out << "forward.plr = " << num(spec.forward.plr) << "\n";
  out << "reverse.plr = " << num(spec.reverse.plr) << "\n";
  out << "delay_ms = " << num(spec.one_way_delay_s * 1000.0) << "\n";
  out << "file_size = " << spec.file_size << "\n";
  out << "iterations = " << spec.iterations << "\n";
  out << "timeout_s = " << num(spec.timeout_s) << "\n";
  return out.str();
}

}  // namespace satqic
