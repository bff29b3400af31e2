#pragma once

#include <stdexcept>
#include <string>

namespace minersim {

// Invalid parameter sets, malformed configs, violated invariants.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Aborted runs: non-finite state, unsolvable networks, unreachable targets.
class SimulationError : public std::runtime_error {
 public:
  explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
  SimulationError(const std::string& msg, double time_s, const std::string& channel)
      : std::runtime_error(msg + " (t=" + std::to_string(time_s) + " s, channel=" + channel + ")"),
        time_s(time_s),
        channel(channel) {}

  double time_s = -1.0;
  std::string channel;
};

}  // namespace minersim
