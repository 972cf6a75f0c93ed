#pragma once

// Rebuilds stores and executive state from an event log. Uses the events
// alone; the simulator is never consulted.

#include <fstream>
#include <istream>
#include <string>

#include "tro/error.hpp"
#include "tro/events.hpp"

namespace tro {

struct ReplayResult {
  World world;
  std::string digest;
  std::size_t events = 0;
};

inline ReplayResult replay_stream(std::istream& in) {
  ReplayResult r;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    try {
      apply_event(r.world, parse_event_line(line));
    } catch (const std::exception& e) {
      throw CorruptLog(lineno, e.what());
    }
    ++r.events;
  }
  r.digest = world_digest(r.world);
  return r;
}

inline ReplayResult replay_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorruptLog(0, "cannot open " + path);
  return replay_stream(in);
}

// Final state digest of the run recorded in `path`.
inline std::string replay(const std::string& path) { return replay_file(path).digest; }

}  // namespace tro
