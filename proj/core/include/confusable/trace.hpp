#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace confusable {

// One line of the episode trace log: which targets were drawn and which
// distractors each received.
struct EpisodeTrace {
  std::size_t episode = 0;
  std::vector<std::size_t> targets;
  std::vector<std::vector<std::size_t>> distractors;  // parallel to targets
  double objective = 0.0;

  bool operator==(const EpisodeTrace&) const = default;
};

// JSON lines: {"episode":..,"targets":[..],"distractors":[[..],..],"J":..}
void write_trace_line(std::ostream& out, const EpisodeTrace& trace);
// Throws ParseError carrying the offending line number.
std::vector<EpisodeTrace> read_trace(std::istream& in);

}  // namespace confusable
