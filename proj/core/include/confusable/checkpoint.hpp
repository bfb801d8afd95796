#pragma once

#include <filesystem>
#include <iosfwd>

#include "confusable/embedding.hpp"
#include "confusable/learners.hpp"

namespace confusable {

// Versioned text dump of an embedding and the learner that reads it. Values
// are written in shortest round-trip form, so a reload reproduces inference
// bit for bit.
struct LearnerCheckpoint {
  LearnerKind kind = LearnerKind::Prototypical;
  double temperature = 1.0;
  LearnerParams params;

  bool operator==(const LearnerCheckpoint&) const = default;
};

void write_checkpoint(std::ostream& out, const LearnerCheckpoint& checkpoint);
LearnerCheckpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const LearnerCheckpoint& checkpoint);
LearnerCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace confusable
