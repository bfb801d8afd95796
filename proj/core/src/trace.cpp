#include "confusable/trace.hpp"

#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "confusable/errors.hpp"

namespace confusable {

void write_trace_line(std::ostream& out, const EpisodeTrace& trace) {
  const nlohmann::json line = {
      {"episode", trace.episode},
      {"targets", trace.targets},
      {"distractors", trace.distractors},
      {"J", trace.objective},
  };
  out << line.dump() << '\n';
}

std::vector<EpisodeTrace> read_trace(std::istream& in) {
  std::vector<EpisodeTrace> traces;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto json = nlohmann::json::parse(line);
      EpisodeTrace trace;
      trace.episode = json.at("episode").get<std::size_t>();
      trace.targets = json.at("targets").get<std::vector<std::size_t>>();
      trace.distractors = json.at("distractors").get<std::vector<std::vector<std::size_t>>>();
      trace.objective = json.at("J").get<double>();
      if (trace.distractors.size() != trace.targets.size()) {
        throw ParseError("targets and distractors differ in length", line_no);
      }
      traces.push_back(std::move(trace));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed trace record: ") + e.what(), line_no);
    }
  }
  return traces;
}

}  // namespace confusable
