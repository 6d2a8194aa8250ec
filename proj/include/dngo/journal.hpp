#pragma once

#include "dngo/config.hpp"
#include "dngo/error.hpp"
#include "dngo/optimizer.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace dngo {

inline constexpr int kJournalSchemaVersion = 1;

/// Version string of the engine; replay refuses journals from other versions.
std::string engine_version();

/// Malformed journal. `line` is 1-based, 0 when the problem is not tied to a line.
class JournalError : public Error {
 public:
  JournalError(std::size_t line, const std::string& message)
      : Error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct JournalHeader {
  int schema_version = kJournalSchemaVersion;
  std::string engine_version;
  std::string created_at;  ///< UTC timestamp; excluded from determinism comparisons
  RunConfig config;
  int repeat = 0;
};

struct Journal {
  JournalHeader header;
  std::vector<RunRecord> records;
};

nlohmann::json header_to_json(const JournalHeader& header);
nlohmann::json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j, int input_dim);

/// Writes a header line, then one record per line, flushing after each record so
/// an interrupted run leaves a readable prefix.
class JournalWriter {
 public:
  JournalWriter(const std::string& path, const JournalHeader& header);
  void append(const RunRecord& record);

 private:
  std::ofstream out_;
};

Journal read_journal(const std::string& path);

/// Runs `config` once (config.seed is the run seed) and journals every completed
/// evaluation to `path`. Returns the records in completion order.
std::vector<RunRecord> run_to_journal(const RunConfig& config, int repeat, const std::string& path,
                                      const RecordSink& progress = {});

/// Journal file name used by the CLI for one run.
std::string journal_file_name(const RunConfig& config);

struct ReplayReport {
  bool ok = true;
  std::size_t suggestions_checked = 0;
  std::optional<std::size_t> divergence;  ///< suggestion index of the first mismatch
  std::string message;
};

/// Re-derives every suggestion from the recorded seed, config and outcomes.
ReplayReport replay(const Journal& journal);

/// Writes `<prefix>_incumbent.csv` (evaluation,suggestion,incumbent) and
/// `<prefix>_values.csv` (evaluation,suggestion,value). Invalid outcomes are
/// written as `invalid`; evaluations before the first valid one have incumbent `none`.
void write_trace(const Journal& journal, const std::string& prefix);

/// Shortest round-trip decimal form, independent of the C locale.
std::string format_double(double v);

}  // namespace dngo
