#include "dngo/journal.hpp"

#include "dngo/random.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <map>
#include <sstream>

#ifndef DNGO_VERSION
#define DNGO_VERSION "unknown"
#endif

namespace dngo {

using nlohmann::json;

std::string engine_version() { return DNGO_VERSION; }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const json& j, int dim, const char* key) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw std::invalid_argument(std::string(key) + " must be an array of " + std::to_string(dim) + " numbers");
  }
  Vector v(dim);
  for (int i = 0; i < dim; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw std::invalid_argument(std::string(key) + " must hold numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing key '") + key + "'");
  return *it;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

json header_to_json(const JournalHeader& h) {
  return json{{"type", "header"},
              {"schema_version", h.schema_version},
              {"engine_version", h.engine_version},
              {"created_at", h.created_at},
              {"repeat", h.repeat},
              {"config", to_json(h.config)}};
}

json record_to_json(const RunRecord& r) {
  return json{{"type", "record"},
              {"iteration", r.iteration},
              {"x_native", vector_to_json(r.x_native)},
              {"x_unit", vector_to_json(r.x_unit)},
              {"valid", r.outcome.is_valid()},
              {"y", r.outcome.is_valid() ? json(r.outcome.y()) : json(nullptr)},
              {"wall_time", r.wall_time},
              {"pending_count_at_suggest", r.pending_at_suggest},
              {"incumbent", r.incumbent ? json(*r.incumbent) : json(nullptr)}};
}

RunRecord record_from_json(const json& j, int input_dim) {
  if (!j.is_object() || field(j, "type") != "record") throw std::invalid_argument("expected a record object");
  RunRecord r;
  r.iteration = field(j, "iteration").get<std::size_t>();
  r.x_native = vector_from_json(field(j, "x_native"), input_dim, "x_native");
  r.x_unit = vector_from_json(field(j, "x_unit"), input_dim, "x_unit");
  const bool valid = field(j, "valid").get<bool>();
  const json& y = field(j, "y");
  if (valid) {
    if (!y.is_number()) throw std::invalid_argument("valid record needs a numeric y");
    r.outcome = Outcome::value(y.get<double>());
  } else {
    if (!y.is_null()) throw std::invalid_argument("invalid record must have y = null");
    r.outcome = Outcome::invalid();
  }
  r.wall_time = field(j, "wall_time").get<double>();
  r.pending_at_suggest = field(j, "pending_count_at_suggest").get<std::size_t>();
  const json& inc = field(j, "incumbent");
  if (!inc.is_null()) r.incumbent = inc.get<double>();
  return r;
}

JournalWriter::JournalWriter(const std::string& path, const JournalHeader& header) : out_(path, std::ios::binary) {
  if (!out_) throw Error("cannot open journal '" + path + "' for writing");
  JournalHeader h = header;
  if (h.engine_version.empty()) h.engine_version = engine_version();
  if (h.created_at.empty()) h.created_at = utc_now();
  out_ << header_to_json(h).dump() << '\n';
  out_.flush();
}

void JournalWriter::append(const RunRecord& record) {
  out_ << record_to_json(record).dump() << '\n';
  out_.flush();
  if (!out_) throw Error("journal write failed");
}

Journal read_journal(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw JournalError(0, "cannot open journal '" + path + "'");
  Journal journal;
  std::string line;
  std::size_t lineno = 0;
  int dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) throw JournalError(lineno, "empty line");
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw JournalError(lineno, std::string("malformed record (") + e.what() + ")");
    }
    try {
      if (lineno == 1) {
        if (!j.is_object() || j.value("type", "") != "header") throw std::invalid_argument("first line must be the header");
        JournalHeader& h = journal.header;
        h.schema_version = field(j, "schema_version").get<int>();
        if (h.schema_version != kJournalSchemaVersion) {
          throw std::invalid_argument("unsupported schema version " + std::to_string(h.schema_version));
        }
        h.engine_version = field(j, "engine_version").get<std::string>();
        h.created_at = field(j, "created_at").get<std::string>();
        h.repeat = field(j, "repeat").get<int>();
        h.config = parse_run_config(field(j, "config"));
        dim = make_problem(h.config.problem, 0.0, 0).space.size();
      } else {
        journal.records.push_back(record_from_json(j, dim));
      }
    } catch (const JournalError&) {
      throw;
    } catch (const std::exception& e) {
      throw JournalError(lineno, e.what());
    }
  }
  if (lineno == 0) throw JournalError(0, "journal '" + path + "' is empty");
  if (!in.eof()) throw JournalError(lineno + 1, "read error");
  return journal;
}

std::vector<RunRecord> run_to_journal(const RunConfig& config, int repeat, const std::string& path,
                                      const RecordSink& progress) {
  config.validate();
  JournalHeader header;
  header.config = config;
  header.config.repeats = 1;
  header.repeat = repeat;
  JournalWriter writer(path, header);
  const Problem problem = make_problem(config.problem, config.noise, derive_seed(config.seed, 0x6e6f697365ULL));
  return run(problem, config.engine, config.budget, config.parallelism, config.seed, [&](const RunRecord& rec) {
    writer.append(rec);
    if (progress) progress(rec);
  });
}

std::string journal_file_name(const RunConfig& config) {
  return config.problem + "_seed" + std::to_string(config.seed) + ".jsonl";
}

ReplayReport replay(const Journal& journal) {
  ReplayReport report;
  const JournalHeader& h = journal.header;
  if (h.engine_version != engine_version()) {
    throw JournalError(1, "journal written by engine " + h.engine_version + ", this is " + engine_version());
  }
  const RunConfig& cfg = h.config;
  Optimizer opt(make_problem(cfg.problem, 0.0, 0).space, cfg.engine, cfg.seed);
  opt.set_logger({});

  std::map<std::size_t, const RunRecord*> by_index;
  for (const auto& r : journal.records) {
    if (!by_index.emplace(r.iteration, &r).second) {
      report.ok = false;
      report.message = "duplicate record for suggestion " + std::to_string(r.iteration);
      return report;
    }
  }

  auto check_next = [&]() {
    const Suggestion s = opt.suggest();
    auto it = by_index.find(s.index);
    if (it == by_index.end()) return true;  // run ended before this suggestion completed
    const RunRecord& r = *it->second;
    ++report.suggestions_checked;
    if (s.x_unit != r.x_unit || s.x_native != r.x_native || s.pending_before != r.pending_at_suggest) {
      report.ok = false;
      report.divergence = s.index;
      std::ostringstream msg;
      msg << "suggestion " << s.index << " diverges: recorded x_unit [";
      for (Eigen::Index k = 0; k < r.x_unit.size(); ++k) msg << (k ? ", " : "") << format_double(r.x_unit[k]);
      msg << "], replayed [";
      for (Eigen::Index k = 0; k < s.x_unit.size(); ++k) msg << (k ? ", " : "") << format_double(s.x_unit[k]);
      msg << "]";
      if (s.pending_before != r.pending_at_suggest) {
        msg << ", pending " << r.pending_at_suggest << " vs " << s.pending_before;
      }
      report.message = msg.str();
      return false;
    }
    return true;
  };

  const auto budget = static_cast<std::size_t>(cfg.budget);
  const auto first = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallelism), budget);
  for (std::size_t i = 0; i < first; ++i) {
    if (!check_next()) return report;
  }
  for (const auto& r : journal.records) {
    opt.observe(r.x_native, r.outcome);
    if (opt.suggestions_issued() < budget && !check_next()) return report;
  }
  report.message = "OK: " + std::to_string(report.suggestions_checked) + " suggestions reproduced";
  return report;
}

void write_trace(const Journal& journal, const std::string& prefix) {
  if (journal.records.empty()) throw Error("journal has no records to trace");
  std::ofstream inc(prefix + "_incumbent.csv", std::ios::binary);
  std::ofstream val(prefix + "_values.csv", std::ios::binary);
  if (!inc || !val) throw Error("cannot open trace files with prefix '" + prefix + "'");
  inc << "evaluation,suggestion,incumbent\n";
  val << "evaluation,suggestion,value\n";
  std::optional<double> best;
  std::size_t n = 0;
  for (const auto& r : journal.records) {
    ++n;
    if (r.outcome.is_valid() && (!best || r.outcome.y() < *best)) best = r.outcome.y();
    inc << n << ',' << r.iteration << ',' << (best ? format_double(*best) : "none") << '\n';
    val << n << ',' << r.iteration << ',' << (r.outcome.is_valid() ? format_double(r.outcome.y()) : "invalid") << '\n';
  }
  if (!inc || !val) throw Error("trace write failed");
}

}  // namespace dngo
