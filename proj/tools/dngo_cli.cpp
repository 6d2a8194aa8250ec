#include "dngo/config.hpp"
#include "dngo/error.hpp"
#include "dngo/journal.hpp"
#include "dngo/optimizer.hpp"
#include "dngo/timing.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Flag values collected before the config file is known; applied on top of it.
struct RunFlags {
  std::string config_path;
  std::string problem;
  int budget = 0;
  int parallelism = 0;
  std::uint64_t seed = 0;
  double noise = 0.0;
  int repeats = 0;
  std::string surrogate;
  std::string activation;
  int epochs = 0;
  int n_samples = 0;
  int fantasies = 0;
  int candidates = 0;
  std::string out_dir = ".";
  bool quiet = false;
};

dngo::RunConfig resolve_run_config(const RunFlags& f, const CLI::App& cmd) {
  dngo::RunConfig cfg = f.config_path.empty() ? dngo::RunConfig{} : dngo::load_run_config(f.config_path);
  nlohmann::json patch = nlohmann::json::object();
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--problem")) patch["problem"] = f.problem;
  if (given("--budget")) patch["budget"] = f.budget;
  if (given("--parallelism")) patch["parallelism"] = f.parallelism;
  if (given("--seed")) patch["seed"] = f.seed;
  if (given("--noise")) patch["noise"] = f.noise;
  if (given("--repeats")) patch["repeats"] = f.repeats;
  if (given("--surrogate")) patch["surrogate"] = f.surrogate;
  if (given("--activation")) patch["network"]["activation"] = f.activation;
  if (given("--epochs")) patch["network"]["epochs"] = f.epochs;
  if (given("--n-samples")) patch["sampler"]["n_samples"] = f.n_samples;
  if (given("--fantasies")) patch["acquisition"]["n_fantasies"] = f.fantasies;
  if (given("--candidates")) patch["acquisition"]["n_candidates"] = f.candidates;
  return dngo::parse_run_config(patch, cfg);
}

int cmd_run(const RunFlags& flags, const CLI::App& cmd) {
  const dngo::RunConfig base = resolve_run_config(flags, cmd);
  std::filesystem::create_directories(flags.out_dir);
  std::vector<double> bests;
  for (int r = 0; r < base.repeats; ++r) {
    dngo::RunConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(r);
    cfg.repeats = 1;
    const std::string path = (std::filesystem::path(flags.out_dir) / dngo::journal_file_name(cfg)).string();
    std::vector<std::optional<double>> trajectory;
    dngo::run_to_journal(cfg, r, path, [&](const dngo::RunRecord& rec) {
      trajectory.push_back(rec.incumbent);
      if (!flags.quiet && (trajectory.size() % 10 == 0)) {
        std::cerr << "  [" << cfg.problem << " seed " << cfg.seed << "] " << trajectory.size() << "/" << cfg.budget
                  << " incumbent " << (rec.incumbent ? dngo::format_double(*rec.incumbent) : "none") << '\n';
      }
    });

    std::cout << "run " << r << " seed " << cfg.seed << " journal " << path << '\n';
    std::cout << "  incumbent at 25/50/75/100%:";
    for (int q = 1; q <= 4; ++q) {
      const auto idx = static_cast<std::size_t>(std::max(1, cfg.budget * q / 4)) - 1;
      std::cout << ' ' << (trajectory[idx] ? dngo::format_double(*trajectory[idx]) : "none");
    }
    std::cout << '\n';
    if (trajectory.back()) {
      std::cout << "  best " << dngo::format_double(*trajectory.back()) << '\n';
      bests.push_back(*trajectory.back());
    } else {
      std::cout << "  best none (no valid observation)\n";
    }
  }
  if (base.repeats > 1 && !bests.empty()) {
    double mean = 0;
    for (double b : bests) mean += b;
    mean /= static_cast<double>(bests.size());
    double var = 0;
    for (double b : bests) var += (b - mean) * (b - mean);
    const double sd = bests.size() > 1 ? std::sqrt(var / static_cast<double>(bests.size() - 1)) : 0.0;
    std::cout << "best over " << bests.size() << " runs: " << dngo::format_double(mean) << " +- "
              << dngo::format_double(sd) << '\n';
  }
  return kExitOk;
}

int cmd_timing(const std::string& surrogate, const std::vector<int>& sizes, int dim, int repeats, std::uint64_t seed,
               const std::string& config_path, const std::string& out_path) {
  dngo::TimingConfig tc;
  if (!config_path.empty()) tc.engine = dngo::load_run_config(config_path).engine;
  try {
    tc.engine.surrogate = dngo::parse_surrogate(surrogate);
    tc.sizes = sizes;
    tc.dim = dim;
    tc.repeats = repeats;
    tc.seed = seed;
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw dngo::ConfigError("timing", e.what());
  }
  const auto rows = dngo::run_timing(tc, [](const dngo::TimingRow& r) {
    std::cerr << "  " << r.surrogate << " N=" << r.n << " repeat " << r.repeat << ": " << r.seconds << " s\n";
  });
  if (out_path.empty() || out_path == "-") {
    dngo::write_timing_csv(std::cout, rows);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw dngo::Error("cannot write '" + out_path + "'");
    dngo::write_timing_csv(out, rows);
  }
  if (tc.sizes.size() >= 2) {
    std::cerr << "log-log slope (" << surrogate << "): " << dngo::format_double(dngo::loglog_slope(rows)) << '\n';
  }
  return kExitOk;
}

int cmd_replay(const std::vector<std::string>& paths) {
  int status = kExitOk;
  for (const auto& path : paths) {
    try {
      const auto report = dngo::replay(dngo::read_journal(path));
      std::cout << path << ": " << (report.ok ? "" : "DIVERGED: ") << report.message << '\n';
      if (!report.ok) status = kExitRuntime;
    } catch (const dngo::JournalError& e) {
      std::cout << path << ": ERROR: " << e.what() << '\n';
      status = kExitRuntime;
    }
  }
  return status;
}

int cmd_trace(const std::string& path, std::string prefix) {
  const auto journal = dngo::read_journal(path);
  if (prefix.empty()) prefix = (std::filesystem::path(path).parent_path() / std::filesystem::path(path).stem()).string();
  dngo::write_trace(journal, prefix);
  std::cout << "wrote " << prefix << "_incumbent.csv and " << prefix << "_values.csv (" << journal.records.size()
            << " rows)\n";
  return kExitOk;
}

int cmd_list_problems() {
  std::cout << "name,dimensions,known_optimum\n";
  for (const auto& name : dngo::problem_names()) {
    const auto p = dngo::make_problem(name, 0.0, 0);
    std::cout << name << ',' << p.space.size() << ','
              << (p.known_optimum ? dngo::format_double(*p.known_optimum) : "unknown") << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization with neural-network basis functions"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Run closed-loop optimization and write JSONL journals");
  run->add_option("--config", rf.config_path, "JSON config file; flags override its values");
  run->add_option("--problem", rf.problem, "Benchmark problem (see list-problems)");
  run->add_option("--budget", rf.budget, "Number of completed evaluations");
  run->add_option("--parallelism", rf.parallelism, "Evaluations kept in flight");
  run->add_option("--seed", rf.seed, "Base seed; repeat r uses seed + r");
  run->add_option("--noise", rf.noise, "Standard deviation of additive Gaussian observation noise");
  run->add_option("--repeats", rf.repeats, "Number of independent runs");
  run->add_option("--surrogate", rf.surrogate, "dngo or gp");
  run->add_option("--activation", rf.activation, "tanh_all, relu_then_tanh or relu_all");
  run->add_option("--epochs", rf.epochs, "Network training epochs");
  run->add_option("--n-samples", rf.n_samples, "Hyperparameter samples per suggestion");
  run->add_option("--fantasies", rf.fantasies, "Fantasies per hyperparameter sample");
  run->add_option("--candidates", rf.candidates, "Quasi-random acquisition candidates");
  run->add_option("--out-dir", rf.out_dir, "Directory for journals")->capture_default_str();
  run->add_flag("--quiet", rf.quiet, "Suppress progress output");

  std::string t_surrogate = "dngo", t_config, t_out;
  std::vector<int> t_sizes{250, 500, 1000, 2000};
  int t_repeats = 3, t_dim = 50;
  std::uint64_t t_seed = 0;
  auto* timing = app.add_subcommand("timing", "Measure per-suggestion wall time against N");
  timing->add_option("--surrogate", t_surrogate, "dngo or gp")->capture_default_str();
  timing->add_option("--sizes", t_sizes, "Ascending dataset sizes")->delimiter(',')->capture_default_str();
  timing->add_option("--dim", t_dim, "Input dimension of the synthetic problem")->capture_default_str();
  timing->add_option("--repeats", t_repeats, "Repeats per size")->capture_default_str();
  timing->add_option("--seed", t_seed, "Seed")->capture_default_str();
  timing->add_option("--config", t_config, "JSON config file for engine settings");
  timing->add_option("--out", t_out, "CSV output path (default stdout)");

  std::vector<std::string> replay_paths;
  auto* replay = app.add_subcommand("replay", "Verify that journals replay deterministically");
  replay->add_option("journals", replay_paths, "Journal files")->required();

  std::string trace_path, trace_prefix;
  auto* trace = app.add_subcommand("trace", "Export incumbent and value traces as CSV");
  trace->add_option("journal", trace_path, "Journal file")->required();
  trace->add_option("--prefix", trace_prefix, "Output prefix (default: journal path without extension)");

  auto* list = app.add_subcommand("list-problems", "List built-in benchmark problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(rf, *run);
    if (timing->parsed()) return cmd_timing(t_surrogate, t_sizes, t_dim, t_repeats, t_seed, t_config, t_out);
    if (replay->parsed()) return cmd_replay(replay_paths);
    if (trace->parsed()) return cmd_trace(trace_path, trace_prefix);
    if (list->parsed()) return cmd_list_problems();
  } catch (const dngo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
