#include "dngo/config.hpp"

#include "dngo/error.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace dngo {

using nlohmann::json;

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh_all:
      return "tanh_all";
    case Activation::relu_then_tanh:
      return "relu_then_tanh";
    case Activation::relu_all:
      return "relu_all";
  }
  return "tanh_all";
}

std::string to_string(SurrogateKind s) { return s == SurrogateKind::gp ? "gp" : "dngo"; }

std::string to_string(ConstraintLikelihood c) {
  return c == ConstraintLikelihood::step_approx ? "step_approx" : "logistic";
}

Activation parse_activation(const std::string& s) {
  if (s == "tanh_all") return Activation::tanh_all;
  if (s == "relu_then_tanh") return Activation::relu_then_tanh;
  if (s == "relu_all") return Activation::relu_all;
  throw std::invalid_argument("unknown activation '" + s + "' (tanh_all, relu_then_tanh, relu_all)");
}

SurrogateKind parse_surrogate(const std::string& s) {
  if (s == "dngo") return SurrogateKind::dngo;
  if (s == "gp") return SurrogateKind::gp;
  throw std::invalid_argument("unknown surrogate '" + s + "' (dngo, gp)");
}

ConstraintLikelihood parse_constraint_likelihood(const std::string& s) {
  if (s == "logistic") return ConstraintLikelihood::logistic;
  if (s == "step_approx") return ConstraintLikelihood::step_approx;
  throw std::invalid_argument("unknown constraint likelihood '" + s + "' (logistic, step_approx)");
}

namespace {

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  void read(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      const auto value = v->get<std::int64_t>();
      if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max()) fail(key, "out of range");
      out = static_cast<int>(value);
    }
  }
  void read(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }
  void read(const char* key, std::vector<int>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "expected an array of integers");
      std::vector<int> tmp;
      for (const auto& e : *v) {
        if (!e.is_number_integer()) fail(key, "expected an array of integers");
        tmp.push_back(e.get<int>());
      }
      out = std::move(tmp);
    }
  }
  template <class Enum, class Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    std::string s;
    if (!j_.contains(key)) return;
    read(key, s);
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  }
  const json* child(const char* key) { return take(key); }
  std::string path(const char* key) const { return join(path_, key); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(join(path_, item.key()), "unknown key");
    }
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[noreturn]] void fail(const char* key, const std::string& msg) const { throw ConfigError(join(path_, key), msg); }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
void validated(const std::string& key, F&& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  const auto names = problem_names();
  if (std::find(names.begin(), names.end(), problem) == names.end()) {
    throw ConfigError("problem", "unknown problem '" + problem + "'");
  }
  if (budget < 1) throw ConfigError("budget", "must be >= 1");
  if (parallelism < 1) throw ConfigError("parallelism", "must be >= 1");
  if (parallelism > budget) throw ConfigError("parallelism", "must not exceed budget");
  if (!(noise >= 0.0)) throw ConfigError("noise", "must be >= 0");
  if (repeats < 1) throw ConfigError("repeats", "must be >= 1");
  if (engine.initial_design < 0) throw ConfigError("initial_design", "must be >= 0");
  validated("network", [&] { engine.network.validate(); });
  validated("sampler", [&] {
    engine.sampler.validate();
    if (engine.sampler.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  });
  validated("acquisition", [&] {
    engine.inner.validate();
    if (engine.n_fantasies < 1) throw std::invalid_argument("n_fantasies must be >= 1");
  });
  validated("constraint", [&] {
    engine.constraint.validate();
    if (engine.constraint_epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  });
}

RunConfig parse_run_config(const json& patch, RunConfig c) {
  Section root(patch, "");
  root.read("problem", c.problem);
  root.read("budget", c.budget);
  root.read("parallelism", c.parallelism);
  root.read("seed", c.seed);
  root.read("noise", c.noise);
  root.read("repeats", c.repeats);
  root.read("initial_design", c.engine.initial_design);
  root.read_enum("surrogate", c.engine.surrogate, parse_surrogate);

  if (const json* j = root.child("network")) {
    Section s(*j, "network");
    auto& n = c.engine.network;
    s.read("layer_widths", n.layer_widths);
    s.read_enum("activation", n.activation, parse_activation);
    s.read("l2_penalty", n.l2_penalty);
    s.read("learning_rate", n.learning_rate);
    s.read("momentum", n.momentum);
    s.read("epochs", n.epochs);
    s.read("batch_size", n.batch_size);
    s.read("full_batch_limit", n.full_batch_limit);
    s.finish();
  }
  if (const json* j = root.child("sampler")) {
    Section s(*j, "sampler");
    auto& m = c.engine.sampler;
    s.read("burn_in", m.burn_in);
    s.read("n_samples", m.n_samples);
    s.read("thinning", m.thinning);
    s.read("width", m.width);
    s.finish();
  }
  if (const json* j = root.child("acquisition")) {
    Section s(*j, "acquisition");
    auto& a = c.engine.inner;
    s.read("n_fantasies", c.engine.n_fantasies);
    s.read("n_candidates", a.n_candidates);
    s.read("n_local", a.n_local);
    s.read("local_sweeps", a.local_sweeps);
    s.read("initial_step", a.initial_step);
    s.read("min_step", a.min_step);
    s.read("n_incumbent_candidates", a.n_incumbent_candidates);
    s.read("incumbent_radius", a.incumbent_radius);
    s.finish();
  }
  if (const json* j = root.child("constraint")) {
    Section s(*j, "constraint");
    auto& k = c.engine.constraint;
    s.read("weight_prior_precision", k.weight_prior_precision);
    s.read_enum("likelihood", k.likelihood, parse_constraint_likelihood);
    s.read("step_temperature", k.step_temperature);
    s.read("epochs", c.engine.constraint_epochs);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ConfigError("", path + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
  return parse_run_config(j, std::move(base));
}

json to_json(const RunConfig& c) {
  const auto& e = c.engine;
  return json{
      {"problem", c.problem},
      {"budget", c.budget},
      {"parallelism", c.parallelism},
      {"seed", c.seed},
      {"noise", c.noise},
      {"repeats", c.repeats},
      {"initial_design", e.initial_design},
      {"surrogate", to_string(e.surrogate)},
      {"network",
       {{"layer_widths", e.network.layer_widths},
        {"activation", to_string(e.network.activation)},
        {"l2_penalty", e.network.l2_penalty},
        {"learning_rate", e.network.learning_rate},
        {"momentum", e.network.momentum},
        {"epochs", e.network.epochs},
        {"batch_size", e.network.batch_size},
        {"full_batch_limit", e.network.full_batch_limit}}},
      {"sampler",
       {{"burn_in", e.sampler.burn_in},
        {"n_samples", e.sampler.n_samples},
        {"thinning", e.sampler.thinning},
        {"width", e.sampler.width}}},
      {"acquisition",
       {{"n_fantasies", e.n_fantasies},
        {"n_candidates", e.inner.n_candidates},
        {"n_local", e.inner.n_local},
        {"local_sweeps", e.inner.local_sweeps},
        {"initial_step", e.inner.initial_step},
        {"min_step", e.inner.min_step},
        {"n_incumbent_candidates", e.inner.n_incumbent_candidates},
        {"incumbent_radius", e.inner.incumbent_radius}}},
      {"constraint",
       {{"weight_prior_precision", e.constraint.weight_prior_precision},
        {"likelihood", to_string(e.constraint.likelihood)},
        {"step_temperature", e.constraint.step_temperature},
        {"epochs", e.constraint_epochs}}},
  };
}

}  // namespace dngo
