#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "emosem/error.hpp"
#include "emosem/experiment.hpp"
#include "emosem/text.hpp"

namespace emosem {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::config, msg); }

// Reads keys from one TOML table and rejects keys nobody asked for.
class TableReader {
 public:
  TableReader(const toml::table& table, std::string path)
      : table_(table), path_(std::move(path)) {}

  ~TableReader() = default;

  std::string where(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const toml::node* node(std::string_view key) {
    seen_.insert(std::string(key));
    return table_.get(key);
  }

  void read(std::string_view key, std::string& out) {
    if (const auto* n = node(key)) {
      const auto v = n->value<std::string>();
      if (!v || !n->is_string()) config_error(where(key) + " must be a string");
      out = *v;
    }
  }

  void read(std::string_view key, double& out) {
    if (const auto* n = node(key)) {
      if (n->is_floating_point()) {
        out = *n->value<double>();
      } else if (n->is_integer()) {
        out = static_cast<double>(*n->value<std::int64_t>());
      } else {
        config_error(where(key) + " must be a number");
      }
    }
  }

  template <typename Int>
    requires std::is_integral_v<Int>
  void read(std::string_view key, Int& out) {
    if (const auto* n = node(key)) {
      if (!n->is_integer()) config_error(where(key) + " must be an integer");
      const auto v = *n->value<std::int64_t>();
      if constexpr (std::is_unsigned_v<Int>) {
        if (v < 0) config_error(where(key) + " must be >= 0");
      }
      out = static_cast<Int>(v);
    }
  }

  void read(std::string_view key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    if (table_.contains(key)) {
      read(key, s);
      out = resolve(s, base);
    } else {
      seen_.insert(std::string(key));
    }
  }

  const toml::array* array(std::string_view key) {
    if (const auto* n = node(key)) {
      if (!n->is_array()) config_error(where(key) + " must be an array");
      return n->as_array();
    }
    return nullptr;
  }

  const toml::table* table(std::string_view key) {
    if (const auto* n = node(key)) {
      if (!n->is_table()) config_error(where(key) + " must be a table");
      return n->as_table();
    }
    return nullptr;
  }

  void reject_unknown() const {
    for (const auto& [k, v] : table_) {
      if (!seen_.contains(std::string(k.str()))) {
        config_error("unknown config key '" + where(k.str()) + "'");
      }
    }
  }

  static std::filesystem::path resolve(const std::string& s, const std::filesystem::path& base) {
    std::filesystem::path p(s);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p;
  }

 private:
  const toml::table& table_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_backend(TableReader& parent, std::string_view name, BackendConfig& cfg,
                  const std::filesystem::path& base) {
  const auto* t = parent.table(name);
  if (!t) return;
  TableReader r(*t, parent.where(name));
  std::string kind;
  r.read("kind", kind);
  if (!kind.empty()) {
    if (kind == "mock") {
      cfg.kind = BackendKind::mock;
    } else if (kind == "http") {
      cfg.kind = BackendKind::http;
    } else {
      config_error(r.where("kind") + " must be \"mock\" or \"http\", got \"" + kind + "\"");
    }
  }
  r.read("endpoint_url", cfg.endpoint_url);
  r.read("api_key_env", cfg.api_key_env);
  r.read("model_name", cfg.model_name);
  r.read("timeout_seconds", cfg.timeout_seconds);
  r.read("max_retries", cfg.max_retries);
  r.read("temperature", cfg.temperature);
  r.read("backoff_initial_seconds", cfg.backoff_initial_seconds);
  std::string fixture;
  r.read("fixture_path", fixture);
  if (!fixture.empty()) cfg.fixture_path = TableReader::resolve(fixture, base).string();
  r.reject_unknown();
}

void read_hyper(TableReader& parent, std::string_view name, Hyperparameters& h) {
  const auto* t = parent.table(name);
  if (!t) return;
  TableReader r(*t, parent.where(name));
  r.read("learning_rate", h.learning_rate);
  r.read("l2", h.l2);
  r.read("max_epochs", h.max_epochs);
  r.read("grad_tolerance", h.grad_tolerance);
  r.reject_unknown();
}

ordered_json backend_json(const BackendConfig& b) {
  return {{"kind", b.kind == BackendKind::http ? "http" : "mock"},
          {"endpoint_url", b.endpoint_url},
          {"api_key_env", b.api_key_env},
          {"model_name", b.model_name},
          {"timeout_seconds", b.timeout_seconds},
          {"max_retries", b.max_retries},
          {"temperature", b.temperature},
          {"backoff_initial_seconds", b.backoff_initial_seconds},
          {"fixture_path", b.fixture_path}};
}

ordered_json hyper_json(const Hyperparameters& h) {
  return {{"learning_rate", h.learning_rate},
          {"l2", h.l2},
          {"max_epochs", h.max_epochs},
          {"grad_tolerance", h.grad_tolerance}};
}

}  // namespace

void validate(const ExperimentConfig& c) {
  if (c.seeds.empty()) config_error("seeds must list at least one seed");
  if (c.conditions.empty()) config_error("conditions must list at least one condition");
  std::set<Condition> conds(c.conditions.begin(), c.conditions.end());
  if (conds.size() != c.conditions.size()) config_error("conditions contains duplicates");
  std::set<std::uint64_t> seeds(c.seeds.begin(), c.seeds.end());
  if (seeds.size() != c.seeds.size()) config_error("seeds contains duplicates");
  if (c.threshold < 1 || c.threshold > 6) config_error("threshold must be in [1,6]");
  if (c.parallelism < 1) config_error("parallelism must be >= 1");
  if (c.figure_participants < 0) config_error("figures.participants must be >= 0");
  if (c.output_dir.empty()) config_error("output_dir must not be empty");
  if (!(c.segmenter.coverage_threshold >= 0.0 && c.segmenter.coverage_threshold <= 1.0)) {
    config_error("segmenter.coverage_threshold must be in [0,1]");
  }
  if (c.segmenter.max_retries < 0) config_error("segmenter.max_retries must be >= 0");
  for (const auto* h : {&c.hyper_intended, &c.hyper_evoked, &c.hyper_va}) {
    if (!(h->learning_rate > 0.0)) config_error("hyper.*.learning_rate must be > 0");
    if (!(h->l2 >= 0.0)) config_error("hyper.*.l2 must be >= 0");
    if (h->max_epochs < 0) config_error("hyper.*.max_epochs must be >= 0");
  }
  try {
    validate(c.asr);
    validate(c.llm);
    validate(c.embed);
    if (c.corpus_path.empty()) validate(c.synth);
  } catch (const Error& e) {
    config_error(e.what());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();

  toml::table root;
  try {
    root = toml::parse(buf.str(), path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config file '" << path.string() << "' line " << e.source().begin.line << ": "
        << e.description();
    config_error(msg.str());
  }

  const auto base = path.parent_path();
  ExperimentConfig c;
  TableReader r(root, "");
  r.read("corpus", c.corpus_path, base);
  std::string out;
  r.read("output_dir", out);
  if (!out.empty()) c.output_dir = out;
  r.read("threshold", c.threshold);
  r.read("parallelism", c.parallelism);
  r.read("min_df", c.min_df);
  r.read("max_features", c.max_features);
  std::string tie;
  r.read("tie_rule", tie);
  if (!tie.empty()) {
    if (tie == "favor_intended") {
      c.tie_rule = HighestTieRule::favor_intended;
    } else if (tie == "strict") {
      c.tie_rule = HighestTieRule::strict;
    } else {
      config_error("tie_rule must be \"favor_intended\" or \"strict\"");
    }
  }
  if (const auto* a = r.array("seeds")) {
    c.seeds.clear();
    for (const auto& n : *a) {
      const auto v = n.value<std::int64_t>();
      if (!n.is_integer() || *v < 0) config_error("seeds must be non-negative integers");
      c.seeds.push_back(static_cast<std::uint64_t>(*v));
    }
  }
  if (const auto* a = r.array("conditions")) {
    c.conditions.clear();
    for (const auto& n : *a) {
      const auto v = n.value<std::string>();
      if (!n.is_string()) config_error("conditions must be strings");
      try {
        c.conditions.push_back(condition_from_string(*v));
      } catch (const Error& e) {
        config_error(std::string("conditions: ") + e.what());
      }
    }
  }
  if (const auto* a = r.array("human_segments")) {
    for (const auto& n : *a) {
      if (!n.is_string()) config_error("human_segments must be strings");
      c.human_segments.push_back(TableReader::resolve(*n.value<std::string>(), base));
    }
  }
  if (const auto* t = r.table("synth")) {
    TableReader s(*t, "synth");
    s.read("n_participants", c.synth.n_participants);
    s.read("clips_per_emotion", c.synth.clips_per_emotion);
    s.read("descriptive_signal", c.synth.descriptive_signal);
    s.read("expressive_signal", c.synth.expressive_signal);
    s.read("evoked_noise", c.synth.evoked_noise);
    s.read("seed", c.synth.seed);
    s.read("min_descriptive_sentences", c.synth.min_descriptive_sentences);
    s.read("max_descriptive_sentences", c.synth.max_descriptive_sentences);
    s.read("max_expressive_sentences", c.synth.max_expressive_sentences);
    s.reject_unknown();
  }
  if (const auto* t = r.table("backends")) {
    TableReader b(*t, "backends");
    read_backend(b, "asr", c.asr, base);
    read_backend(b, "llm", c.llm, base);
    read_backend(b, "embed", c.embed, base);
    b.reject_unknown();
  }
  if (const auto* t = r.table("segmenter")) {
    TableReader s(*t, "segmenter");
    s.read("coverage_threshold", c.segmenter.coverage_threshold);
    s.read("max_retries", c.segmenter.max_retries);
    s.reject_unknown();
  }
  if (const auto* t = r.table("hyper")) {
    TableReader h(*t, "hyper");
    read_hyper(h, "intended", c.hyper_intended);
    read_hyper(h, "evoked", c.hyper_evoked);
    read_hyper(h, "va", c.hyper_va);
    h.reject_unknown();
  }
  if (const auto* t = r.table("figures")) {
    TableReader f(*t, "figures");
    f.read("participants", c.figure_participants);
    f.reject_unknown();
  }
  r.reject_unknown();
  validate(c);
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["corpus"] = c.corpus_path.generic_string();
  j["synth"] = {{"n_participants", c.synth.n_participants},
                {"clips_per_emotion", c.synth.clips_per_emotion},
                {"descriptive_signal", c.synth.descriptive_signal},
                {"expressive_signal", c.synth.expressive_signal},
                {"evoked_noise", c.synth.evoked_noise},
                {"seed", c.synth.seed},
                {"min_descriptive_sentences", c.synth.min_descriptive_sentences},
                {"max_descriptive_sentences", c.synth.max_descriptive_sentences},
                {"max_expressive_sentences", c.synth.max_expressive_sentences}};
  j["backends"] = {{"asr", backend_json(c.asr)},
                   {"llm", backend_json(c.llm)},
                   {"embed", backend_json(c.embed)}};
  j["segmenter"] = {{"coverage_threshold", c.segmenter.coverage_threshold},
                    {"max_retries", c.segmenter.max_retries}};
  j["threshold"] = c.threshold;
  j["hyper"] = {{"intended", hyper_json(c.hyper_intended)},
                {"evoked", hyper_json(c.hyper_evoked)},
                {"va", hyper_json(c.hyper_va)}};
  j["min_df"] = c.min_df;
  j["max_features"] = c.max_features;
  j["seeds"] = c.seeds;
  ordered_json conds = ordered_json::array();
  for (auto cond : c.conditions) conds.push_back(to_string(cond));
  j["conditions"] = conds;
  ordered_json human = ordered_json::array();
  for (const auto& p : c.human_segments) human.push_back(p.generic_string());
  j["human_segments"] = human;
  j["tie_rule"] = c.tie_rule == HighestTieRule::strict ? "strict" : "favor_intended";
  // output_dir, parallelism and figure count do not change metric values.
  return j.dump();
}

std::string experiment_config_hash(const ExperimentConfig& c) {
  return text::hex64(text::fnv1a64(config_to_json(c)));
}

}  // namespace emosem
