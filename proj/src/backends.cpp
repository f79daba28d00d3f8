#include "emosem/backends.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "emosem/error.hpp"
#include "emosem/segmenter.hpp"
#include "emosem/text.hpp"

namespace emosem {

using json = nlohmann::json;

void validate(const BackendConfig& cfg) {
  if (!(cfg.timeout_seconds > 0.0)) {
    throw Error(ErrorCode::config, "backend timeout_seconds must be > 0");
  }
  if (cfg.max_retries < 0) throw Error(ErrorCode::config, "backend max_retries must be >= 0");
  if (cfg.backoff_initial_seconds < 0.0) {
    throw Error(ErrorCode::config, "backend backoff_initial_seconds must be >= 0");
  }
  if (cfg.kind == BackendKind::http && cfg.endpoint_url.empty()) {
    throw Error(ErrorCode::config, "http backend requires endpoint_url");
  }
}

BackendConfig backend_from_shorthand(std::string_view shorthand) {
  BackendConfig cfg;
  if (shorthand == "http") {
    cfg.kind = BackendKind::http;
    return cfg;
  }
  for (std::string_view flavor : {"rule", "random", "fixture", "hashbow"}) {
    if (shorthand.size() == 5 + flavor.size() && shorthand.starts_with("mock-") &&
        shorthand.ends_with(flavor)) {
      cfg.kind = BackendKind::mock;
      cfg.model_name = std::string(flavor);
      return cfg;
    }
  }
  throw Error(ErrorCode::config,
              "unknown backend '" + std::string(shorthand) +
                  "' (expected http, mock-rule, mock-random, mock-fixture or mock-hashbow)");
}

// ---------------------------------------------------------------- mocks

FixtureTranscriber FixtureTranscriber::from_file(const std::string& path) {
  if (path.empty()) return FixtureTranscriber({});
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open transcription fixtures '" + path + "'");
  try {
    return FixtureTranscriber(json::parse(in).get<std::map<std::string, std::string>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, "fixtures '" + path + "': " + e.what());
  }
}

TranscriptionResult FixtureTranscriber::transcribe(std::string_view audio_ref) const {
  auto it = fixtures_.find(std::string(audio_ref));
  if (it == fixtures_.end()) {
    throw Error(ErrorCode::unresolvable_locator,
                "mock transcriber cannot resolve locator '" + std::string(audio_ref) + "'");
  }
  return {it->second, id()};
}

namespace {

// The transcript sits between the last pair of "####" fence lines.
std::string_view fenced_transcript(std::string_view prompt) {
  const auto close = prompt.rfind("\n####");
  if (close == std::string_view::npos || close == 0) return prompt;
  const auto open = prompt.rfind("####\n", close - 1);
  if (open == std::string_view::npos) return prompt;
  const auto start = open + 5;
  return start <= close ? prompt.substr(start, close - start) : std::string_view{};
}

}  // namespace

std::string RuleMockLanguageModel::complete(std::string_view prompt) const {
  return render_segmentation(rule_based_segment(fenced_transcript(prompt)));
}

std::string RandomMockLanguageModel::complete(std::string_view prompt) const {
  const auto transcript = fenced_transcript(prompt);
  return render_segmentation(random_segment(transcript, text::fnv1a64(transcript) ^ seed_));
}

std::string RandomMockLanguageModel::id() const {
  return "mock-random-" + std::to_string(seed_);
}

ScriptedLanguageModel::ScriptedLanguageModel(std::vector<std::string> completions)
    : completions_(std::move(completions)) {
  if (completions_.empty()) {
    throw Error(ErrorCode::config, "scripted language model needs at least one completion");
  }
}

std::string ScriptedLanguageModel::complete(std::string_view) const {
  const std::size_t i = next_++;
  return completions_[std::min(i, completions_.size() - 1)];
}

std::size_t ScriptedLanguageModel::calls() const { return next_; }

std::vector<double> HashingEmbedder::embed(std::string_view text_in) const {
  std::vector<double> v(kHashEmbeddingDim, 0.0);
  for (const auto& w : text::words(text_in)) {
    const auto h = text::fnv1a64(w, text::kFnvOffsetBasis ^ kHashEmbeddingSeed);
    v[h % kHashEmbeddingDim] += 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

// ----------------------------------------------------------------- http

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::config, "endpoint_url '" + url + "' has no scheme");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post_json(const std::string& url, const std::string& body,
                         const std::map<std::string, std::string>& headers,
                         double timeout_seconds) const override {
    const auto parts = split_url(url);
    httplib::Client client(parts.scheme_host_port);
    const auto secs = static_cast<time_t>(timeout_seconds);
    const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);

    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(parts.path, hdrs, body, "application/json");
    if (!result) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      const auto err = result.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             (err == httplib::Error::Read && elapsed >= 0.9 * timeout_seconds);
      throw TransportFailure{httplib::to_string(err), timed_out};
    }
    return {result->status, result->body};
  }
};

std::string format_seconds(double s) {
  std::ostringstream out;
  out << s;
  return out.str();
}

}  // namespace

std::shared_ptr<HttpTransport> default_http_transport() {
  return std::make_shared<HttplibTransport>();
}

HttpClient::HttpClient(BackendConfig cfg, std::shared_ptr<HttpTransport> transport,
                       Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  validate(cfg_);
  if (!transport_) transport_ = default_http_transport();
  if (!sleeper_) {
    sleeper_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
  }
}

std::string HttpClient::post(const std::string& body, int* attempts) const {
  std::map<std::string, std::string> headers;
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (!key || !*key) {
      throw Error(ErrorCode::authentication,
                  "environment variable " + cfg_.api_key_env + " holding the API key is not set");
    }
    headers["Authorization"] = std::string("Bearer ") + key;
  }

  const int total = 1 + cfg_.max_retries;
  double delay = cfg_.backoff_initial_seconds;
  std::string last_failure;
  for (int attempt = 1; attempt <= total; ++attempt) {
    if (attempts) *attempts = attempt;
    try {
      const HttpResponse resp =
          transport_->post_json(cfg_.endpoint_url, body, headers, cfg_.timeout_seconds);
      if (resp.status >= 200 && resp.status < 300) return resp.body;
      if (resp.status == 401 || resp.status == 403) {
        throw Error(ErrorCode::authentication, cfg_.endpoint_url + " rejected credentials (HTTP " +
                                                   std::to_string(resp.status) + ")");
      }
      last_failure = "HTTP " + std::to_string(resp.status);
      if (resp.status != 429 && resp.status < 500) {
        throw Error(ErrorCode::transport,
                    cfg_.endpoint_url + " returned " + last_failure + ": " + resp.body);
      }
    } catch (const TransportFailure& f) {
      last_failure = f.timed_out
                         ? "request timed out after " + format_seconds(cfg_.timeout_seconds) +
                               " s (timeout_seconds)"
                         : f.message;
    }
    if (attempt < total) {
      sleeper_(std::min(delay, cfg_.timeout_seconds));
      delay *= 2.0;
    }
  }
  throw Error(ErrorCode::transport, cfg_.endpoint_url + " failed after " + std::to_string(total) +
                                        " attempt(s): " + last_failure);
}

namespace {

json parse_response(const std::string& body, const std::string& endpoint) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::transport, endpoint + " returned invalid JSON: " + e.what());
  }
}

std::string response_text(const json& j, const std::string& endpoint) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw Error(ErrorCode::transport, endpoint + " response lacks a string 'text' field");
  }
  return j["text"].get<std::string>();
}

}  // namespace

TranscriptionResult HttpTranscriber::transcribe(std::string_view audio_ref) const {
  const auto& cfg = client_.config();
  json req{{"audio", std::string(audio_ref)}, {"model_name", cfg.model_name}};
  const auto text_out = response_text(parse_response(client_.post(req.dump()), cfg.endpoint_url),
                                      cfg.endpoint_url);
  if (text::trim(text_out).empty()) {
    throw Error(ErrorCode::transport, cfg.endpoint_url + " returned an empty transcription for '" +
                                          std::string(audio_ref) + "'");
  }
  return {text_out, id()};
}

std::string HttpTranscriber::id() const { return "http:" + client_.config().model_name; }

std::string HttpLanguageModel::complete(std::string_view prompt) const {
  if (prompt.empty()) throw Error(ErrorCode::config, "prompt must be non-empty");
  const auto& cfg = client_.config();
  json req{{"prompt", std::string(prompt)},
           {"model_name", cfg.model_name},
           {"temperature", cfg.temperature}};
  auto text_out = response_text(parse_response(client_.post(req.dump()), cfg.endpoint_url),
                                cfg.endpoint_url);
  if (text_out.empty()) {
    throw Error(ErrorCode::empty_completion, cfg.endpoint_url + " returned an empty completion");
  }
  return text_out;
}

std::string HttpLanguageModel::id() const { return "http:" + client_.config().model_name; }

std::vector<double> HttpEmbedder::embed(std::string_view text_in) const {
  const auto& cfg = client_.config();
  json req{{"text", std::string(text_in)}, {"model_name", cfg.model_name}};
  const auto j = parse_response(client_.post(req.dump()), cfg.endpoint_url);
  if (!j.is_object() || !j.contains("embedding") || !j["embedding"].is_array()) {
    throw Error(ErrorCode::transport, cfg.endpoint_url + " response lacks an 'embedding' array");
  }
  auto v = j["embedding"].get<std::vector<double>>();
  std::size_t expected = 0;
  if (!dimension_.compare_exchange_strong(expected, v.size()) && expected != v.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                cfg.endpoint_url + " returned dimension " + std::to_string(v.size()) +
                    ", expected " + std::to_string(expected));
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::size_t HttpEmbedder::dimension() const { return dimension_; }

std::string HttpEmbedder::id() const { return "http:" + client_.config().model_name; }

// ------------------------------------------------------------ factories

std::unique_ptr<Transcriber> make_transcriber(const BackendConfig& cfg) {
  validate(cfg);
  if (cfg.kind == BackendKind::http) {
    return std::make_unique<HttpTranscriber>(HttpClient(cfg, default_http_transport()));
  }
  if (cfg.model_name.empty() || cfg.model_name == "fixture") {
    return std::make_unique<FixtureTranscriber>(FixtureTranscriber::from_file(cfg.fixture_path));
  }
  throw Error(ErrorCode::config, "unknown mock transcriber '" + cfg.model_name + "'");
}

std::unique_ptr<LanguageModel> make_language_model(const BackendConfig& cfg) {
  validate(cfg);
  if (cfg.kind == BackendKind::http) {
    return std::make_unique<HttpLanguageModel>(HttpClient(cfg, default_http_transport()));
  }
  if (cfg.model_name.empty() || cfg.model_name == "rule") {
    return std::make_unique<RuleMockLanguageModel>();
  }
  if (cfg.model_name == "random") return std::make_unique<RandomMockLanguageModel>();
  throw Error(ErrorCode::config, "unknown mock language model '" + cfg.model_name + "'");
}

std::unique_ptr<Embedder> make_embedder(const BackendConfig& cfg) {
  validate(cfg);
  if (cfg.kind == BackendKind::http) {
    return std::make_unique<HttpEmbedder>(HttpClient(cfg, default_http_transport()));
  }
  if (cfg.model_name.empty() || cfg.model_name == "hashbow") {
    return std::make_unique<HashingEmbedder>();
  }
  throw Error(ErrorCode::config, "unknown mock embedder '" + cfg.model_name + "'");
}

TranscriptionResult transcribe(std::string_view audio_ref, const BackendConfig& cfg) {
  return make_transcriber(cfg)->transcribe(audio_ref);
}

std::string complete(std::string_view prompt, const BackendConfig& cfg) {
  return make_language_model(cfg)->complete(prompt);
}

std::vector<double> embed(std::string_view text_in, const BackendConfig& cfg) {
  return make_embedder(cfg)->embed(text_in);
}

// ------------------------------------------------------------------ WER

std::size_t word_edit_distance(const std::vector<std::string>& hyp,
                               const std::vector<std::string>& ref) {
  // Rolling-row Levenshtein with unit substitution/insertion/deletion costs.
  std::vector<std::size_t> prev(ref.size() + 1);
  std::vector<std::size_t> cur(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

double word_error_rate(std::string_view hypothesis, std::string_view reference) {
  const auto ref = text::words(reference);
  if (ref.empty()) {
    throw Error(ErrorCode::empty_reference, "reference has no words after normalization");
  }
  const auto hyp = text::words(hypothesis);
  return static_cast<double>(word_edit_distance(hyp, ref)) / static_cast<double>(ref.size());
}

}  // namespace emosem
