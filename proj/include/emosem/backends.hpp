#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emosem {

enum class BackendKind { http, mock };

/// Connection settings for one external service. Secrets are never stored
/// here, only the name of the environment variable that holds them.
struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string endpoint_url;  // http only
  std::string api_key_env;   // empty: no Authorization header
  /// Model id for http; mock flavor otherwise ("fixture", "rule",
  /// "scripted", "hashbow").
  std::string model_name;
  double timeout_seconds = 30.0;
  int max_retries = 3;
  double temperature = 0.0;  // LLM only
  /// First retry delay; doubles per retry, capped at timeout_seconds.
  double backoff_initial_seconds = 1.0;
  /// Mock transcriber: JSON object mapping locator -> transcript.
  std::string fixture_path;

  friend bool operator==(const BackendConfig&, const BackendConfig&) = default;
};

/// Throws ErrorCode::config when timeout <= 0, retries < 0 or an http
/// backend lacks an endpoint.
void validate(const BackendConfig& cfg);

/// Parses the CLI shorthand "mock-rule", "mock-random", "mock-fixture",
/// "mock-hashbow" or "http".
BackendConfig backend_from_shorthand(std::string_view shorthand);

struct TranscriptionResult {
  std::string text;
  std::string backend_id;
};

class Transcriber {
 public:
  virtual ~Transcriber() = default;
  virtual TranscriptionResult transcribe(std::string_view audio_ref) const = 0;
  virtual std::string id() const = 0;
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  /// Raw completion text; never parsed here.
  virtual std::string complete(std::string_view prompt) const = 0;
  virtual std::string id() const = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// Unit-L2 vector, or the zero vector when the text has no tokens.
  virtual std::vector<double> embed(std::string_view text) const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string id() const = 0;
};

// ---------------------------------------------------------------- mocks

/// Resolves locators through a fixed map.
class FixtureTranscriber final : public Transcriber {
 public:
  explicit FixtureTranscriber(std::map<std::string, std::string> fixtures)
      : fixtures_(std::move(fixtures)) {}
  static FixtureTranscriber from_file(const std::string& path);

  TranscriptionResult transcribe(std::string_view audio_ref) const override;
  std::string id() const override { return "mock-fixture"; }

 private:
  std::map<std::string, std::string> fixtures_;
};

/// Segments the fenced transcript of a segmentation prompt with
/// rule_based_segment and answers in the prompt's output format.
class RuleMockLanguageModel final : public LanguageModel {
 public:
  std::string complete(std::string_view prompt) const override;
  std::string id() const override { return "mock-rule"; }
};

/// Like RuleMockLanguageModel but assigns sentences with random_segment,
/// seeded by the transcript hash.
class RandomMockLanguageModel final : public LanguageModel {
 public:
  explicit RandomMockLanguageModel(std::uint64_t seed = 0) : seed_(seed) {}
  std::string complete(std::string_view prompt) const override;
  std::string id() const override;

 private:
  std::uint64_t seed_;
};

/// Replays canned completions in order, repeating the last one.
class ScriptedLanguageModel final : public LanguageModel {
 public:
  explicit ScriptedLanguageModel(std::vector<std::string> completions);
  std::string complete(std::string_view prompt) const override;
  std::string id() const override { return "mock-scripted"; }
  std::size_t calls() const;

 private:
  std::vector<std::string> completions_;
  mutable std::atomic<std::size_t> next_{0};
};

inline constexpr std::size_t kHashEmbeddingDim = 512;
inline constexpr std::uint64_t kHashEmbeddingSeed = 0x5EED5EED5EED5EEDULL;

/// Hashed bag of words: each normalized unigram adds 1 to bucket
/// fnv1a64(word, kFnvOffsetBasis ^ kHashEmbeddingSeed) % 512, then the
/// vector is L2-normalized.
class HashingEmbedder final : public Embedder {
 public:
  std::vector<double> embed(std::string_view text) const override;
  std::size_t dimension() const override { return kHashEmbeddingDim; }
  std::string id() const override { return "mock-hashbow"; }
};

// ----------------------------------------------------------------- http

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Thrown by transports for connection-level failures.
struct TransportFailure {
  std::string message;
  bool timed_out = false;
};

/// POSTs a JSON body. Implementations throw TransportFailure when no HTTP
/// response was obtained.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& url, const std::string& body,
                                 const std::map<std::string, std::string>& headers,
                                 double timeout_seconds) const = 0;
};

/// cpp-httplib backed transport.
std::shared_ptr<HttpTransport> default_http_transport();

using Sleeper = std::function<void(double seconds)>;

/// Sends requests with the retry policy: transport failures, 429 and 5xx
/// are retried up to cfg.max_retries times with exponential backoff;
/// 401/403 raise ErrorCode::authentication immediately.
class HttpClient {
 public:
  HttpClient(BackendConfig cfg, std::shared_ptr<HttpTransport> transport,
             Sleeper sleeper = {});

  /// Returns the response body of the first successful attempt; the
  /// number of attempts made is stored in *attempts when given.
  std::string post(const std::string& body, int* attempts = nullptr) const;
  const BackendConfig& config() const { return cfg_; }

 private:
  BackendConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
};

/// Request {"audio": locator, "model_name"}; response {"text"}.
class HttpTranscriber final : public Transcriber {
 public:
  explicit HttpTranscriber(HttpClient client) : client_(std::move(client)) {}
  TranscriptionResult transcribe(std::string_view audio_ref) const override;
  std::string id() const override;

 private:
  HttpClient client_;
};

/// Request {"prompt", "model_name", "temperature"}; response {"text"}.
class HttpLanguageModel final : public LanguageModel {
 public:
  explicit HttpLanguageModel(HttpClient client) : client_(std::move(client)) {}
  std::string complete(std::string_view prompt) const override;
  std::string id() const override;

 private:
  HttpClient client_;
};

/// Request {"text", "model_name"}; response {"embedding": [...]}. The first
/// response fixes the dimension; later mismatches are errors.
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(HttpClient client) : client_(std::move(client)) {}
  std::vector<double> embed(std::string_view text) const override;
  std::size_t dimension() const override;
  std::string id() const override;

 private:
  HttpClient client_;
  mutable std::atomic<std::size_t> dimension_{0};
};

// ------------------------------------------------------------ factories

std::unique_ptr<Transcriber> make_transcriber(const BackendConfig& cfg);
std::unique_ptr<LanguageModel> make_language_model(const BackendConfig& cfg);
std::unique_ptr<Embedder> make_embedder(const BackendConfig& cfg);

TranscriptionResult transcribe(std::string_view audio_ref, const BackendConfig& cfg);
std::string complete(std::string_view prompt, const BackendConfig& cfg);
std::vector<double> embed(std::string_view text, const BackendConfig& cfg);

/// Word-level Levenshtein distance (unit costs) over normalized words,
/// divided by the reference word count. Throws ErrorCode::empty_reference.
double word_error_rate(std::string_view hypothesis, std::string_view reference);

/// Edit distance between word sequences; the WER numerator.
std::size_t word_edit_distance(const std::vector<std::string>& hypothesis,
                               const std::vector<std::string>& reference);

}  // namespace emosem
