#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace finforge {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

enum class ProviderMode { http, stub };

struct ProviderConfig {
    ProviderMode mode = ProviderMode::stub;
    std::string endpoint;
    std::string auth_token;  // env-sourced; must never reach logs or outputs
    double timeout_seconds = 30.0;
    std::size_t retries = 2;  // re-attempts after the first try
    std::size_t batch_size = 16;

    void validate() const;  // throws ConfigError
};

// Reads endpoint from the named env var (e.g. "FINFORGE_EMBED_URL") and the
// token from FINFORGE_API_TOKEN; mode=http iff the endpoint is set.
ProviderConfig provider_config_from_env(const char* url_env);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    // One vector per input text, all the same dimension.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

class LogprobProvider {
public:
    virtual ~LogprobProvider() = default;
    // Per-token log-probabilities of continuation given context.
    virtual std::vector<std::pair<std::string, double>> token_logprobs(
        const std::string& context, const std::string& continuation) = 0;
};

enum class Verdict { first, second, tie };

const char* to_string(Verdict v);

class JudgeProvider {
public:
    virtual ~JudgeProvider() = default;
    // reference is an optional ground-truth hint; HTTP judges ignore it.
    virtual Verdict judge_pair(const std::string& prompt, const std::string& answer_a,
                               const std::string& answer_b,
                               const std::string& reference = std::string()) = 0;
};

struct ChatMessage {
    std::string role;  // "user" | "assistant"
    std::string content;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string chat_complete(const std::string& system,
                                      const std::vector<ChatMessage>& messages) = 0;
};

// --- Deterministic offline stubs ---------------------------------------

// 256-dim vector of hashed codepoint-trigram counts, L2-normalized. Texts
// shorter than 3 codepoints hash as a single whole-text feature. Empty
// text is an error.
class StubEmbedder : public EmbeddingProvider {
public:
    static constexpr std::size_t kDim = 256;

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
};

// Character-bigram LM with Laplace smoothing. Sequences are BOS-prefixed;
// the alphabet is every distinct training codepoint plus UNK. Frozen at the
// first scoring call: observing new text afterwards is an error, keeping
// scores stable across a run.
class StubBigramLm : public LogprobProvider {
public:
    void observe(const std::string& text);

    std::vector<std::pair<std::string, double>> token_logprobs(
        const std::string& context, const std::string& continuation) override;

    bool frozen() const { return frozen_; }

private:
    std::map<char32_t, std::map<char32_t, std::int64_t>> transitions_;
    std::map<char32_t, std::int64_t> context_totals_;
    std::map<char32_t, std::size_t> alphabet_;  // codepoint -> index (UNK excluded)
    bool frozen_ = false;
    mutable std::mutex mutex_;

    double log_prob(char32_t context_cp, char32_t next_cp) const;
};

// Prefers the answer with the larger set of codepoint trigrams shared with
// the reference; equal overlap is a tie. An empty reference compares
// against the prompt instead.
class StubJudge : public JudgeProvider {
public:
    Verdict judge_pair(const std::string& prompt, const std::string& answer_a,
                       const std::string& answer_b,
                       const std::string& reference = std::string()) override;
};

// Fixture-driven chat: responses looked up by a stable hash of the whole
// conversation (system + ordered messages). Missing key is an error naming
// the hash so fixtures can be extended.
class ScriptedChat : public ChatProvider {
public:
    static std::uint64_t conversation_key(const std::string& system,
                                          const std::vector<ChatMessage>& messages);

    void add(const std::string& system, const std::vector<ChatMessage>& messages,
             const std::string& response);
    void load_script(const std::string& path);  // JSON: {"<hex key>": "response"}

    std::string chat_complete(const std::string& system,
                              const std::vector<ChatMessage>& messages) override;

private:
    std::map<std::uint64_t, std::string> script_;
};

// Echoes the content of the last user message.
class EchoChat : public ChatProvider {
public:
    std::string chat_complete(const std::string& system,
                              const std::vector<ChatMessage>& messages) override;
};

// --- HTTP clients -------------------------------------------------------

// Seam for tests: posts JSON to url path, returns (status, body).
using HttpPoster =
    std::function<std::pair<int, std::string>(const std::string& endpoint,
                                              const std::string& body,
                                              const ProviderConfig& cfg)>;

// Seam for tests: backoff sleeper (milliseconds).
using Sleeper = std::function<void(std::int64_t)>;

// POSTs JSON with retry/backoff (exactly cfg.retries re-attempts;
// exponential backoff base 250 ms, cap 8 s). Default poster uses a real
// HTTP client; default sleeper really sleeps.
std::string post_json_with_retry(const ProviderConfig& cfg, const std::string& body,
                                 const HttpPoster& poster = {},
                                 const Sleeper& sleeper = {});

class HttpEmbedder : public EmbeddingProvider {
public:
    explicit HttpEmbedder(ProviderConfig cfg, HttpPoster poster = {},
                          Sleeper sleeper = {});
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    ProviderConfig cfg_;
    HttpPoster poster_;
    Sleeper sleeper_;
};

class HttpLogprobLm : public LogprobProvider {
public:
    explicit HttpLogprobLm(ProviderConfig cfg, HttpPoster poster = {},
                           Sleeper sleeper = {});
    std::vector<std::pair<std::string, double>> token_logprobs(
        const std::string& context, const std::string& continuation) override;

private:
    ProviderConfig cfg_;
    HttpPoster poster_;
    Sleeper sleeper_;
};

class HttpChat : public ChatProvider {
public:
    explicit HttpChat(ProviderConfig cfg, HttpPoster poster = {}, Sleeper sleeper = {});
    std::string chat_complete(const std::string& system,
                              const std::vector<ChatMessage>& messages) override;

private:
    ProviderConfig cfg_;
    HttpPoster poster_;
    Sleeper sleeper_;
};

// Judges by posting a constrained-verdict template through a chat endpoint;
// the reply must contain FIRST, SECOND, or TIE.
class HttpJudge : public JudgeProvider {
public:
    explicit HttpJudge(ProviderConfig cfg, HttpPoster poster = {}, Sleeper sleeper = {});
    Verdict judge_pair(const std::string& prompt, const std::string& answer_a,
                       const std::string& answer_b,
                       const std::string& reference = std::string()) override;

private:
    ProviderConfig cfg_;
    HttpPoster poster_;
    Sleeper sleeper_;
};

}  // namespace finforge
