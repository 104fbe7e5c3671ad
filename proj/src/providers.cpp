#include "finforge/providers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "finforge/errors.hpp"
#include "finforge/hash.hpp"
#include "finforge/textutil.hpp"

namespace finforge {

using json = nlohmann::json;

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw DataError("embedding dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void ProviderConfig::validate() const {
    if (batch_size < 1) throw ConfigError("provider batch_size must be >= 1");
    if (timeout_seconds <= 0) throw ConfigError("provider timeout must be positive");
    if (mode == ProviderMode::http && endpoint.empty()) {
        throw ConfigError("http provider mode requires an endpoint");
    }
}

ProviderConfig provider_config_from_env(const char* url_env) {
    ProviderConfig cfg;
    if (const char* url = std::getenv(url_env); url && *url) {
        cfg.mode = ProviderMode::http;
        cfg.endpoint = url;
    }
    if (const char* token = std::getenv("FINFORGE_API_TOKEN"); token && *token) {
        cfg.auth_token = token;
    }
    return cfg;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::first: return "first";
        case Verdict::second: return "second";
        case Verdict::tie: return "tie";
    }
    return "tie";
}

// --- StubEmbedder -------------------------------------------------------

std::vector<EmbeddingVector> StubEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        if (text.empty()) throw DataError("cannot embed empty text");
        const auto cps = decode_utf8(text);
        EmbeddingVector v;
        v.values.assign(kDim, 0.0);
        auto bump = [&](std::u32string_view gram) {
            std::string bytes;
            for (char32_t cp : gram) append_utf8(bytes, cp);
            v.values[fnv1a64(bytes) % kDim] += 1.0;
        };
        if (cps.size() < 3) {
            bump(std::u32string(cps.begin(), cps.end()));
        } else {
            std::u32string window(cps.begin(), cps.end());
            for (std::size_t i = 0; i + 3 <= window.size(); ++i) {
                bump(std::u32string_view(window).substr(i, 3));
            }
        }
        double norm = 0.0;
        for (double x : v.values) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v.values) x /= norm;
        out.push_back(std::move(v));
    }
    return out;
}

// --- StubBigramLm -------------------------------------------------------

namespace {
constexpr char32_t kBos = 0xFFFFFFFF;  // outside Unicode range; context only
constexpr char32_t kUnk = 0xFFFFFFFE;
}  // namespace

void StubBigramLm::observe(const std::string& text) {
    std::lock_guard lock(mutex_);
    if (frozen_) {
        throw DataError("bigram stub is frozen after first scoring call");
    }
    const auto cps = decode_utf8(text);
    char32_t prev = kBos;
    for (char32_t cp : cps) {
        ++transitions_[prev][cp];
        ++context_totals_[prev];
        alphabet_.emplace(cp, alphabet_.size());
        prev = cp;
    }
}

double StubBigramLm::log_prob(char32_t context_cp, char32_t next_cp) const {
    const std::size_t vocab = alphabet_.size() + 1;  // + UNK
    if (context_cp != kBos && !alphabet_.count(context_cp)) context_cp = kUnk;
    if (next_cp != kBos && !alphabet_.count(next_cp)) next_cp = kUnk;
    std::int64_t pair_count = 0;
    std::int64_t ctx_count = 0;
    if (const auto it = transitions_.find(context_cp); it != transitions_.end()) {
        if (const auto jt = it->second.find(next_cp); jt != it->second.end()) {
            pair_count = jt->second;
        }
    }
    if (const auto it = context_totals_.find(context_cp); it != context_totals_.end()) {
        ctx_count = it->second;
    }
    return std::log(static_cast<double>(pair_count + 1) /
                    static_cast<double>(ctx_count + static_cast<std::int64_t>(vocab)));
}

std::vector<std::pair<std::string, double>> StubBigramLm::token_logprobs(
    const std::string& context, const std::string& continuation) {
    std::lock_guard lock(mutex_);
    if (continuation.empty()) throw DataError("empty continuation");
    if (alphabet_.empty()) throw DataError("bigram stub has no training data");
    frozen_ = true;
    const auto ctx_cps = decode_utf8(context);
    const auto cont_cps = decode_utf8(continuation);
    char32_t prev = ctx_cps.empty() ? kBos : ctx_cps.back();
    std::vector<std::pair<std::string, double>> out;
    out.reserve(cont_cps.size());
    for (char32_t cp : cont_cps) {
        std::string token;
        append_utf8(token, cp);
        out.emplace_back(std::move(token), log_prob(prev, cp));
        prev = cp;
    }
    return out;
}

// --- StubJudge ----------------------------------------------------------

namespace {

std::set<std::u32string> trigram_set(const std::string& text) {
    const auto cps = decode_utf8(text);
    std::set<std::u32string> grams;
    if (cps.empty()) return grams;
    if (cps.size() < 3) {
        grams.insert(std::u32string(cps.begin(), cps.end()));
        return grams;
    }
    for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
        grams.insert(std::u32string(cps.begin() + i, cps.begin() + i + 3));
    }
    return grams;
}

std::size_t overlap(const std::set<std::u32string>& a, const std::set<std::u32string>& b) {
    std::size_t n = 0;
    for (const auto& g : a) n += b.count(g);
    return n;
}

}  // namespace

Verdict StubJudge::judge_pair(const std::string& prompt, const std::string& answer_a,
                              const std::string& answer_b, const std::string& reference) {
    if (answer_a.empty() || answer_b.empty()) throw DataError("judge answers must be non-empty");
    const auto ref = trigram_set(reference.empty() ? prompt : reference);
    const std::size_t score_a = overlap(trigram_set(answer_a), ref);
    const std::size_t score_b = overlap(trigram_set(answer_b), ref);
    if (score_a > score_b) return Verdict::first;
    if (score_b > score_a) return Verdict::second;
    return Verdict::tie;
}

// --- ScriptedChat -------------------------------------------------------

std::uint64_t ScriptedChat::conversation_key(const std::string& system,
                                             const std::vector<ChatMessage>& messages) {
    std::string blob = system;
    for (const auto& m : messages) {
        blob.push_back('\x1e');
        blob += m.role;
        blob.push_back('\x1f');
        blob += m.content;
    }
    return fnv1a64(blob);
}

void ScriptedChat::add(const std::string& system, const std::vector<ChatMessage>& messages,
                       const std::string& response) {
    script_[conversation_key(system, messages)] = response;
}

void ScriptedChat::load_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open chat script: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("malformed chat script " + path + ": " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        script_[std::stoull(key, nullptr, 16)] = value.get<std::string>();
    }
}

std::string ScriptedChat::chat_complete(const std::string& system,
                                        const std::vector<ChatMessage>& messages) {
    if (messages.empty()) throw DataError("chat needs at least one message");
    const std::uint64_t key = conversation_key(system, messages);
    const auto it = script_.find(key);
    if (it == script_.end()) {
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(key));
        throw ProviderError(std::string("no scripted response for conversation key ") + hex);
    }
    return it->second;
}

std::string EchoChat::chat_complete(const std::string& system,
                                    const std::vector<ChatMessage>& messages) {
    (void)system;
    if (messages.empty()) throw DataError("chat needs at least one message");
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "user") return it->content;
    }
    return messages.back().content;
}

// --- HTTP plumbing ------------------------------------------------------

namespace {

std::pair<int, std::string> real_post(const std::string& endpoint, const std::string& body,
                                      const ProviderConfig& cfg) {
    // endpoint = scheme://host[:port]/path
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must include scheme: " + endpoint);
    }
    const auto path_start = endpoint.find('/', scheme_end + 3);
    const std::string base =
        path_start == std::string::npos ? endpoint : endpoint.substr(0, path_start);
    const std::string path =
        path_start == std::string::npos ? "/" : endpoint.substr(path_start);
    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<std::int64_t>(cfg.timeout_seconds * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<std::int64_t>(cfg.timeout_seconds * 1000)));
    httplib::Headers headers;
    if (!cfg.auth_token.empty()) {
        headers.emplace("Authorization", "Bearer " + cfg.auth_token);
    }
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) return {0, httplib::to_string(res.error())};
    return {res->status, res->body};
}

}  // namespace

std::string post_json_with_retry(const ProviderConfig& cfg, const std::string& body,
                                 const HttpPoster& poster, const Sleeper& sleeper) {
    const HttpPoster& do_post = poster ? poster : HttpPoster(real_post);
    const Sleeper& do_sleep = sleeper ? sleeper : Sleeper([](std::int64_t ms) {
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    });
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= cfg.retries; ++attempt) {
        if (attempt > 0) {
            const std::int64_t backoff =
                std::min<std::int64_t>(250LL << (attempt - 1), 8000);
            do_sleep(backoff);
        }
        try {
            const auto [status, response] = do_post(cfg.endpoint, body, cfg);
            if (status >= 200 && status < 300) return response;
            last_error = "HTTP " + std::to_string(status);
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    // The endpoint is reported; the token never is.
    throw ProviderError("provider request failed after " + std::to_string(cfg.retries) +
                        " retries (" + cfg.endpoint + "): " + last_error);
}

HttpEmbedder::HttpEmbedder(ProviderConfig cfg, HttpPoster poster, Sleeper sleeper)
    : cfg_(std::move(cfg)), poster_(std::move(poster)), sleeper_(std::move(sleeper)) {
    cfg_.validate();
}

std::vector<EmbeddingVector> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += cfg_.batch_size) {
        const std::size_t end = std::min(texts.size(), start + cfg_.batch_size);
        json req;
        req["input"] = json::array();
        for (std::size_t i = start; i < end; ++i) req["input"].push_back(texts[i]);
        const std::string body = post_json_with_retry(cfg_, req.dump(), poster_, sleeper_);
        json res;
        try {
            res = json::parse(body);
        } catch (const json::exception& e) {
            throw ProviderError(std::string("malformed embedding response: ") + e.what());
        }
        if (!res.contains("data") || !res["data"].is_array() ||
            res["data"].size() != end - start) {
            throw ProviderError("embedding response shape mismatch for batch starting at " +
                                std::to_string(start));
        }
        for (const auto& item : res["data"]) {
            EmbeddingVector v;
            for (const auto& x : item.at("embedding")) v.values.push_back(x.get<double>());
            if (!out.empty() && v.dim() != out.front().dim()) {
                throw ProviderError("embedding dimension drift across batches");
            }
            double norm = 0.0;
            for (double x : v.values) norm += x * x;
            norm = std::sqrt(norm);
            if (norm == 0.0) throw ProviderError("zero-norm embedding returned");
            for (double& x : v.values) x /= norm;
            out.push_back(std::move(v));
        }
    }
    return out;
}

HttpLogprobLm::HttpLogprobLm(ProviderConfig cfg, HttpPoster poster, Sleeper sleeper)
    : cfg_(std::move(cfg)), poster_(std::move(poster)), sleeper_(std::move(sleeper)) {
    cfg_.validate();
}

std::vector<std::pair<std::string, double>> HttpLogprobLm::token_logprobs(
    const std::string& context, const std::string& continuation) {
    if (continuation.empty()) throw DataError("empty continuation");
    json req{{"context", context}, {"continuation", continuation}};
    const std::string body = post_json_with_retry(cfg_, req.dump(), poster_, sleeper_);
    json res;
    try {
        res = json::parse(body);
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed logprob response: ") + e.what());
    }
    if (!res.contains("tokens") || !res.contains("logprobs") ||
        res["tokens"].size() != res["logprobs"].size() || res["tokens"].empty()) {
        throw ProviderError("logprob response shape mismatch");
    }
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < res["tokens"].size(); ++i) {
        out.emplace_back(res["tokens"][i].get<std::string>(),
                         res["logprobs"][i].get<double>());
    }
    return out;
}

HttpChat::HttpChat(ProviderConfig cfg, HttpPoster poster, Sleeper sleeper)
    : cfg_(std::move(cfg)), poster_(std::move(poster)), sleeper_(std::move(sleeper)) {
    cfg_.validate();
}

std::string HttpChat::chat_complete(const std::string& system,
                                    const std::vector<ChatMessage>& messages) {
    if (messages.empty()) throw DataError("chat needs at least one message");
    json req;
    req["messages"] = json::array();
    if (!system.empty()) {
        req["messages"].push_back({{"role", "system"}, {"content", system}});
    }
    for (const auto& m : messages) {
        req["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    const std::string body = post_json_with_retry(cfg_, req.dump(), poster_, sleeper_);
    try {
        const json res = json::parse(body);
        return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed chat response: ") + e.what());
    }
}

HttpJudge::HttpJudge(ProviderConfig cfg, HttpPoster poster, Sleeper sleeper)
    : cfg_(std::move(cfg)), poster_(std::move(poster)), sleeper_(std::move(sleeper)) {
    cfg_.validate();
}

Verdict HttpJudge::judge_pair(const std::string& prompt, const std::string& answer_a,
                              const std::string& answer_b, const std::string& reference) {
    (void)reference;
    if (answer_a.empty() || answer_b.empty()) throw DataError("judge answers must be non-empty");
    const std::string judging_prompt =
        "Compare the two answers to the question and reply with exactly one word: "
        "FIRST if the first answer is better, SECOND if the second is better, TIE if "
        "they are equally good.\n\nQuestion:\n" + prompt + "\n\nFirst answer:\n" +
        answer_a + "\n\nSecond answer:\n" + answer_b;
    HttpChat chat(cfg_, poster_, sleeper_);
    const std::string reply = chat.chat_complete("", {{"user", judging_prompt}});
    // Earliest verdict token in the reply wins.
    const auto first_pos = reply.find("FIRST");
    const auto second_pos = reply.find("SECOND");
    const auto tie_pos = reply.find("TIE");
    std::size_t best = std::string::npos;
    Verdict verdict = Verdict::tie;
    if (first_pos != std::string::npos) { best = first_pos; verdict = Verdict::first; }
    if (second_pos != std::string::npos && second_pos < best) {
        best = second_pos;
        verdict = Verdict::second;
    }
    if (tie_pos != std::string::npos && tie_pos < best) {
        best = tie_pos;
        verdict = Verdict::tie;
    }
    if (best == std::string::npos) {
        throw ProviderError("judge reply lacks a FIRST/SECOND/TIE verdict token");
    }
    return verdict;
}

}  // namespace finforge
