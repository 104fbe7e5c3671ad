#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "finforge/errors.hpp"
#include "finforge/hash.hpp"
#include "finforge/providers.hpp"

using namespace finforge;
using json = nlohmann::json;

namespace {

double l2_norm(const EmbeddingVector& v) {
    double s = 0.0;
    for (double x : v.values) s += x * x;
    return std::sqrt(s);
}

// Poster seam that replays canned (status, body) responses and records
// every request.
struct FakePoster {
    std::vector<std::pair<int, std::string>> responses;
    std::size_t next = 0;
    std::vector<std::string> bodies;
    std::vector<std::string> endpoints;

    HttpPoster fn() {
        return [this](const std::string& endpoint, const std::string& body,
                      const ProviderConfig&) {
            bodies.push_back(body);
            endpoints.push_back(endpoint);
            if (next >= responses.size()) return std::make_pair(500, std::string("spent"));
            return responses[next++];
        };
    }
};

struct FakeSleeper {
    std::vector<std::int64_t> slept;

    Sleeper fn() {
        return [this](std::int64_t ms) { slept.push_back(ms); };
    }
};

ProviderConfig http_cfg(std::size_t retries = 0, std::size_t batch = 16) {
    ProviderConfig cfg;
    cfg.mode = ProviderMode::http;
    cfg.endpoint = "http://provider.test/v1";
    cfg.auth_token = "sk-verysecret";
    cfg.retries = retries;
    cfg.batch_size = batch;
    return cfg;
}

std::string embed_body(const std::vector<std::vector<double>>& vecs) {
    json res;
    res["data"] = json::array();
    for (const auto& v : vecs) res["data"].push_back({{"embedding", v}});
    return res.dump();
}

std::string chat_body(const std::string& content) {
    return json{{"choices", {{{"message", {{"content", content}}}}}}}.dump();
}

}  // namespace

TEST_CASE("cosine_similarity") {
    const EmbeddingVector a{{1.0, 0.0}}, b{{0.0, 1.0}}, c{{2.0, 0.0}};
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
    CHECK(cosine_similarity(a, c) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, EmbeddingVector{{0.0, 0.0}}) == 0.0);
    CHECK_THROWS_AS(cosine_similarity(a, EmbeddingVector{{1.0, 2.0, 3.0}}), DataError);
}

TEST_CASE("StubEmbedder: deterministic unit vectors over codepoint trigrams") {
    StubEmbedder emb;
    const auto out = emb.embed({"市盈率等于股价除以每股收益", "市盈率等于股价除以每股收益",
                                "自由现金流折现给出内在价值"});
    REQUIRE(out.size() == 3);
    for (const auto& v : out) {
        CHECK(v.dim() == StubEmbedder::kDim);
        CHECK(l2_norm(v) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(cosine_similarity(out[0], out[1]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity(out[0], out[2]) < 0.5);
}

TEST_CASE("StubEmbedder: short text hashes as one whole-text feature") {
    StubEmbedder emb;
    const auto v = emb.embed({"ab"})[0];
    // fnv1a64("ab") = 0x089c4407b545986a; low byte selects the bucket
    CHECK(v.values[0x6a] == doctest::Approx(1.0));
    std::size_t nonzero = 0;
    for (double x : v.values) nonzero += x != 0.0;
    CHECK(nonzero == 1);
    CHECK_THROWS_AS(emb.embed({""}), DataError);
}

TEST_CASE("StubBigramLm: Laplace-smoothed golden") {
    StubBigramLm lm;
    lm.observe("aa");
    // alphabet {a} + UNK, BOS->a seen once: P(a|BOS) = (1+1)/(1+2)
    const auto lp = lm.token_logprobs("", "a");
    REQUIRE(lp.size() == 1);
    CHECK(lp[0].first == "a");
    CHECK(lp[0].second == doctest::Approx(-0.40546510810816444).epsilon(1e-15));

    // chain: second token conditions on the first; P(a|a) = (1+1)/(1+2) too
    const auto chain = lm.token_logprobs("", "aa");
    REQUIRE(chain.size() == 2);
    CHECK(chain[1].second == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-15));

    // unseen codepoints collapse to UNK: P(UNK|BOS) = (0+1)/(1+2)
    const auto unk = lm.token_logprobs("", "b");
    CHECK(unk[0].second == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-15));

    // context conditions the first continuation token
    const auto ctx = lm.token_logprobs("a", "a");
    CHECK(ctx[0].second == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-15));
}

TEST_CASE("StubBigramLm: freezes at first scoring call") {
    StubBigramLm lm;
    lm.observe("市盈率");
    lm.observe("市净率");  // observing more before scoring is fine
    CHECK_FALSE(lm.frozen());
    lm.token_logprobs("市", "盈");
    CHECK(lm.frozen());
    CHECK_THROWS_WITH_AS(lm.observe("新样本"),
                         "bigram stub is frozen after first scoring call", DataError);
}

TEST_CASE("StubBigramLm: input validation") {
    StubBigramLm lm;
    CHECK_THROWS_AS(lm.token_logprobs("ctx", "x"), DataError);  // no training data
    lm.observe("ab");
    CHECK_THROWS_AS(lm.token_logprobs("ctx", ""), DataError);  // empty continuation
}

TEST_CASE("StubJudge: trigram overlap against reference, prompt as fallback") {
    StubJudge judge;
    const std::string ref = "市盈率等于股价除以每股收益";
    CHECK(judge.judge_pair("问", "市盈率等于股价除以每股收益", "随便写点别的东西", ref) ==
          Verdict::first);
    CHECK(judge.judge_pair("问", "随便写点别的东西", "市盈率等于股价除以每股收益", ref) ==
          Verdict::second);
    CHECK(judge.judge_pair("问", "同一个答案文本", "同一个答案文本", ref) == Verdict::tie);
    // empty reference: compare against the prompt instead
    CHECK(judge.judge_pair("市盈率等于股价除以每股收益", "市盈率等于股价除以每股收益",
                           "不相关的文字内容") == Verdict::first);
    CHECK_THROWS_AS(judge.judge_pair("p", "", "b"), DataError);
}

TEST_CASE("ScriptedChat: keyed replay and miss diagnostics") {
    ScriptedChat chat;
    const std::vector<ChatMessage> msgs{{"user", "你好"}};
    chat.add("sys", msgs, "回复");
    CHECK(chat.chat_complete("sys", msgs) == "回复");

    // role is part of the key
    const std::vector<ChatMessage> alt{{"assistant", "你好"}};
    CHECK(ScriptedChat::conversation_key("sys", msgs) !=
          ScriptedChat::conversation_key("sys", alt));

    char expect[32];
    std::snprintf(expect, sizeof(expect), "%016llx",
                  static_cast<unsigned long long>(ScriptedChat::conversation_key("sys", alt)));
    try {
        chat.chat_complete("sys", alt);
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(std::string(e.what()).find(expect) != std::string::npos);
    }
    CHECK_THROWS_AS(chat.chat_complete("sys", {}), DataError);
}

TEST_CASE("ScriptedChat: load_script round-trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "finforge_script_test";
    fs::create_directories(dir);
    const fs::path path = dir / "script.json";

    const std::vector<ChatMessage> msgs{{"user", "问题"}};
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(
                      ScriptedChat::conversation_key("s", msgs)));
    {
        std::ofstream out(path);
        out << json{{hex, "脚本回复"}}.dump();
    }
    ScriptedChat chat;
    chat.load_script(path.string());
    CHECK(chat.chat_complete("s", msgs) == "脚本回复");

    {
        std::ofstream out(path);
        out << "{not json";
    }
    CHECK_THROWS_AS(chat.load_script(path.string()), DataError);
    CHECK_THROWS_AS(chat.load_script((dir / "absent.json").string()), DataError);
    fs::remove_all(dir);
}

TEST_CASE("EchoChat returns the last user message") {
    EchoChat echo;
    CHECK(echo.chat_complete("sys", {{"user", "第一"}, {"assistant", "草稿"},
                                     {"user", "第二"}}) == "第二");
    CHECK(echo.chat_complete("sys", {{"user", "唯一"}, {"assistant", "尾巴"}}) == "唯一");
    CHECK_THROWS_AS(echo.chat_complete("sys", {}), DataError);
}

TEST_CASE("post_json_with_retry: success paths and backoff schedule") {
    FakeSleeper sleeper;
    SUBCASE("first try succeeds, no sleeping") {
        FakePoster poster{{{200, "ok"}}};
        CHECK(post_json_with_retry(http_cfg(3), "{}", poster.fn(), sleeper.fn()) == "ok");
        CHECK(poster.bodies.size() == 1);
        CHECK(sleeper.slept.empty());
    }
    SUBCASE("5xx retried with exponential backoff") {
        FakePoster poster{{{500, "boom"}, {503, "busy"}, {200, "fine"}}};
        CHECK(post_json_with_retry(http_cfg(3), "{}", poster.fn(), sleeper.fn()) == "fine");
        CHECK(sleeper.slept == std::vector<std::int64_t>{250, 500});
    }
    SUBCASE("backoff doubles and caps at 8000 ms") {
        FakePoster poster;  // always 500
        CHECK_THROWS_AS(post_json_with_retry(http_cfg(7), "{}", poster.fn(), sleeper.fn()),
                        ProviderError);
        CHECK(sleeper.slept ==
              std::vector<std::int64_t>{250, 500, 1000, 2000, 4000, 8000, 8000});
        CHECK(poster.bodies.size() == 8);  // 1 try + 7 retries
    }
}

TEST_CASE("post_json_with_retry: failure names the endpoint, never the token") {
    FakePoster poster{{{500, "x"}}};
    FakeSleeper sleeper;
    const auto cfg = http_cfg(1);
    try {
        post_json_with_retry(cfg, "{}", poster.fn(), sleeper.fn());
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        const std::string msg = e.what();
        CHECK(msg.find(cfg.endpoint) != std::string::npos);
        CHECK(msg.find("HTTP 500") != std::string::npos);
        CHECK(msg.find(cfg.auth_token) == std::string::npos);
    }

    // a throwing poster surfaces its message after retries
    FakeSleeper s2;
    const HttpPoster bad = [](const std::string&, const std::string&,
                              const ProviderConfig&) -> std::pair<int, std::string> {
        throw std::runtime_error("connection refused");
    };
    CHECK_THROWS_WITH_AS(
        post_json_with_retry(http_cfg(0), "{}", bad, s2.fn()),
        "provider request failed after 0 retries (http://provider.test/v1): "
        "connection refused",
        ProviderError);
}

TEST_CASE("HttpEmbedder: batching, request shape, renormalization") {
    FakePoster poster{{
        {200, embed_body({{3.0, 4.0}, {1.0, 0.0}})},
        {200, embed_body({{0.0, 2.0}, {5.0, 12.0}})},
        {200, embed_body({{1.0, 1.0}})},
    }};
    FakeSleeper sleeper;
    HttpEmbedder emb(http_cfg(0, 2), poster.fn(), sleeper.fn());
    const auto out = emb.embed({"一", "二", "三", "四", "五"});
    REQUIRE(out.size() == 5);
    REQUIRE(poster.bodies.size() == 3);
    CHECK(json::parse(poster.bodies[0])["input"] == json({"一", "二"}));
    CHECK(json::parse(poster.bodies[2])["input"] == json({"五"}));
    CHECK(out[0].values[0] == doctest::Approx(0.6));  // [3,4] renormalized
    CHECK(out[0].values[1] == doctest::Approx(0.8));
    for (const auto& v : out) CHECK(l2_norm(v) == doctest::Approx(1.0).epsilon(1e-12));
    // the auth token must not appear in request bodies
    for (const auto& b : poster.bodies) CHECK(b.find("sk-verysecret") == std::string::npos);
}

TEST_CASE("HttpEmbedder: response validation") {
    FakeSleeper sleeper;
    SUBCASE("count mismatch") {
        FakePoster poster{{{200, embed_body({{1.0, 0.0}})}}};
        HttpEmbedder emb(http_cfg(0), poster.fn(), sleeper.fn());
        CHECK_THROWS_AS(emb.embed({"a", "b"}), ProviderError);
    }
    SUBCASE("dimension drift across batches") {
        FakePoster poster{{{200, embed_body({{1.0, 0.0}})},
                           {200, embed_body({{1.0, 0.0, 0.0}})}}};
        HttpEmbedder emb(http_cfg(0, 1), poster.fn(), sleeper.fn());
        CHECK_THROWS_AS(emb.embed({"a", "b"}), ProviderError);
    }
    SUBCASE("zero-norm vector") {
        FakePoster poster{{{200, embed_body({{0.0, 0.0}})}}};
        HttpEmbedder emb(http_cfg(0), poster.fn(), sleeper.fn());
        CHECK_THROWS_AS(emb.embed({"a"}), ProviderError);
    }
    SUBCASE("malformed json") {
        FakePoster poster{{{200, "not json"}}};
        HttpEmbedder emb(http_cfg(0), poster.fn(), sleeper.fn());
        CHECK_THROWS_AS(emb.embed({"a"}), ProviderError);
    }
}

TEST_CASE("HttpLogprobLm: request and response contract") {
    FakePoster poster{{{200, json{{"tokens", {"市", "盈"}},
                                  {"logprobs", {-0.5, -1.25}}}.dump()}}};
    FakeSleeper sleeper;
    HttpLogprobLm lm(http_cfg(0), poster.fn(), sleeper.fn());
    const auto out = lm.token_logprobs("上下文", "市盈");
    REQUIRE(out.size() == 2);
    CHECK(out[0] == std::pair<std::string, double>{"市", -0.5});
    CHECK(out[1].second == -1.25);
    const json req = json::parse(poster.bodies.at(0));
    CHECK(req["context"] == "上下文");
    CHECK(req["continuation"] == "市盈");

    CHECK_THROWS_AS(lm.token_logprobs("c", ""), DataError);

    FakePoster bad{{{200, json{{"tokens", {"a"}}, {"logprobs", {-1.0, -2.0}}}.dump()}}};
    HttpLogprobLm lm2(http_cfg(0), bad.fn(), sleeper.fn());
    CHECK_THROWS_AS(lm2.token_logprobs("c", "a"), ProviderError);
}

TEST_CASE("HttpChat: message array shape and content extraction") {
    FakePoster poster{{{200, chat_body("答复")}, {200, chat_body("再答")}}};
    FakeSleeper sleeper;
    HttpChat chat(http_cfg(0), poster.fn(), sleeper.fn());
    CHECK(chat.chat_complete("系统", {{"user", "问"}}) == "答复");
    json req = json::parse(poster.bodies.at(0));
    REQUIRE(req["messages"].size() == 2);
    CHECK(req["messages"][0]["role"] == "system");
    CHECK(req["messages"][0]["content"] == "系统");
    CHECK(req["messages"][1]["role"] == "user");

    // empty system prompt is omitted
    chat.chat_complete("", {{"user", "问"}});
    req = json::parse(poster.bodies.at(1));
    REQUIRE(req["messages"].size() == 1);
    CHECK(req["messages"][0]["role"] == "user");

    FakePoster bad{{{200, "{}"}}};
    HttpChat chat2(http_cfg(0), bad.fn(), sleeper.fn());
    CHECK_THROWS_AS(chat2.chat_complete("s", {{"user", "q"}}), ProviderError);
    CHECK_THROWS_AS(chat.chat_complete("s", {}), DataError);
}

TEST_CASE("HttpJudge: earliest verdict token wins") {
    FakeSleeper sleeper;
    auto judge_with = [&](const std::string& reply) {
        FakePoster poster{{{200, chat_body(reply)}}};
        HttpJudge judge(http_cfg(0), poster.fn(), sleeper.fn());
        return judge.judge_pair("问题", "答案甲", "答案乙");
    };
    CHECK(judge_with("FIRST") == Verdict::first);
    CHECK(judge_with("SECOND") == Verdict::second);
    CHECK(judge_with("TIE, though FIRST has merit") == Verdict::tie);
    CHECK(judge_with("I pick SECOND over FIRST") == Verdict::second);
    CHECK_THROWS_AS(judge_with("no verdict here"), ProviderError);

    // the judging prompt carries question and both answers
    FakePoster poster{{{200, chat_body("TIE")}}};
    HttpJudge judge(http_cfg(0), poster.fn(), sleeper.fn());
    judge.judge_pair("毛利率怎么算", "收入减成本", "成本除收入");
    const json req = json::parse(poster.bodies.at(0));
    const std::string prompt = req["messages"][0]["content"];
    CHECK(prompt.find("毛利率怎么算") != std::string::npos);
    CHECK(prompt.find("收入减成本") != std::string::npos);
    CHECK(prompt.find("成本除收入") != std::string::npos);
    CHECK_THROWS_AS(judge.judge_pair("p", "", "b"), DataError);
}

TEST_CASE("provider_config_from_env") {
    ::setenv("FINFORGE_TEST_PROVIDER_URL", "http://env.test/embed", 1);
    ::setenv("FINFORGE_API_TOKEN", "tok-from-env", 1);
    auto cfg = provider_config_from_env("FINFORGE_TEST_PROVIDER_URL");
    CHECK(cfg.mode == ProviderMode::http);
    CHECK(cfg.endpoint == "http://env.test/embed");
    CHECK(cfg.auth_token == "tok-from-env");
    cfg.validate();

    ::unsetenv("FINFORGE_TEST_PROVIDER_URL");
    ::unsetenv("FINFORGE_API_TOKEN");
    const auto stub = provider_config_from_env("FINFORGE_TEST_PROVIDER_URL");
    CHECK(stub.mode == ProviderMode::stub);
    CHECK(stub.auth_token.empty());

    ProviderConfig bad;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ProviderConfig{};
    bad.mode = ProviderMode::http;
    CHECK_THROWS_AS(bad.validate(), ConfigError);  // endpoint required
}
