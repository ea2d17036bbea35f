#include <doctest.h>

#include <cstdlib>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/client.hpp"
#include "core/error.hpp"
#include "core/io.hpp"
#include "support/tempdir.hpp"

using namespace probgate;
using namespace probgate::client;

namespace {

const char* kCannedResponse = R"({
  "id": "chatcmpl-1",
  "choices": [{
    "index": 0,
    "message": {"role": "assistant", "content": "SELECT count(*) FROM patients"},
    "logprobs": {"content": [
      {"token": "SELECT", "logprob": -0.01,
       "top_logprobs": [{"token": "SELECT", "logprob": -0.01}, {"token": "WITH", "logprob": -4.6}]},
      {"token": " count", "logprob": -0.12,
       "top_logprobs": [{"token": " count", "logprob": -0.12}]},
      {"token": " patients", "logprob": -0.35,
       "top_logprobs": [{"token": " patients", "logprob": -0.35}]}
    ]},
    "finish_reason": "stop"
  }]
})";

struct EnvKey {
    EnvKey() { setenv("PG_TEST_KEY", "sk-test", 1); }
    ~EnvKey() { unsetenv("PG_TEST_KEY"); }
};

ClientConfig test_config() {
    ClientConfig cfg;
    cfg.api_key_env = "PG_TEST_KEY";
    cfg.max_retries = 3;
    return cfg;
}

} // namespace

TEST_CASE("canned responses parse into records") {
    const auto record = parse_completion_response("q1", "how many patients", kCannedResponse);
    CHECK(record.id == "q1");
    CHECK(record.sql == "SELECT count(*) FROM patients");
    REQUIRE(record.tokens.size() == 3);
    CHECK(record.tokens[0].text == "SELECT");
    CHECK(record.tokens[0].logprob == doctest::Approx(-0.01));
    REQUIRE(record.tokens[0].alternatives.size() == 2);
    CHECK(record.tokens[0].alternatives[1].text == "WITH");
}

TEST_CASE("responses without logprobs are parse errors naming the field") {
    const char* no_logprobs = R"({"choices":[{"message":{"content":"SELECT 1"}}]})";
    try {
        parse_completion_response("q1", "q", no_logprobs);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(std::string(e.what()).find("logprobs") != std::string::npos);
        // the raw payload rides along for debugging
        CHECK(std::string(e.what()).find("SELECT 1") != std::string::npos);
    }
}

TEST_CASE("request bodies carry the shipped system prompt") {
    const auto cfg = test_config();
    const auto body = nlohmann::json::parse(build_request_body("how many?", cfg));
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == std::string(kDefaultSystemPrompt));
    CHECK(body["messages"][1]["content"] == "how many?");
    CHECK(body["logprobs"] == true);
    CHECK(body["temperature"] == 0.0);

    // frozen copy of the shipped prompt; parse_completion tests cover the rest
    const std::string expected =
        "You are `SQLgpt', an AI designed to convert natural language questions into their "
        "corresponding SQL queries. It is imperative that the generated SQL queries conform to "
        "the standard SQL format and are not enclosed within quotes (neither single ' nor "
        "double \"). Your primary objective is to precisely generate the exact SQL query for "
        "each presented question.";
    CHECK(std::string(kDefaultSystemPrompt) == expected);
}

TEST_CASE("transient failures retry with success on a later attempt") {
    EnvKey key;
    int calls = 0;
    const Transport flaky = [&](const ClientConfig&, const std::string&, const std::string&) {
        ++calls;
        if (calls <= 2) return HttpResponse{503, "upstream sad"};
        return HttpResponse{200, kCannedResponse};
    };
    int retries = -1;
    const auto record = fetch_generation({"q1", "how many"}, test_config(), flaky, &retries);
    CHECK(calls == 3);
    CHECK(retries == 2);
    CHECK(record.sql == "SELECT count(*) FROM patients");
}

TEST_CASE("auth failures are fatal without retry") {
    EnvKey key;
    int calls = 0;
    const Transport denied = [&](const ClientConfig&, const std::string&, const std::string&) {
        ++calls;
        return HttpResponse{401, "bad key"};
    };
    CHECK_THROWS_AS(fetch_generation({"q1", "q"}, test_config(), denied), Error);
    CHECK(calls == 1);
}

TEST_CASE("the retry budget is finite") {
    EnvKey key;
    int calls = 0;
    const Transport always_down = [&](const ClientConfig&, const std::string&, const std::string&) {
        ++calls;
        return HttpResponse{500, "down"};
    };
    auto cfg = test_config();
    cfg.max_retries = 2;
    CHECK_THROWS_AS(fetch_generation({"q1", "q"}, cfg, always_down), Error);
    CHECK(calls == 3); // initial try + 2 retries
}

TEST_CASE("a missing api key is an argument error") {
    auto cfg = test_config();
    cfg.api_key_env = "PG_DEFINITELY_UNSET";
    const Transport never = [](const ClientConfig&, const std::string&, const std::string&) {
        return HttpResponse{200, "{}"};
    };
    CHECK_THROWS_AS(fetch_generation({"q1", "q"}, cfg, never), Error);
}

TEST_CASE("fetch_to_file writes records in question order") {
    EnvKey key;
    testsupport::TempDir dir;
    testsupport::write_file(dir.file("questions.jsonl"),
                            R"({"id":"q1","question":"how many patients"})"
                            "\n"
                            R"({"id":"q2","question":"how many admissions"})"
                            "\n");
    const Transport canned = [](const ClientConfig&, const std::string& body,
                                const std::string&) {
        // echo the asked question into the sql so order is observable
        const auto req = nlohmann::json::parse(body);
        const std::string question = req["messages"][1]["content"];
        nlohmann::json response = nlohmann::json::parse(kCannedResponse);
        response["choices"][0]["message"]["content"] = "SELECT '" + question + "'";
        return HttpResponse{200, response.dump()};
    };
    auto cfg = test_config();
    cfg.concurrency = 2;
    fetch_to_file(dir.file("questions.jsonl"), cfg, dir.file("generations.jsonl"), canned);

    const auto records = io::read_generations(dir.file("generations.jsonl"));
    REQUIRE(records.size() == 2);
    CHECK(records[0].id == "q1");
    CHECK(records[0].sql == "SELECT 'how many patients'");
    CHECK(records[1].id == "q2");
}
