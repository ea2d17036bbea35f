#include "core/client.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "core/error.hpp"
#include "core/io.hpp"

namespace probgate::client {

namespace {
using json = nlohmann::ordered_json;
}

const char* const kDefaultSystemPrompt =
    "You are `SQLgpt', an AI designed to convert natural language questions into their "
    "corresponding SQL queries. It is imperative that the generated SQL queries conform to the "
    "standard SQL format and are not enclosed within quotes (neither single ' nor double \"). "
    "Your primary objective is to precisely generate the exact SQL query for each presented "
    "question.";

const std::string& ClientConfig::effective_prompt() const {
    static const std::string default_prompt = kDefaultSystemPrompt;
    return system_prompt.empty() ? default_prompt : system_prompt;
}

Transport default_transport() {
    return [](const ClientConfig& cfg, const std::string& body, const std::string& api_key) {
        httplib::Client http(cfg.base_url);
        http.set_connection_timeout(std::chrono::milliseconds(cfg.request_timeout_ms));
        http.set_read_timeout(std::chrono::milliseconds(cfg.request_timeout_ms));
        http.set_bearer_token_auth(api_key);
        auto result = http.Post("/v1/chat/completions", body, "application/json");
        if (!result) {
            return HttpResponse{0, httplib::to_string(result.error())};
        }
        return HttpResponse{result->status, result->body};
    };
}

std::vector<Question> read_questions(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw_io("cannot open '" + path + "' for reading");
    }
    std::vector<Question> questions;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw_parse(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!doc.contains("id") || !doc["id"].is_string() || !doc.contains("question") ||
            !doc["question"].is_string()) {
            throw_parse(path + ":" + std::to_string(line_no) +
                        ": expected string fields 'id' and 'question'");
        }
        questions.push_back(Question{doc["id"], doc["question"]});
    }
    return questions;
}

std::string build_request_body(const std::string& question, const ClientConfig& cfg) {
    json body;
    body["model"] = cfg.model;
    body["messages"] = json::array({
        json{{"role", "system"}, {"content", cfg.effective_prompt()}},
        json{{"role", "user"}, {"content", question}},
    });
    body["temperature"] = cfg.temperature;
    body["logprobs"] = true;
    if (cfg.top_logprobs > 0) {
        body["top_logprobs"] = cfg.top_logprobs;
    }
    return body.dump();
}

GenerationRecord parse_completion_response(const std::string& id, const std::string& question,
                                           const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception& e) {
        throw_parse("response for '" + id + "' is not JSON: " + e.what() + "; payload: " + body);
    }
    const auto fail = [&](const std::string& what) -> void {
        throw_parse("response for '" + id + "' " + what + "; payload: " + body);
    };
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
        fail("has no choices");
    }
    const json& choice = doc["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
        fail("has no message content");
    }
    if (!choice.contains("logprobs") || choice["logprobs"].is_null() ||
        !choice["logprobs"].contains("content") || !choice["logprobs"]["content"].is_array()) {
        fail("is missing the 'logprobs' field (request them explicitly)");
    }

    GenerationRecord record;
    record.id = id;
    record.question = question;
    record.sql = choice["message"]["content"].get<std::string>();
    for (const json& tok : choice["logprobs"]["content"]) {
        if (!tok.contains("token") || !tok.contains("logprob") || !tok["logprob"].is_number()) {
            fail("has a malformed logprobs entry");
        }
        ScoredToken token;
        token.text = tok["token"].get<std::string>();
        token.logprob = tok["logprob"].get<double>();
        if (tok.contains("top_logprobs") && tok["top_logprobs"].is_array()) {
            for (const json& alt : tok["top_logprobs"]) {
                if (!alt.contains("token") || !alt.contains("logprob")) {
                    fail("has a malformed top_logprobs entry");
                }
                token.alternatives.push_back(
                    TokenAlternative{alt["token"].get<std::string>(), alt["logprob"].get<double>()});
            }
        }
        sort_alternatives(token);
        record.tokens.push_back(std::move(token));
    }
    validate_record(record);
    return record;
}

GenerationRecord fetch_generation(const Question& question, const ClientConfig& cfg,
                                  const Transport& transport, int* retries_out) {
    const char* key = std::getenv(cfg.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw_argument("environment variable '" + cfg.api_key_env + "' holds no API key");
    }
    const std::string body = build_request_body(question.question, cfg);

    int retries = 0;
    for (int attempt = 0;; ++attempt) {
        const HttpResponse response = transport(cfg, body, key);
        if (response.status == 200) {
            if (retries_out != nullptr) *retries_out = retries;
            return parse_completion_response(question.id, question.question, response.body);
        }
        if (response.status == 401 || response.status == 403) {
            throw_argument("authentication failed (" + std::to_string(response.status) +
                           ") for '" + question.id + "': " + response.body);
        }
        const bool transient = response.status == 0 || response.status == 429 ||
                               response.status >= 500;
        if (!transient || attempt >= cfg.max_retries) {
            throw_io("request for '" + question.id + "' failed with status " +
                     std::to_string(response.status) + ": " + response.body);
        }
        ++retries;
        std::this_thread::sleep_for(std::chrono::milliseconds(250L << std::min(attempt, 6)));
    }
}

void fetch_to_file(const std::string& questions_path, const ClientConfig& cfg,
                   const std::string& out_path, const Transport& transport) {
    const std::vector<Question> questions = read_questions(questions_path);
    std::vector<GenerationRecord> records(questions.size());
    const std::size_t window = static_cast<std::size_t>(std::max(1, cfg.concurrency));

    // bounded fan-out, results landed in input order
    for (std::size_t begin = 0; begin < questions.size(); begin += window) {
        const std::size_t end = std::min(questions.size(), begin + window);
        std::vector<std::future<GenerationRecord>> batch;
        batch.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            batch.push_back(std::async(std::launch::async, [&, i] {
                int retries = 0;
                GenerationRecord record = fetch_generation(questions[i], cfg, transport, &retries);
                if (retries > 0) {
                    std::fprintf(stderr, "probgate: '%s' fetched after %d retries\n",
                                 questions[i].id.c_str(), retries);
                }
                return record;
            }));
        }
        for (std::size_t i = begin; i < end; ++i) {
            records[i] = batch[i - begin].get();
        }
    }
    io::write_generations(records, out_path);
}

} // namespace probgate::client
