#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/model.hpp"

namespace probgate::client {

/// System prompt sent with every completion request.
extern const char* const kDefaultSystemPrompt;

struct ClientConfig {
    std::string base_url = "https://api.openai.com";
    std::string model = "gpt-3.5-turbo";
    std::string api_key_env = "OPENAI_API_KEY";
    std::string system_prompt; // empty -> kDefaultSystemPrompt
    int max_retries = 3;
    std::int64_t request_timeout_ms = 30000;
    double temperature = 0.0;
    int top_logprobs = 0; // 0 omits alternatives from the request
    int concurrency = 1;

    const std::string& effective_prompt() const;
};

struct HttpResponse {
    int status = 0; // 0 = transport failure
    std::string body;
};

/// Pluggable HTTP layer so tests replay canned responses. Arguments:
/// request body JSON and the bearer key.
using Transport = std::function<HttpResponse(const ClientConfig& cfg, const std::string& body,
                                             const std::string& api_key)>;

/// POSTs to /v1/chat/completions over TLS (or plain HTTP for http:// urls).
Transport default_transport();

struct Question {
    std::string id;
    std::string question;
};

/// JSONL of {id, question} pairs.
std::vector<Question> read_questions(const std::string& path);

std::string build_request_body(const std::string& question, const ClientConfig& cfg);

/// Pure parse of a chat-completions response body (with logprobs) into a
/// record. Raises a parse error carrying the offending payload.
GenerationRecord parse_completion_response(const std::string& id, const std::string& question,
                                           const std::string& body);

/// One completion with retries: 5xx and transport failures back off
/// exponentially up to cfg.max_retries; auth failures are fatal.
GenerationRecord fetch_generation(const Question& question, const ClientConfig& cfg,
                                  const Transport& transport, int* retries_out = nullptr);

/// Fetches every question and writes the generation log in input order.
void fetch_to_file(const std::string& questions_path, const ClientConfig& cfg,
                   const std::string& out_path, const Transport& transport);

} // namespace probgate::client
