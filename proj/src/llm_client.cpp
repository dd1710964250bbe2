#include "adaqr/llm_client.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "adaqr/errors.hpp"
#include "adaqr/rng.hpp"

using nlohmann::json;

namespace adaqr {

namespace {

const char* kPromptInstructions =
    "\n\nInstructions:\n\n"
    "1. Identify the essential problem.\n\n"
    "2. Think step by step to reason and describe what information could be relevant "
    "and helpful to address the questions in detail.\n\n"
    "3. Draft an answer with as many thoughts as you have.";

bool whitespace_only(const std::string& s) {
    for (char c : s) {
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return false;
    }
    return true;
}

// Splits "http://host:port/prefix" into client target and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    if (base_url.empty()) throw_validation("llm endpoint: base_url is empty");
    size_t scheme = base_url.find("://");
    size_t start = scheme == std::string::npos ? 0 : scheme + 3;
    size_t slash = base_url.find('/', start);
    if (slash == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, slash), prefix};
}

void apply_auth(httplib::Headers& headers, const LlmEndpointConfig& config) {
    if (config.api_key_env_var.empty()) return;
    const char* key = std::getenv(config.api_key_env_var.c_str());
    if (key != nullptr && key[0] != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
}

struct HttpOutcome {
    int status = 0;        // 0 = transport failure
    std::string body;
    int retries = 0;
};

// POSTs with retry on transport errors, 429 and 5xx. Returns the last
// response; classification of terminal statuses is the caller's job.
HttpOutcome post_with_retries(const LlmEndpointConfig& config, const std::string& path,
                              const std::string& body) {
    auto [host, prefix] = split_base_url(config.base_url);
    if (config.timeout_seconds <= 0.0) throw_validation("llm endpoint: timeout must be > 0");

    httplib::Client client(host);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<int64_t>(config.timeout_seconds * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<int64_t>(config.timeout_seconds * 1000)));

    httplib::Headers headers;
    apply_auth(headers, config);

    HttpOutcome outcome;
    int backoff_ms = config.backoff_initial_ms;
    for (int attempt = 0;; ++attempt) {
        auto res = client.Post(prefix + path, headers, body, "application/json");
        if (res) {
            outcome.status = res->status;
            outcome.body = res->body;
            bool transient = res->status == 429 || res->status >= 500;
            if (!transient) return outcome;
        } else {
            outcome.status = 0;
            outcome.body.clear();
        }
        if (attempt >= config.max_retries) return outcome;
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms *= 2;
        outcome.retries = attempt + 1;
    }
}

[[noreturn]] void fail_http(const std::string& what, const HttpOutcome& outcome,
                            const LlmEndpointConfig& config) {
    if (outcome.status == 0) {
        throw_network(what + ": no response from " + config.base_url + " after " +
                      std::to_string(outcome.retries) + " retries");
    }
    std::string detail = what + ": HTTP " + std::to_string(outcome.status);
    if (outcome.status == 401 || outcome.status == 403) {
        throw_network(detail + " (authentication failed; check " + config.api_key_env_var + ")");
    }
    if (outcome.status == 429) {
        throw_network(detail + " (rate limited after " + std::to_string(outcome.retries) +
                      " retries)");
    }
    if (outcome.status >= 500) {
        throw_network(detail + " (server error after " + std::to_string(outcome.retries) +
                      " retries)");
    }
    throw_network(detail);
}

} // namespace

std::string render_prompt(const std::string& query_text) {
    if (query_text.empty() || whitespace_only(query_text)) {
        throw_validation("render_prompt: empty query");
    }
    return query_text + kPromptInstructions;
}

RewriteResult rewrite_query(const QueryRecord& query, const LlmEndpointConfig& config) {
    std::string prompt = render_prompt(query.text);

    json body;
    body["model"] = config.model_name;
    body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = config.temperature;

    auto started = std::chrono::steady_clock::now();
    HttpOutcome outcome = post_with_retries(config, "/chat/completions", body.dump());
    double latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();

    if (outcome.status != 200) fail_http("rewrite_query '" + query.id + "'", outcome, config);

    json res;
    try {
        res = json::parse(outcome.body);
    } catch (const json::parse_error& e) {
        throw_network("rewrite_query '" + query.id + "': malformed response: " + e.what());
    }
    if (!res.contains("choices") || !res["choices"].is_array() || res["choices"].empty()) {
        throw_network("rewrite_query '" + query.id + "': response has no choices");
    }
    std::string text = res["choices"][0].value("message", json::object()).value("content", "");
    if (text.empty()) {
        throw_network("rewrite_query '" + query.id + "': empty completion");
    }

    RewriteResult result;
    result.query_id = query.id;
    result.reasoned_text = text;
    if (res.contains("usage") && res["usage"].is_object()) {
        result.prompt_tokens = res["usage"].value("prompt_tokens", 0ULL);
        result.completion_tokens = res["usage"].value("completion_tokens", 0ULL);
    }
    result.latency_ms = latency_ms;
    result.from_cache = false;
    result.retries = outcome.retries;
    return result;
}

std::string content_hash_hex(const std::string& content) {
    // Two FNV passes with different bases; 128 bits is plenty for cache keys.
    uint64_t h1 = fnv1a64(content);
    uint64_t h2 = fnv1a64(content, 0x6C62272E07BB0142ULL);
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                  static_cast<unsigned long long>(h1), static_cast<unsigned long long>(h2));
    return std::string(buf);
}

Embedding embed_text(const std::string& text, const EmbedConfig& config) {
    if (text.empty()) throw_validation("embed_text: empty text");

    if (config.offline) {
        std::string hash = content_hash_hex(text);
        std::ifstream in(config.offline_store);
        if (!in) throw_io("embed_text: cannot open offline store " + config.offline_store);
        std::string line;
        std::optional<Embedding> found;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) continue;
            if (j.value("hash", "") != hash) continue;
            Embedding e;
            for (const auto& v : j["embedding"]) e.values.push_back(v.get<double>());
            found = std::move(e); // last entry wins, mirrors qrels policy
        }
        if (!found) {
            throw_validation("embed_text: offline store miss for content hash " + hash);
        }
        validate_embedding(*found, "offline embedding " + hash);
        if (config.expected_dim != 0 && found->dim() != config.expected_dim) {
            throw_validation("embed_text: offline embedding has dim " +
                             std::to_string(found->dim()) + ", pipeline expects " +
                             std::to_string(config.expected_dim));
        }
        return *found;
    }

    json body;
    body["model"] = config.endpoint.model_name;
    body["input"] = text;
    HttpOutcome outcome = post_with_retries(config.endpoint, "/embeddings", body.dump());
    if (outcome.status != 200) fail_http("embed_text", outcome, config.endpoint);

    json res;
    try {
        res = json::parse(outcome.body);
    } catch (const json::parse_error& e) {
        throw_network(std::string("embed_text: malformed response: ") + e.what());
    }
    if (!res.contains("data") || !res["data"].is_array() || res["data"].empty() ||
        !res["data"][0].contains("embedding")) {
        throw_network("embed_text: response has no embedding data");
    }
    Embedding e;
    for (const auto& v : res["data"][0]["embedding"]) e.values.push_back(v.get<double>());
    validate_embedding(e, "embed_text response");
    if (config.expected_dim != 0 && e.dim() != config.expected_dim) {
        throw_validation("embed_text: service returned dim " + std::to_string(e.dim()) +
                         ", pipeline expects " + std::to_string(config.expected_dim));
    }
    return e;
}

void append_offline_embedding(const std::string& store_path, const std::string& text,
                              const Embedding& embedding) {
    validate_embedding(embedding, "offline embedding");
    std::ofstream out(store_path, std::ios::binary | std::ios::app);
    if (!out) throw_io("cannot open " + store_path + " for writing");
    json j;
    j["hash"] = content_hash_hex(text);
    json arr = json::array();
    for (double v : embedding.values) arr.push_back(v);
    j["embedding"] = arr;
    out << j.dump() << "\n";
    if (!out) throw_io("write failed: " + store_path);
}

} // namespace adaqr
