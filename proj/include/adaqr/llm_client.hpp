#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaqr/records.hpp"

namespace adaqr {

// OpenAI-compatible chat-completions / embeddings endpoint. The API key is
// read from the named environment variable, never from config files.
struct LlmEndpointConfig {
    std::string base_url;          // e.g. http://127.0.0.1:8080/v1
    std::string model_name;
    std::string api_key_env_var;
    double timeout_seconds = 30.0;
    int max_retries = 3;
    double temperature = 0.0;
    int backoff_initial_ms = 250;  // doubles per retry; tests set it to ~1
};

struct RewriteResult {
    std::string query_id;
    std::string reasoned_text;
    uint64_t prompt_tokens = 0;
    uint64_t completion_tokens = 0;
    double latency_ms = 0.0;
    bool from_cache = false;
    int retries = 0;
};

// The query followed by the fixed three-instruction reasoning template.
// Byte-stable; errors on an empty or whitespace-only query.
std::string render_prompt(const std::string& query_text);

// POST {base_url}/chat/completions. Retries transient failures (network,
// 429, 5xx) with exponential backoff up to max_retries; auth failures
// (401/403) and other client errors are not retried. An empty completion
// is an error.
RewriteResult rewrite_query(const QueryRecord& query, const LlmEndpointConfig& config);

struct EmbedConfig {
    LlmEndpointConfig endpoint;
    size_t expected_dim = 0;       // 0 = accept whatever the service returns
    bool offline = false;
    std::string offline_store;     // JSONL keyed by content hash of the text
};

// POST {base_url}/embeddings, or resolve from the offline store (keyed by
// content hash). Errors: dim mismatch vs expected_dim; offline miss
// (reported with the content hash).
Embedding embed_text(const std::string& text, const EmbedConfig& config);

// Content hash used for the offline embedding store and the rewrite cache.
std::string content_hash_hex(const std::string& content);

// Offline store helpers: one JSON record per line {hash, embedding}.
void append_offline_embedding(const std::string& store_path, const std::string& text,
                              const Embedding& embedding);

} // namespace adaqr
