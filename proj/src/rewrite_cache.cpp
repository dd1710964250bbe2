#include "adaqr/rewrite_cache.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "adaqr/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace adaqr {

RewriteCache::RewriteCache(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw_io("cannot create cache directory " + dir_ + ": " + ec.message());
}

std::string RewriteCache::key_for(const std::string& query_id, const std::string& model_name,
                                  const std::string& prompt) const {
    // \x1f separators keep (id, model, prompt) unambiguous in the hash.
    std::string material = query_id;
    material += '\x1f';
    material += model_name;
    material += '\x1f';
    material += prompt;
    return content_hash_hex(material);
}

std::optional<RewriteResult> RewriteCache::get(const std::string& query_id,
                                               const std::string& model_name,
                                               const std::string& prompt) const {
    fs::path path = fs::path(dir_) / (key_for(query_id, model_name, prompt) + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("reasoned_text") ||
        !j["reasoned_text"].is_string() || j["reasoned_text"].get<std::string>().empty()) {
        std::cerr << "warning: corrupt cache entry " << path.string() << ", treating as miss\n";
        return std::nullopt;
    }
    RewriteResult r;
    r.query_id = j.value("query_id", query_id);
    r.reasoned_text = j["reasoned_text"].get<std::string>();
    r.prompt_tokens = j.value("prompt_tokens", 0ULL);
    r.completion_tokens = j.value("completion_tokens", 0ULL);
    r.latency_ms = j.value("latency_ms", 0.0);
    r.from_cache = true;
    r.retries = 0;
    return r;
}

void RewriteCache::put(const std::string& query_id, const std::string& model_name,
                       const std::string& prompt, const RewriteResult& result) const {
    fs::path path = fs::path(dir_) / (key_for(query_id, model_name, prompt) + ".json");
    json j;
    j["query_id"] = result.query_id;
    j["reasoned_text"] = result.reasoned_text;
    j["prompt_tokens"] = result.prompt_tokens;
    j["completion_tokens"] = result.completion_tokens;
    j["latency_ms"] = result.latency_ms;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path.string() + " for writing");
    out << j.dump() << "\n";
    if (!out) throw_io("write failed: " + path.string());
}

RewriteResult rewrite_with_cache(const QueryRecord& query, const LlmEndpointConfig& config,
                                 const RewriteCache& cache) {
    std::string prompt = render_prompt(query.text);
    if (auto hit = cache.get(query.id, config.model_name, prompt)) {
        return *hit;
    }
    RewriteResult result = rewrite_query(query, config);
    cache.put(query.id, config.model_name, prompt, result);
    return result;
}

} // namespace adaqr
