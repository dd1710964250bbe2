#pragma once

#include <optional>
#include <string>

#include "adaqr/llm_client.hpp"

namespace adaqr {

// Persistent rewrite cache: one file per key under a directory, filename =
// hex content hash of (query_id, model_name, prompt). Corrupt entries are
// skipped with a warning and treated as misses.
class RewriteCache {
public:
    explicit RewriteCache(std::string dir);

    std::string key_for(const std::string& query_id, const std::string& model_name,
                        const std::string& prompt) const;

    std::optional<RewriteResult> get(const std::string& query_id,
                                     const std::string& model_name,
                                     const std::string& prompt) const;

    void put(const std::string& query_id, const std::string& model_name,
             const std::string& prompt, const RewriteResult& result) const;

    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
};

// Cache-aware rewrite: a hit performs zero network calls and returns the
// stored result with from_cache = true.
RewriteResult rewrite_with_cache(const QueryRecord& query, const LlmEndpointConfig& config,
                                 const RewriteCache& cache);

} // namespace adaqr
