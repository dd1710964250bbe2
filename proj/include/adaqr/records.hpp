#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaqr/embedding.hpp"

namespace adaqr {

// A query with its original text/embedding and, when available, the
// LLM-reasoned rewrite and its embedding.
struct QueryRecord {
    std::string id;
    std::string text;
    std::optional<Embedding> embedding;
    std::optional<std::string> reasoned_text;
    std::optional<Embedding> reasoned_embedding;
    std::string dataset_tag; // domain/task label for per-task reporting
};

struct Document {
    std::string id;
    std::string text;
    Embedding embedding;
};

// Graded relevance judgments: query-id -> doc-id -> grade (>= 0).
struct RelevanceJudgments {
    std::map<std::string, std::map<std::string, int>> entries;

    bool has_query(const std::string& qid) const {
        return entries.find(qid) != entries.end();
    }

    int grade(const std::string& qid, const std::string& did) const {
        auto q = entries.find(qid);
        if (q == entries.end()) return 0;
        auto d = q->second.find(did);
        return d == q->second.end() ? 0 : d->second;
    }
};

// (original, reasoned) embedding pairs sharing one dim.
struct EmbeddingPairSet {
    std::vector<std::pair<Embedding, Embedding>> pairs;
    size_t dim = 0;

    size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
};

// Extracts the pair set (and parallel query ids) from records that carry
// both an original and a reasoned embedding. Records missing either one
// are a validation error naming the record id.
std::pair<EmbeddingPairSet, std::vector<std::string>>
make_pair_set(const std::vector<QueryRecord>& records);

} // namespace adaqr
