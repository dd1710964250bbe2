#pragma once

#include <string>
#include <vector>

#include "adaqr/records.hpp"

namespace adaqr {

enum class Similarity { cosine, dot };

Similarity similarity_from_string(const std::string& s);
std::string to_string(Similarity s);

struct ScoredDoc {
    std::string doc_id;
    double score;
};

// Scores strictly non-increasing; ties broken by ascending doc_id.
struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> items;
};

// Value in [-1, 1]; errors on dimension mismatch or a zero-norm vector.
double cosine_similarity(const Embedding& a, const Embedding& b);

double score(const Embedding& a, const Embedding& b, Similarity sim);

// Exact exhaustive top-k over the corpus, maintained with a bounded
// min-heap. Returns min(k, |corpus|) items; an empty corpus yields an
// empty list. Ordering is invariant under corpus permutation.
RankedList retrieve_topk(const std::string& query_id, const Embedding& query_embedding,
                         const std::vector<Document>& corpus, size_t k,
                         Similarity sim = Similarity::cosine);

// TREC run format: `query-id Q0 doc-id rank score run-tag`.
void write_run_file(const std::vector<RankedList>& lists, const std::string& path,
                    const std::string& run_tag);

} // namespace adaqr
