#include "adaqr/retrieval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <queue>

#include "adaqr/errors.hpp"

namespace adaqr {

Similarity similarity_from_string(const std::string& s) {
    if (s == "cosine") return Similarity::cosine;
    if (s == "dot") return Similarity::dot;
    throw_validation("unknown similarity '" + s + "' (expected cosine or dot)");
}

std::string to_string(Similarity s) {
    return s == Similarity::cosine ? "cosine" : "dot";
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    require_same_dim(a, b, "cosine_similarity");
    double na = l2_norm(a);
    double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw_validation("cosine_similarity: zero-norm vector");
    }
    // Clamp the rounding spill so the contract range [-1, 1] holds exactly.
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double score(const Embedding& a, const Embedding& b, Similarity sim) {
    return sim == Similarity::cosine ? cosine_similarity(a, b) : dot(a, b);
}

namespace {

// True when a outranks b: higher score first, ascending doc_id on ties.
bool outranks(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

} // namespace

RankedList retrieve_topk(const std::string& query_id, const Embedding& query_embedding,
                         const std::vector<Document>& corpus, size_t k,
                         Similarity sim) {
    if (k < 1) throw_validation("retrieve_topk: k must be >= 1");
    RankedList out;
    out.query_id = query_id;
    if (corpus.empty()) return out;

    // Min-heap of the current best k: top is the weakest kept entry.
    auto weaker = [](const ScoredDoc& a, const ScoredDoc& b) { return outranks(a, b); };
    std::priority_queue<ScoredDoc, std::vector<ScoredDoc>, decltype(weaker)> heap(weaker);

    for (const auto& d : corpus) {
        ScoredDoc cand{d.id, score(query_embedding, d.embedding, sim)};
        if (heap.size() < k) {
            heap.push(std::move(cand));
        } else if (outranks(cand, heap.top())) {
            heap.pop();
            heap.push(std::move(cand));
        }
    }

    out.items.resize(heap.size());
    for (size_t i = heap.size(); i-- > 0;) {
        out.items[i] = heap.top();
        heap.pop();
    }
    return out;
}

void write_run_file(const std::vector<RankedList>& lists, const std::string& path,
                    const std::string& run_tag) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path + " for writing");
    char buf[64];
    for (const auto& list : lists) {
        for (size_t i = 0; i < list.items.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.6f", list.items[i].score);
            out << list.query_id << " Q0 " << list.items[i].doc_id << " " << (i + 1)
                << " " << buf << " " << run_tag << "\n";
        }
    }
    if (!out) throw_io("write failed: " + path);
}

} // namespace adaqr
