#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adaqr/records.hpp"

namespace adaqr {

// Synthetic benchmark for desk-scale verification. Queries come in two
// populations:
//   structured   — originals drawn from a cluster; the reasoned embedding
//                  is a fixed rotation-plus-shift of the original
//                  (normalize(A e + b + eta), eta ~ N(0, sigma^2)), i.e. a
//                  systematic transformation observed with noise;
//   unstructured — originals uniform on the sphere; the reasoned embedding
//                  is an independent random direction.
// Each eval query gets one relevant document near the noiseless image of
// its reasoned location, a few near-miss confuser documents slightly
// further out, and the corpus is padded with random distractors. The
// confusers make ranking sensitive to query-side embedding error, so the
// benchmark can distinguish reasoning quality, not just hit/miss.
struct SyntheticSpec {
    size_t dim = 64;
    size_t num_train_pairs = 2000;
    size_t num_eval_queries = 200;
    size_t corpus_size = 1200;
    double noise_sigma = 0.05;
    double structured_fraction = 0.7;
    uint64_t seed = 1;
};

void validate_spec(const SyntheticSpec& spec);

struct SyntheticBenchmark {
    std::vector<QueryRecord> train_pairs;  // embedding + reasoned_embedding
    std::vector<QueryRecord> eval_queries; // embedding + reasoned_embedding
    std::vector<Document> corpus;
    RelevanceJudgments qrels;

    // Noiseless reasoned locations, parallel to the records above. These
    // never reach the benchmark files; tests use them to compute the
    // injected noise floor.
    std::vector<Embedding> train_clean_targets;
    std::vector<Embedding> eval_clean_targets;
};

SyntheticBenchmark generate_benchmark(const SyntheticSpec& spec);

// Writes queries.jsonl, pairs.jsonl, corpus.jsonl, qrels.txt under out_dir.
// Byte-identical for identical specs.
void write_benchmark(const SyntheticBenchmark& bench, const std::string& out_dir);

} // namespace adaqr
