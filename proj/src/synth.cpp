#include "adaqr/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "adaqr/errors.hpp"
#include "adaqr/rng.hpp"
#include "adaqr/store.hpp"

namespace fs = std::filesystem;

namespace adaqr {

namespace {

// Cluster spread for structured originals: tangent magnitude relative to
// the cluster center, giving within-cluster cosines around 0.91.
constexpr double kClusterSpread = 0.45;
// Norm of the fixed shift b in the structured transformation.
constexpr double kShiftNorm = 0.45;
// Near-miss confuser documents per eval query.
constexpr size_t kConfusersPerQuery = 4;
// Confuser displacement range, as multiples of the noise scale.
constexpr double kConfuserLo = 0.7;
constexpr double kConfuserHi = 2.5;

std::vector<double> gaussian_vec(Rng& rng, size_t d, double sigma) {
    std::vector<double> v(d);
    for (double& x : v) x = sigma * rng.next_gaussian();
    return v;
}

Embedding random_unit(Rng& rng, size_t d) {
    Embedding e;
    e.values = gaussian_vec(rng, d, 1.0);
    return normalized(e);
}

// Rows of an orthonormal matrix: Gram-Schmidt on gaussian draws.
std::vector<double> random_rotation(Rng& rng, size_t d) {
    std::vector<double> q(d * d);
    for (size_t i = 0; i < d; ++i) {
        std::vector<double> v = gaussian_vec(rng, d, 1.0);
        for (size_t j = 0; j < i; ++j) {
            double proj = 0.0;
            for (size_t k = 0; k < d; ++k) proj += v[k] * q[j * d + k];
            for (size_t k = 0; k < d; ++k) v[k] -= proj * q[j * d + k];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw_validation("random_rotation: degenerate draw");
        for (size_t k = 0; k < d; ++k) q[i * d + k] = v[k] / norm;
    }
    return q;
}

Embedding apply_matrix(const std::vector<double>& m, const Embedding& e) {
    size_t d = e.dim();
    Embedding out;
    out.values.resize(d);
    for (size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        const double* row = &m[i * d];
        for (size_t j = 0; j < d; ++j) acc += row[j] * e.values[j];
        out.values[i] = acc;
    }
    return out;
}

Embedding displaced_unit(Rng& rng, const Embedding& center_unnormalized, double sigma) {
    Embedding p = center_unnormalized;
    if (sigma > 0.0) {
        for (size_t i = 0; i < p.dim(); ++i) p.values[i] += sigma * rng.next_gaussian();
    }
    return normalized(p);
}

std::string numbered(const char* prefix, size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%05zu", prefix, i);
    return std::string(buf);
}

} // namespace

void validate_spec(const SyntheticSpec& spec) {
    if (spec.dim < 2) throw_validation("synthetic spec: dim must be >= 2");
    if (spec.num_train_pairs < 1) throw_validation("synthetic spec: num_train_pairs must be >= 1");
    if (spec.num_eval_queries < 1) throw_validation("synthetic spec: num_eval_queries must be >= 1");
    if (spec.noise_sigma < 0.0) throw_validation("synthetic spec: noise_sigma must be >= 0");
    if (spec.structured_fraction < 0.0 || spec.structured_fraction > 1.0) {
        throw_validation("synthetic spec: structured_fraction must be in [0, 1]");
    }
}

SyntheticBenchmark generate_benchmark(const SyntheticSpec& spec) {
    validate_spec(spec);
    size_t d = spec.dim;

    Rng rng_geometry(mix_seed(spec.seed, 1));
    std::vector<double> rotation = random_rotation(rng_geometry, d);
    Embedding shift = scale(random_unit(rng_geometry, d), kShiftNorm);
    Embedding cluster_center = random_unit(rng_geometry, d);

    // One query: original, observed reasoned, and the noiseless reasoned
    // location the relevant document is anchored to.
    struct Drawn {
        Embedding original;
        Embedding reasoned;
        Embedding clean_unnormalized; // pre-normalization reasoned location
        bool structured;
    };
    auto draw_query = [&](Rng& rng, bool structured) {
        Drawn q;
        q.structured = structured;
        if (structured) {
            Embedding tangent = scale(random_unit(rng, d), kClusterSpread);
            q.original = normalized(add(cluster_center, tangent));
            q.clean_unnormalized = add(apply_matrix(rotation, q.original), shift);
            q.reasoned = displaced_unit(rng, q.clean_unnormalized, spec.noise_sigma);
        } else {
            q.original = random_unit(rng, d);
            q.reasoned = random_unit(rng, d);
            q.clean_unnormalized = q.reasoned; // the rewrite itself is the target
        }
        return q;
    };

    SyntheticBenchmark bench;

    auto emit_queries = [&](Rng& rng, size_t count, const char* id_prefix,
                            std::vector<QueryRecord>& out, std::vector<Embedding>& clean_out,
                            std::vector<Embedding>& doc_centers) {
        size_t structured_count = static_cast<size_t>(
            std::llround(spec.structured_fraction * static_cast<double>(count)));
        for (size_t i = 0; i < count; ++i) {
            bool structured = i < structured_count;
            Drawn q = draw_query(rng, structured);
            QueryRecord r;
            r.id = numbered(id_prefix, i);
            r.text = std::string(structured ? "structured" : "unstructured") +
                     " synthetic query " + std::to_string(i);
            r.dataset_tag = structured ? "structured" : "unstructured";
            r.embedding = q.original;
            r.reasoned_embedding = q.reasoned;
            out.push_back(std::move(r));
            clean_out.push_back(normalized(q.clean_unnormalized));
            doc_centers.push_back(q.clean_unnormalized);
        }
    };

    std::vector<Embedding> unused_centers;
    Rng rng_train(mix_seed(spec.seed, 2));
    emit_queries(rng_train, spec.num_train_pairs, "p", bench.train_pairs,
                 bench.train_clean_targets, unused_centers);

    std::vector<Embedding> eval_doc_centers;
    Rng rng_eval(mix_seed(spec.seed, 3));
    emit_queries(rng_eval, spec.num_eval_queries, "q", bench.eval_queries,
                 bench.eval_clean_targets, eval_doc_centers);

    // Corpus: one relevant document per eval query near its noiseless
    // reasoned location, a handful of confusers slightly further out, then
    // random fillers. Confusers keep a nonzero offset even when
    // noise_sigma is 0 so the ranking task never collapses to exact ties.
    Rng rng_corpus(mix_seed(spec.seed, 4));
    double confuser_scale = spec.noise_sigma > 0.0 ? spec.noise_sigma : 0.02;
    for (size_t i = 0; i < bench.eval_queries.size(); ++i) {
        const std::string& qid = bench.eval_queries[i].id;
        Document rel;
        rel.id = "doc-" + qid + "-rel";
        rel.text = "relevant document for " + qid;
        rel.embedding = displaced_unit(rng_corpus, eval_doc_centers[i], spec.noise_sigma / 2.0);
        bench.corpus.push_back(std::move(rel));
        bench.qrels.entries[qid]["doc-" + qid + "-rel"] = 1;

        for (size_t c = 0; c < kConfusersPerQuery; ++c) {
            double mult = rng_corpus.next_uniform(kConfuserLo, kConfuserHi);
            Document conf;
            conf.id = "doc-" + qid + "-c" + std::to_string(c);
            conf.text = "confuser document for " + qid;
            conf.embedding = displaced_unit(rng_corpus, eval_doc_centers[i],
                                            mult * confuser_scale);
            bench.corpus.push_back(std::move(conf));
        }
    }
    size_t placed = bench.corpus.size();
    for (size_t i = placed; i < spec.corpus_size; ++i) {
        Document filler;
        filler.id = numbered("doc-fill-", i - placed);
        filler.text = "filler document";
        filler.embedding = random_unit(rng_corpus, d);
        bench.corpus.push_back(std::move(filler));
    }
    return bench;
}

void write_benchmark(const SyntheticBenchmark& bench, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw_io("cannot create " + out_dir + ": " + ec.message());
    fs::path base(out_dir);
    save_query_collection(bench.eval_queries, (base / "queries.jsonl").string());
    save_query_collection(bench.train_pairs, (base / "pairs.jsonl").string());
    save_corpus(bench.corpus, (base / "corpus.jsonl").string());
    save_qrels(bench.qrels, (base / "qrels.txt").string());
}

} // namespace adaqr
