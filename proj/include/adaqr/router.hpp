#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaqr/mapper.hpp"
#include "adaqr/records.hpp"
#include "adaqr/retrieval.hpp"

namespace adaqr {

// Mean of the original embeddings of queries whose dense-reasoner retrieval
// quality was comparable to or better than the LLM rewrite's.
struct Anchor {
    Embedding p;
    std::vector<std::string> member_ids;
    double epsilon = 0.0;
};

enum class RouteMode {
    threshold,    // dense iff sim(e_q, p) >= tau
    always_dense, // sentinel: dense reasoner for every query
    always_llm,   // sentinel: LLM rewrite for every query
};

RouteMode route_mode_from_string(const std::string& s);
std::string to_string(RouteMode m);

struct RouterConfig {
    double tau = 0.7;
    Similarity similarity = Similarity::cosine;
    RouteMode mode = RouteMode::threshold;
};

void validate_router_config(const RouterConfig& config);

enum class RoutePath { dense, llm };

std::string to_string(RoutePath p);

struct RoutingDecision {
    std::string query_id;
    RoutePath path = RoutePath::dense;
    double similarity = 0.0;
};

// S = { q : ndcg_dr(q) >= ndcg_llm(q) - epsilon }, deterministic (sorted
// ids). Errors: the two score maps cover different ids, or S is empty.
std::vector<std::string> build_oracle_set(const std::map<std::string, double>& per_query_dr,
                                          const std::map<std::string, double>& per_query_llm,
                                          double epsilon);

// p = component-wise mean of the members' ORIGINAL embeddings.
Anchor build_anchor(const std::vector<QueryRecord>& queries,
                    const std::vector<std::string>& oracle_set, double epsilon);

// Similarity is always computed and recorded for the audit log, including
// under the sentinel modes.
RoutingDecision route(const std::string& query_id, const Embedding& e_q,
                      const Anchor& anchor, const RouterConfig& config);

// The embedding retrieval consumes: dense -> forward(mapper, e_q);
// llm -> the precomputed reasoned embedding, or `llm_source` when given.
using LlmEmbeddingSource = std::function<Embedding(const QueryRecord&)>;

Embedding resolve_embedding(const RoutingDecision& decision, const QueryRecord& query,
                            const MapperParams& mapper, bool output_tanh = false,
                            const LlmEmbeddingSource& llm_source = nullptr);

// Anchor file: text header (epsilon, dim, member ids) followed by the mean
// vector as little-endian f32.
void save_anchor(const Anchor& anchor, const std::string& path);
Anchor load_anchor(const std::string& path);

// Routing audit log: one JSON record per query (id, similarity, tau, path).
void write_routing_audit(const std::vector<RoutingDecision>& decisions,
                         const RouterConfig& config, const std::string& path);

} // namespace adaqr
