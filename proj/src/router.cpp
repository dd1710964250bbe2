#include "adaqr/router.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adaqr/errors.hpp"
#include "adaqr/store.hpp"

namespace adaqr {

RouteMode route_mode_from_string(const std::string& s) {
    if (s == "threshold") return RouteMode::threshold;
    if (s == "always-dense") return RouteMode::always_dense;
    if (s == "always-llm") return RouteMode::always_llm;
    throw_validation("unknown route mode '" + s + "' (expected threshold, always-dense, always-llm)");
}

std::string to_string(RouteMode m) {
    switch (m) {
        case RouteMode::threshold: return "threshold";
        case RouteMode::always_dense: return "always-dense";
        default: return "always-llm";
    }
}

std::string to_string(RoutePath p) { return p == RoutePath::dense ? "dense" : "llm"; }

void validate_router_config(const RouterConfig& config) {
    // Sentinel modes ignore tau, so only threshold routing pins its range.
    if (config.mode == RouteMode::threshold && config.similarity == Similarity::cosine &&
        (config.tau < -1.0 || config.tau > 1.0)) {
        throw_validation("router config: tau must be in [-1, 1] for cosine similarity");
    }
}

std::vector<std::string> build_oracle_set(const std::map<std::string, double>& per_query_dr,
                                          const std::map<std::string, double>& per_query_llm,
                                          double epsilon) {
    if (per_query_dr.size() != per_query_llm.size()) {
        throw_validation("build_oracle_set: score maps cover different query sets");
    }
    std::vector<std::string> members;
    for (const auto& [qid, dr_score] : per_query_dr) {
        auto it = per_query_llm.find(qid);
        if (it == per_query_llm.end()) {
            throw_validation("build_oracle_set: query '" + qid + "' missing from LLM scores");
        }
        if (dr_score >= it->second - epsilon) {
            members.push_back(qid);
        }
    }
    if (members.empty()) {
        throw_validation("build_oracle_set: empty oracle set (dense reasoner never comparable); "
                         "anchor undefined");
    }
    return members;
}

Anchor build_anchor(const std::vector<QueryRecord>& queries,
                    const std::vector<std::string>& oracle_set, double epsilon) {
    if (oracle_set.empty()) throw_validation("build_anchor: empty oracle set");
    std::map<std::string, const QueryRecord*> by_id;
    for (const auto& q : queries) by_id.emplace(q.id, &q);

    Anchor anchor;
    anchor.epsilon = epsilon;
    for (const auto& qid : oracle_set) {
        auto it = by_id.find(qid);
        if (it == by_id.end()) {
            throw_validation("build_anchor: query '" + qid + "' not in the collection");
        }
        if (!it->second->embedding) {
            throw_validation("build_anchor: query '" + qid + "' has no original embedding");
        }
        const Embedding& e = *it->second->embedding;
        if (anchor.p.dim() == 0) {
            anchor.p.values.assign(e.dim(), 0.0);
        }
        require_same_dim(anchor.p, e, "build_anchor member '" + qid + "'");
        for (size_t i = 0; i < e.dim(); ++i) anchor.p.values[i] += e.values[i];
        anchor.member_ids.push_back(qid);
    }
    double inv = 1.0 / static_cast<double>(anchor.member_ids.size());
    for (double& v : anchor.p.values) v *= inv;
    return anchor;
}

RoutingDecision route(const std::string& query_id, const Embedding& e_q,
                      const Anchor& anchor, const RouterConfig& config) {
    validate_router_config(config);
    if (anchor.member_ids.empty()) throw_validation("route: anchor has no members");
    RoutingDecision decision;
    decision.query_id = query_id;
    decision.similarity = score(e_q, anchor.p, config.similarity);
    switch (config.mode) {
        case RouteMode::always_dense:
            decision.path = RoutePath::dense;
            break;
        case RouteMode::always_llm:
            decision.path = RoutePath::llm;
            break;
        case RouteMode::threshold:
            decision.path = decision.similarity >= config.tau ? RoutePath::dense : RoutePath::llm;
            break;
    }
    return decision;
}

Embedding resolve_embedding(const RoutingDecision& decision, const QueryRecord& query,
                            const MapperParams& mapper, bool output_tanh,
                            const LlmEmbeddingSource& llm_source) {
    if (decision.path == RoutePath::dense) {
        if (!query.embedding) {
            throw_validation("resolve_embedding: query '" + query.id +
                             "' has no original embedding for the dense path");
        }
        return forward(mapper, *query.embedding, output_tanh);
    }
    if (query.reasoned_embedding) {
        return *query.reasoned_embedding;
    }
    if (llm_source) {
        return llm_source(query);
    }
    throw_validation("resolve_embedding: query '" + query.id +
                     "' routed to llm but has no reasoned embedding and no online source "
                     "is configured");
}

void save_anchor(const Anchor& anchor, const std::string& path) {
    if (anchor.member_ids.empty()) throw_validation("save_anchor: empty anchor");
    validate_embedding(anchor.p, "anchor p");
    std::ostringstream head;
    head.precision(17);
    head << "ADQA 1\n";
    head << "epsilon " << anchor.epsilon << "\n";
    head << "dim " << anchor.p.dim() << "\n";
    head << "members " << anchor.member_ids.size() << "\n";
    for (const auto& id : anchor.member_ids) head << id << "\n";
    head << "data\n";
    std::string bytes = head.str();
    for (double v : anchor.p.values) write_f32_le(bytes, static_cast<float>(v));
    write_file_bytes(path, bytes);
}

Anchor load_anchor(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    std::istringstream in(bytes);
    std::string line;
    if (!std::getline(in, line) || line != "ADQA 1") {
        throw_validation(path + ": not an ADQA anchor file");
    }
    Anchor anchor;
    size_t dim = 0, members = 0;
    auto expect_kv = [&](const std::string& key) -> std::string {
        if (!std::getline(in, line)) throw_validation(path + ": truncated header");
        std::istringstream ls(line);
        std::string k, v;
        ls >> k >> v;
        if (k != key) throw_validation(path + ": expected '" + key + "' line, got '" + line + "'");
        return v;
    };
    anchor.epsilon = std::stod(expect_kv("epsilon"));
    dim = std::stoul(expect_kv("dim"));
    members = std::stoul(expect_kv("members"));
    for (size_t i = 0; i < members; ++i) {
        if (!std::getline(in, line) || line.empty()) {
            throw_validation(path + ": truncated member list");
        }
        anchor.member_ids.push_back(line);
    }
    if (!std::getline(in, line) || line != "data") {
        throw_validation(path + ": missing data marker");
    }
    size_t off = static_cast<size_t>(in.tellg());
    if (bytes.size() - off != dim * 4) {
        throw_validation(path + ": vector payload has " + std::to_string(bytes.size() - off) +
                         " bytes, expected " + std::to_string(dim * 4));
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + off;
    anchor.p.values.resize(dim);
    for (size_t i = 0; i < dim; ++i) {
        anchor.p.values[i] = static_cast<double>(read_f32_le(p + i * 4));
    }
    validate_embedding(anchor.p, path + " anchor p");
    return anchor;
}

void write_routing_audit(const std::vector<RoutingDecision>& decisions,
                         const RouterConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path + " for writing");
    for (const auto& d : decisions) {
        nlohmann::json j;
        j["query_id"] = d.query_id;
        j["similarity"] = d.similarity;
        j["tau"] = config.tau;
        j["mode"] = to_string(config.mode);
        j["path"] = to_string(d.path);
        out << j.dump() << "\n";
    }
    if (!out) throw_io("write failed: " + path);
}

} // namespace adaqr
