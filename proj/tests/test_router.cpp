#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adaqr/errors.hpp"
#include "adaqr/rng.hpp"
#include "adaqr/router.hpp"
#include "adaqr/store.hpp"
#include "helpers.hpp"

using namespace adaqr;

namespace {

QueryRecord query(const std::string& id, std::vector<double> e) {
    QueryRecord q;
    q.id = id;
    q.embedding = Embedding(std::move(e));
    return q;
}

} // namespace

TEST_CASE("build_oracle_set: comparable-or-better rule") {
    std::map<std::string, double> dr = {{"q1", 0.5}, {"q2", 0.2}};
    std::map<std::string, double> llm = {{"q1", 0.4}, {"q2", 0.6}};
    CHECK(build_oracle_set(dr, llm, 0.0) == std::vector<std::string>{"q1"});
    CHECK(build_oracle_set(dr, llm, 0.5) == std::vector<std::string>{"q1", "q2"});

    std::map<std::string, double> worse = {{"q1", 0.1}, {"q2", 0.1}};
    CHECK_THROWS_WITH_AS(build_oracle_set(worse, llm, 0.0),
                         doctest::Contains("empty oracle set"), Error);

    std::map<std::string, double> other = {{"q1", 0.5}, {"qX", 0.2}};
    CHECK_THROWS_AS(build_oracle_set(other, llm, 0.0), Error);
}

TEST_CASE("build_anchor: mean of member originals") {
    std::vector<QueryRecord> queries = {query("a", {1, 0}), query("b", {0, 1})};
    Anchor anchor = build_anchor(queries, {"a", "b"}, 0.0);
    CHECK(anchor.p.values[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(anchor.p.values[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(anchor.member_ids == std::vector<std::string>{"a", "b"});

    Anchor single = build_anchor(queries, {"b"}, 0.25);
    CHECK(single.p.values == std::vector<double>{0, 1});
    CHECK(single.epsilon == 0.25);
}

TEST_CASE("build_anchor: matches an independent mean and ignores member order") {
    Rng rng(83);
    std::vector<QueryRecord> queries;
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) {
        std::vector<double> v;
        for (int j = 0; j < 6; ++j) v.push_back(rng.next_gaussian());
        queries.push_back(query("q" + std::to_string(i), v));
        ids.push_back(queries.back().id);
    }
    Anchor anchor = build_anchor(queries, ids, 0.0);

    // Independent mean: reversed iteration order, one component at a time.
    for (size_t j = 0; j < 6; ++j) {
        double sum = 0.0;
        for (size_t i = queries.size(); i-- > 0;) sum += queries[i].embedding->values[j];
        CHECK(std::abs(anchor.p.values[j] - sum / 10.0) < 1e-12);
    }

    std::vector<std::string> permuted = ids;
    rng.shuffle(permuted);
    Anchor anchor2 = build_anchor(queries, permuted, 0.0);
    for (size_t j = 0; j < 6; ++j) {
        CHECK(std::abs(anchor.p.values[j] - anchor2.p.values[j]) < 1e-12);
    }
}

TEST_CASE("build_anchor: errors") {
    std::vector<QueryRecord> queries = {query("a", {1, 0})};
    QueryRecord no_embedding;
    no_embedding.id = "bare";
    queries.push_back(no_embedding);
    CHECK_THROWS_AS(build_anchor(queries, {}, 0.0), Error);
    CHECK_THROWS_WITH_AS(build_anchor(queries, {"bare"}, 0.0),
                         doctest::Contains("'bare'"), Error);
    CHECK_THROWS_AS(build_anchor(queries, {"unknown"}, 0.0), Error);
}

TEST_CASE("route: threshold decision and sentinels") {
    std::vector<QueryRecord> queries = {query("a", {1, 0})};
    Anchor anchor = build_anchor(queries, {"a"}, 0.0);

    RouterConfig config;
    config.tau = 0.9;
    RoutingDecision same = route("x", Embedding({2, 0}), anchor, config);
    CHECK(same.path == RoutePath::dense);
    CHECK(same.similarity == doctest::Approx(1.0));

    config.tau = 0.5;
    RoutingDecision perp = route("y", Embedding({0, 3}), anchor, config);
    CHECK(perp.path == RoutePath::llm);
    CHECK(perp.similarity == doctest::Approx(0.0));

    config.tau = -1.0; // cosine floor: every query goes dense
    CHECK(route("z", Embedding({-1, 0}), anchor, config).path == RoutePath::dense);

    config.mode = RouteMode::always_llm;
    config.tau = 1.5; // out-of-range tau is fine under a sentinel: it is unused
    CHECK(route("z", Embedding({2, 0}), anchor, config).path == RoutePath::llm);
    config.mode = RouteMode::always_dense;
    CHECK(route("z", Embedding({0, 1}), anchor, config).path == RoutePath::dense);

    config.mode = RouteMode::threshold;
    config.tau = 1.5;
    CHECK_THROWS_AS(route("z", Embedding({1, 0}), anchor, config), Error);
}

TEST_CASE("route: cosine routing is scale invariant and tau-monotone") {
    Rng rng(89);
    std::vector<QueryRecord> members;
    for (int i = 0; i < 5; ++i) {
        std::vector<double> v;
        for (int j = 0; j < 4; ++j) v.push_back(rng.next_gaussian());
        members.push_back(query("m" + std::to_string(i), v));
    }
    Anchor anchor = build_anchor(members, {"m0", "m1", "m2", "m3", "m4"}, 0.0);

    std::vector<Embedding> probes;
    for (int i = 0; i < 40; ++i) {
        Embedding e;
        for (int j = 0; j < 4; ++j) e.values.push_back(rng.next_gaussian());
        probes.push_back(std::move(e));
    }

    RouterConfig config;
    for (const auto& e : probes) {
        config.tau = 0.3;
        RoutingDecision d1 = route("p", e, anchor, config);
        RoutingDecision d2 = route("p", scale(e, 7.5), anchor, config);
        CHECK(d1.path == d2.path);
        CHECK(std::abs(d1.similarity - d2.similarity) < 1e-12);
    }

    // tau1 <= tau2: llm set under tau1 is a subset of llm set under tau2.
    for (double tau1 : {-0.5, 0.0, 0.4}) {
        for (double tau2 : {0.5, 0.8, 1.0}) {
            size_t llm1 = 0, llm2 = 0;
            for (const auto& e : probes) {
                config.tau = tau1;
                bool is_llm1 = route("p", e, anchor, config).path == RoutePath::llm;
                config.tau = tau2;
                bool is_llm2 = route("p", e, anchor, config).path == RoutePath::llm;
                llm1 += is_llm1;
                llm2 += is_llm2;
                if (is_llm1) CHECK(is_llm2); // subset, elementwise
            }
            CHECK(llm1 <= llm2);
        }
    }
}

TEST_CASE("resolve_embedding: delegation per path") {
    MapperParams mapper = init_params(2, 5);
    QueryRecord q = query("a", {0.5, -0.5});
    q.reasoned_embedding = Embedding({9.0, 9.0});

    RoutingDecision dense{"a", RoutePath::dense, 0.8};
    CHECK(resolve_embedding(dense, q, mapper).values ==
          forward(mapper, *q.embedding).values);

    RoutingDecision llm{"a", RoutePath::llm, 0.1};
    CHECK(resolve_embedding(llm, q, mapper).values == std::vector<double>{9.0, 9.0});

    QueryRecord bare = query("naked", {1, 0});
    CHECK_THROWS_WITH_AS(resolve_embedding(llm, bare, mapper),
                         doctest::Contains("'naked'"), Error);

    // An online source fills the gap when no precomputed rewrite exists.
    Embedding via_source = resolve_embedding(
        llm, bare, mapper, false, [](const QueryRecord&) { return Embedding({4.0, 4.0}); });
    CHECK(via_source.values == std::vector<double>{4.0, 4.0});

    QueryRecord headless;
    headless.id = "no-embedding";
    CHECK_THROWS_AS(resolve_embedding(dense, headless, mapper), Error);
}

TEST_CASE("anchor file: save then load round trip") {
    TempDir dir("anchor");
    std::vector<QueryRecord> queries = {query("a", {0.25, -1.5, 3.0}),
                                        query("b", {1.0, 2.0, -0.5})};
    Anchor anchor = build_anchor(queries, {"a", "b"}, 0.125);
    save_anchor(anchor, dir.file("anchor.bin"));
    Anchor loaded = load_anchor(dir.file("anchor.bin"));
    CHECK(loaded.member_ids == anchor.member_ids);
    CHECK(loaded.epsilon == anchor.epsilon);
    REQUIRE(loaded.p.dim() == 3);
    for (size_t j = 0; j < 3; ++j) {
        CHECK(loaded.p.values[j] == doctest::Approx(anchor.p.values[j]).epsilon(1e-6));
    }
    // f32 storage: a second save is byte-identical.
    save_anchor(loaded, dir.file("anchor2.bin"));
    CHECK(read_file_bytes(dir.file("anchor.bin")) == read_file_bytes(dir.file("anchor2.bin")));
}
