#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adaqr/cost.hpp"
#include "adaqr/errors.hpp"

using namespace adaqr;

namespace {

std::vector<RoutingDecision> decisions(size_t dense, size_t llm) {
    std::vector<RoutingDecision> out;
    for (size_t i = 0; i < dense; ++i) {
        out.push_back({"dense" + std::to_string(i), RoutePath::dense, 0.9});
    }
    for (size_t i = 0; i < llm; ++i) {
        out.push_back({"llm" + std::to_string(i), RoutePath::llm, 0.1});
    }
    return out;
}

RewriteResult rewrite(const std::string& id, uint64_t prompt, uint64_t completion) {
    RewriteResult r;
    r.query_id = id;
    r.reasoned_text = "text";
    r.prompt_tokens = prompt;
    r.completion_tokens = completion;
    return r;
}

} // namespace

TEST_CASE("fixed per call: 7 of 10 dense gives 70% savings") {
    auto d = decisions(7, 3);
    std::map<std::string, RewriteResult> rewrites;
    for (int i = 0; i < 3; ++i) {
        rewrites["llm" + std::to_string(i)] = rewrite("llm" + std::to_string(i), 10, 20);
    }
    CostLedger ledger = accumulate_cost(d, rewrites, CostUnit::fixed_per_call);
    CHECK(ledger.total == doctest::Approx(3.0));
    CHECK(ledger.per_query.size() == 10);
    CHECK(ledger.per_query.at("dense0") == 0.0);
    CHECK(ledger.per_query.at("llm2") == 1.0);
    CHECK(savings_vs_all_llm(ledger, 10.0) == doctest::Approx(0.7));

    double sum = 0.0;
    for (const auto& [qid, c] : ledger.per_query) sum += c;
    CHECK(sum == ledger.total);
}

TEST_CASE("all llm routed: zero savings") {
    auto d = decisions(0, 4);
    std::map<std::string, RewriteResult> rewrites;
    for (int i = 0; i < 4; ++i) {
        rewrites["llm" + std::to_string(i)] = rewrite("llm" + std::to_string(i), 1, 1);
    }
    CostLedger ledger = accumulate_cost(d, rewrites, CostUnit::fixed_per_call);
    CHECK(savings_vs_all_llm(ledger, 4.0) == doctest::Approx(0.0));
}

TEST_CASE("token units: completion vs total") {
    auto d = decisions(1, 2);
    std::map<std::string, RewriteResult> rewrites = {
        {"llm0", rewrite("llm0", 30, 100)},
        {"llm1", rewrite("llm1", 20, 50)},
    };
    CostLedger completion = accumulate_cost(d, rewrites, CostUnit::completion_tokens);
    CHECK(completion.total == doctest::Approx(150.0));
    // 150 spent of an all-LLM total of 300 -> half saved.
    CHECK(savings_vs_all_llm(completion, 300.0) == doctest::Approx(0.5));

    CostLedger total = accumulate_cost(d, rewrites, CostUnit::total_tokens);
    CHECK(total.total == doctest::Approx(200.0));
}

TEST_CASE("missing rewrite for an llm-routed query is an error") {
    auto d = decisions(0, 1);
    CHECK_THROWS_WITH_AS(accumulate_cost(d, {}, CostUnit::fixed_per_call),
                         doctest::Contains("llm0"), Error);
}

TEST_CASE("savings baseline must be positive") {
    CostLedger empty;
    CHECK_THROWS_AS(savings_vs_all_llm(empty, 0.0), Error);
}

TEST_CASE("unit names round trip") {
    for (auto unit : {CostUnit::completion_tokens, CostUnit::total_tokens,
                      CostUnit::fixed_per_call}) {
        CHECK(cost_unit_from_string(to_string(unit)) == unit);
    }
    CHECK_THROWS_AS(cost_unit_from_string("euros"), Error);
}
