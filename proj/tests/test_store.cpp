#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "adaqr/errors.hpp"
#include "adaqr/rng.hpp"
#include "adaqr/store.hpp"
#include "helpers.hpp"

using namespace adaqr;

namespace {

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
}

} // namespace

TEST_CASE("query collection: well-formed records load in order") {
    TempDir dir("store");
    write_text(dir.file("q.jsonl"),
               R"({"dim": 3})" "\n"
               R"({"id":"a","text":"first","embedding":[1.0,2.0,3.0],"tag":"bio"})" "\n"
               R"({"id":"b","text":"second","embedding":[0.5,0.25,-1.0],"reasoned_text":"rw","reasoned_embedding":[1,1,1]})" "\n");
    auto records = load_query_collection(dir.file("q.jsonl"));
    REQUIRE(records.size() == 2);
    CHECK(records[0].id == "a");
    CHECK(records[0].text == "first");
    CHECK(records[0].dataset_tag == "bio");
    CHECK(records[0].embedding->values == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(!records[0].reasoned_text.has_value());
    CHECK(records[1].id == "b");
    CHECK(*records[1].reasoned_text == "rw");
    CHECK(records[1].reasoned_embedding->dim() == 3);
}

TEST_CASE("query collection: header dim mismatch names the record") {
    TempDir dir("store");
    write_text(dir.file("q.jsonl"),
               R"({"dim": 4})" "\n"
               R"({"id":"ok","embedding":[1,2,3,4]})" "\n"
               R"({"id":"bad","embedding":[1,2,3]})" "\n");
    CHECK_THROWS_WITH_AS(load_query_collection(dir.file("q.jsonl")),
                         doctest::Contains("'bad'"), Error);
}

TEST_CASE("query collection: duplicate id rejected on the third record") {
    TempDir dir("store");
    write_text(dir.file("q.jsonl"),
               R"({"id":"a","text":"1"})" "\n"
               R"({"id":"b","text":"2"})" "\n"
               R"({"id":"a","text":"3"})" "\n");
    CHECK_THROWS_WITH_AS(load_query_collection(dir.file("q.jsonl")),
                         doctest::Contains("duplicate id 'a'"), Error);
}

TEST_CASE("query collection: malformed line reports its number") {
    TempDir dir("store");
    write_text(dir.file("q.jsonl"),
               R"({"id":"a","text":"1"})" "\n"
               "not json\n");
    CHECK_THROWS_WITH_AS(load_query_collection(dir.file("q.jsonl")),
                         doctest::Contains(":2:"), Error);
    CHECK_THROWS_AS(load_query_collection(dir.file("missing.jsonl")), Error);
}

TEST_CASE("query collection: non-finite embedding rejected") {
    TempDir dir("store");
    write_text(dir.file("q.jsonl"), R"({"id":"a","embedding":[1.0,null,2.0]})" "\n");
    CHECK_THROWS_AS(load_query_collection(dir.file("q.jsonl")), Error);
}

TEST_CASE("corpus: empty file is a valid empty corpus") {
    TempDir dir("store");
    write_text(dir.file("c.jsonl"), "");
    CHECK(load_corpus(dir.file("c.jsonl")).empty());
}

TEST_CASE("corpus: three documents of one dim load; mixed dims fail") {
    TempDir dir("store");
    write_text(dir.file("c.jsonl"),
               R"({"id":"d1","text":"x","embedding":[1,0,0,0,0,0,0,0]})" "\n"
               R"({"id":"d2","text":"y","embedding":[0,1,0,0,0,0,0,0]})" "\n"
               R"({"id":"d3","text":"z","embedding":[0,0,1,0,0,0,0,0]})" "\n");
    auto docs = load_corpus(dir.file("c.jsonl"));
    REQUIRE(docs.size() == 3);
    CHECK(docs[0].embedding.dim() == 8);

    write_text(dir.file("bad.jsonl"),
               R"({"id":"d1","embedding":[1,0,0,0,0,0,0,0]})" "\n"
               R"({"id":"d2","embedding":[1,0]})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir.file("bad.jsonl")),
                         doctest::Contains("dim"), Error);
}

TEST_CASE("qrels: grades parse, negatives rejected, last write wins") {
    TempDir dir("store");
    write_text(dir.file("qrels.txt"), "q1 0 d7 2\nq2 0 d1 0\n");
    auto qrels = load_qrels(dir.file("qrels.txt"));
    CHECK(qrels.entries.at("q1").at("d7") == 2);
    CHECK(qrels.grade("q2", "d1") == 0);
    CHECK(qrels.grade("q2", "unjudged") == 0);

    write_text(dir.file("neg.txt"), "q1 0 d7 -1\n");
    CHECK_THROWS_WITH_AS(load_qrels(dir.file("neg.txt")),
                         doctest::Contains("negative grade"), Error);

    write_text(dir.file("dup.txt"), "q1 0 d7 1\nq1 0 d7 3\n");
    CHECK(load_qrels(dir.file("dup.txt")).entries.at("q1").at("d7") == 3);

    write_text(dir.file("bad.txt"), "q1 0 d7\n");
    CHECK_THROWS_WITH_AS(load_qrels(dir.file("bad.txt")),
                         doctest::Contains("malformed"), Error);
}

TEST_CASE("round trip: save then load is the identity on all fields") {
    TempDir dir("store");
    Rng rng(42);
    std::vector<QueryRecord> records;
    for (int i = 0; i < 5; ++i) {
        QueryRecord r;
        r.id = "q" + std::to_string(i);
        r.text = "text with \"quotes\" and unicode \xE2\x9C\x93 " + std::to_string(i);
        r.dataset_tag = i % 2 ? "even" : "odd";
        Embedding e;
        for (int j = 0; j < 6; ++j) e.values.push_back(rng.next_gaussian());
        r.embedding = e;
        if (i % 2 == 0) {
            r.reasoned_text = "reasoned " + std::to_string(i);
            Embedding re;
            for (int j = 0; j < 6; ++j) re.values.push_back(rng.next_gaussian());
            r.reasoned_embedding = re;
        }
        records.push_back(std::move(r));
    }
    save_query_collection(records, dir.file("out.jsonl"));
    auto loaded = load_query_collection(dir.file("out.jsonl"));
    REQUIRE(loaded.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].id == records[i].id);
        CHECK(loaded[i].text == records[i].text);
        CHECK(loaded[i].dataset_tag == records[i].dataset_tag);
        CHECK(loaded[i].embedding->values == records[i].embedding->values);
        CHECK(loaded[i].reasoned_text == records[i].reasoned_text);
        if (records[i].reasoned_embedding) {
            CHECK(loaded[i].reasoned_embedding->values ==
                  records[i].reasoned_embedding->values);
        }
    }
}

TEST_CASE("save: unwritable path is an io error; empty save loads empty") {
    std::vector<QueryRecord> none;
    CHECK_THROWS_AS(save_query_collection(none, "/nonexistent-dir/x.jsonl"), Error);

    TempDir dir("store");
    save_query_collection(none, dir.file("empty.jsonl"));
    CHECK(load_query_collection(dir.file("empty.jsonl")).empty());
}

TEST_CASE("binary sidecar: f32 payload round-trips bit-exactly") {
    TempDir dir("store");
    Rng rng(7);
    std::vector<std::string> ids;
    std::vector<Embedding> embeddings;
    for (int i = 0; i < 4; ++i) {
        ids.push_back("e" + std::to_string(i));
        Embedding e;
        for (int j = 0; j < 5; ++j) {
            e.values.push_back(static_cast<double>(static_cast<float>(rng.next_gaussian())));
        }
        embeddings.push_back(std::move(e));
    }
    save_embeddings_binary(ids, embeddings, dir.file("emb.bin"));
    auto [loaded_ids, loaded] = load_embeddings_binary(dir.file("emb.bin"));
    CHECK(loaded_ids == ids);
    REQUIRE(loaded.size() == embeddings.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].values == embeddings[i].values);
    }
    // save(load(f)) is byte-identical
    save_embeddings_binary(loaded_ids, loaded, dir.file("emb2.bin"));
    CHECK(read_file_bytes(dir.file("emb.bin")) == read_file_bytes(dir.file("emb2.bin")));

    write_text(dir.file("junk.bin"), "XXXXJUNK");
    CHECK_THROWS_AS(load_embeddings_binary(dir.file("junk.bin")), Error);
}

TEST_CASE("pair set extraction validates both embeddings") {
    QueryRecord full;
    full.id = "a";
    full.embedding = Embedding({1.0, 0.0});
    full.reasoned_embedding = Embedding({0.0, 1.0});
    QueryRecord missing;
    missing.id = "b";
    missing.embedding = Embedding({1.0, 0.0});

    auto [set, ids] = make_pair_set({full});
    CHECK(set.dim == 2);
    CHECK(ids == std::vector<std::string>{"a"});
    CHECK_THROWS_WITH_AS(make_pair_set({full, missing}),
                         doctest::Contains("'b'"), Error);
}
