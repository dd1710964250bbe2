#pragma once

#include <string>
#include <vector>

#include "adaqr/records.hpp"

namespace adaqr {

// Line-delimited record files: one self-describing JSON record per line.
// An optional first line {"dim": N} pins the collection dim; otherwise the
// first embedding seen does. Loaders validate dims, finiteness, and id
// uniqueness, and report the line number on malformed input.

std::vector<QueryRecord> load_query_collection(const std::string& path);
void save_query_collection(const std::vector<QueryRecord>& records, const std::string& path);

std::vector<Document> load_corpus(const std::string& path);
void save_corpus(const std::vector<Document>& docs, const std::string& path);

// TREC-style qrels: `query-id 0 doc-id grade`, whitespace separated.
// Duplicate (query, doc) lines: last write wins with a warning on stderr.
RelevanceJudgments load_qrels(const std::string& path);
void save_qrels(const RelevanceJudgments& qrels, const std::string& path);

// Binary embedding sidecar: magic "ADQR", u32 version, u32 dim, u32 count,
// then count*dim little-endian f32 values. Ids live in a parallel text
// index file at `path + ".ids"`, one id per line.
void save_embeddings_binary(const std::vector<std::string>& ids,
                            const std::vector<Embedding>& embeddings,
                            const std::string& path);
std::pair<std::vector<std::string>, std::vector<Embedding>>
load_embeddings_binary(const std::string& path);

// Little-endian f32 helpers shared by the binary formats.
void write_f32_le(std::string& out, float v);
void write_u32_le(std::string& out, uint32_t v);
float read_f32_le(const unsigned char* p);
uint32_t read_u32_le(const unsigned char* p);

std::string read_file_bytes(const std::string& path);   // throws io on failure
void write_file_bytes(const std::string& path, const std::string& bytes);

} // namespace adaqr
