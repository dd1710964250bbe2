#include "adaqr/store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "adaqr/errors.hpp"

using nlohmann::json;

namespace adaqr {

namespace {

std::string loc(const std::string& path, size_t line_no) {
    return path + ":" + std::to_string(line_no);
}

Embedding parse_embedding_field(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw_validation(where + ": embedding field is not an array");
    Embedding e;
    e.values.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) throw_validation(where + ": embedding entry is not a number");
        e.values.push_back(v.get<double>());
    }
    validate_embedding(e, where);
    return e;
}

json embedding_to_json(const Embedding& e) {
    json arr = json::array();
    for (double v : e.values) arr.push_back(v);
    return arr;
}

// Shared walk over a record file. Sets header_dim (0 = no header) before
// any on_record(parsed json, line_no) callback fires, so loaders can
// validate against it as they go.
template <typename Fn>
void for_each_record_line(const std::string& path, size_t& header_dim, Fn&& on_record) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open " + path);
    header_dim = 0;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw_validation(loc(path, line_no) + ": malformed record: " + e.what());
        }
        if (!j.is_object()) throw_validation(loc(path, line_no) + ": record is not an object");
        if (line_no == 1 && !j.contains("id")) {
            if (j.contains("dim") && j["dim"].is_number_unsigned() && j["dim"].get<size_t>() >= 1) {
                header_dim = j["dim"].get<size_t>();
                continue;
            }
            throw_validation(loc(path, line_no) + ": first line is neither a record nor a valid header");
        }
        if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
            throw_validation(loc(path, line_no) + ": missing or empty id");
        }
        on_record(j, line_no);
    }
}

void check_dim(size_t& collection_dim, size_t header_dim, const Embedding& e,
               const std::string& path, size_t line_no, const std::string& id) {
    if (header_dim != 0 && e.dim() != header_dim) {
        throw_validation(loc(path, line_no) + ": record '" + id + "' has dim " +
                         std::to_string(e.dim()) + " but header dim is " +
                         std::to_string(header_dim));
    }
    if (collection_dim == 0) {
        collection_dim = e.dim();
    } else if (e.dim() != collection_dim) {
        throw_validation(loc(path, line_no) + ": record '" + id + "' has dim " +
                         std::to_string(e.dim()) + " but collection dim is " +
                         std::to_string(collection_dim));
    }
}

} // namespace

std::vector<QueryRecord> load_query_collection(const std::string& path) {
    std::vector<QueryRecord> out;
    std::unordered_set<std::string> seen;
    size_t collection_dim = 0;
    size_t header_dim = 0;

    for_each_record_line(path, header_dim, [&](const json& j, size_t line_no) {
        QueryRecord r;
        r.id = j["id"].get<std::string>();
        if (!seen.insert(r.id).second) {
            throw_validation(loc(path, line_no) + ": duplicate id '" + r.id + "'");
        }
        r.text = j.value("text", std::string());
        r.dataset_tag = j.value("tag", std::string());
        if (j.contains("embedding")) {
            r.embedding = parse_embedding_field(j["embedding"], loc(path, line_no) + " '" + r.id + "'");
            check_dim(collection_dim, header_dim, *r.embedding, path, line_no, r.id);
        }
        if (j.contains("reasoned_text") && j["reasoned_text"].is_string()) {
            r.reasoned_text = j["reasoned_text"].get<std::string>();
        }
        if (j.contains("reasoned_embedding")) {
            r.reasoned_embedding =
                parse_embedding_field(j["reasoned_embedding"], loc(path, line_no) + " '" + r.id + "'");
            check_dim(collection_dim, header_dim, *r.reasoned_embedding, path, line_no, r.id);
        }
        out.push_back(std::move(r));
    });
    return out;
}

void save_query_collection(const std::vector<QueryRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path + " for writing");
    size_t dim = 0;
    for (const auto& r : records) {
        if (r.embedding) { dim = r.embedding->dim(); break; }
        if (r.reasoned_embedding) { dim = r.reasoned_embedding->dim(); break; }
    }
    if (dim != 0) {
        json header;
        header["dim"] = dim;
        out << header.dump() << "\n";
    }
    for (const auto& r : records) {
        json j;
        j["id"] = r.id;
        j["text"] = r.text;
        if (!r.dataset_tag.empty()) j["tag"] = r.dataset_tag;
        if (r.embedding) j["embedding"] = embedding_to_json(*r.embedding);
        if (r.reasoned_text) j["reasoned_text"] = *r.reasoned_text;
        if (r.reasoned_embedding) j["reasoned_embedding"] = embedding_to_json(*r.reasoned_embedding);
        out << j.dump() << "\n";
    }
    if (!out) throw_io("write failed: " + path);
}

std::vector<Document> load_corpus(const std::string& path) {
    std::vector<Document> out;
    std::unordered_set<std::string> seen;
    size_t collection_dim = 0;
    size_t header_dim = 0;

    for_each_record_line(path, header_dim, [&](const json& j, size_t line_no) {
        Document d;
        d.id = j["id"].get<std::string>();
        if (!seen.insert(d.id).second) {
            throw_validation(loc(path, line_no) + ": duplicate id '" + d.id + "'");
        }
        d.text = j.value("text", std::string());
        if (!j.contains("embedding")) {
            throw_validation(loc(path, line_no) + ": document '" + d.id + "' has no embedding");
        }
        d.embedding = parse_embedding_field(j["embedding"], loc(path, line_no) + " '" + d.id + "'");
        check_dim(collection_dim, header_dim, d.embedding, path, line_no, d.id);
        out.push_back(std::move(d));
    });
    return out;
}

void save_corpus(const std::vector<Document>& docs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path + " for writing");
    if (!docs.empty()) {
        json header;
        header["dim"] = docs.front().embedding.dim();
        out << header.dump() << "\n";
    }
    for (const auto& d : docs) {
        json j;
        j["id"] = d.id;
        j["text"] = d.text;
        j["embedding"] = embedding_to_json(d.embedding);
        out << j.dump() << "\n";
    }
    if (!out) throw_io("write failed: " + path);
}

RelevanceJudgments load_qrels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open " + path);
    RelevanceJudgments out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, iter, did;
        long grade;
        if (!(ss >> qid >> iter >> did >> grade)) {
            throw_validation(loc(path, line_no) + ": malformed qrels line");
        }
        if (grade < 0) {
            throw_validation(loc(path, line_no) + ": negative grade " + std::to_string(grade) +
                             " for (" + qid + ", " + did + ")");
        }
        auto& per_doc = out.entries[qid];
        auto it = per_doc.find(did);
        if (it != per_doc.end()) {
            std::cerr << "warning: " << loc(path, line_no) << ": duplicate judgment for ("
                      << qid << ", " << did << "), keeping the later grade " << grade << "\n";
            it->second = static_cast<int>(grade);
        } else {
            per_doc.emplace(did, static_cast<int>(grade));
        }
    }
    return out;
}

void save_qrels(const RelevanceJudgments& qrels, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path + " for writing");
    for (const auto& [qid, docs] : qrels.entries) {
        for (const auto& [did, grade] : docs) {
            out << qid << " 0 " << did << " " << grade << "\n";
        }
    }
    if (!out) throw_io("write failed: " + path);
}

void write_u32_le(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void write_f32_le(std::string& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_u32_le(out, bits);
}

uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

float read_f32_le(const unsigned char* p) {
    uint32_t bits = read_u32_le(p);
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw_io("write failed: " + path);
}

void save_embeddings_binary(const std::vector<std::string>& ids,
                            const std::vector<Embedding>& embeddings,
                            const std::string& path) {
    if (ids.size() != embeddings.size()) {
        throw_validation("save_embeddings_binary: ids/embeddings count mismatch");
    }
    size_t dim = embeddings.empty() ? 0 : embeddings.front().dim();
    for (size_t i = 0; i < embeddings.size(); ++i) {
        if (embeddings[i].dim() != dim) {
            throw_validation("save_embeddings_binary: '" + ids[i] + "' has dim " +
                             std::to_string(embeddings[i].dim()) + ", expected " +
                             std::to_string(dim));
        }
    }
    std::string bytes;
    bytes.reserve(16 + embeddings.size() * dim * 4);
    bytes += "ADQR";
    write_u32_le(bytes, 1); // version
    write_u32_le(bytes, static_cast<uint32_t>(dim));
    write_u32_le(bytes, static_cast<uint32_t>(embeddings.size()));
    for (const auto& e : embeddings) {
        for (double v : e.values) write_f32_le(bytes, static_cast<float>(v));
    }
    write_file_bytes(path, bytes);

    std::ofstream idx(path + ".ids", std::ios::binary);
    if (!idx) throw_io("cannot open " + path + ".ids for writing");
    for (const auto& id : ids) idx << id << "\n";
    if (!idx) throw_io("write failed: " + path + ".ids");
}

std::pair<std::vector<std::string>, std::vector<Embedding>>
load_embeddings_binary(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    if (bytes.size() < 16 || bytes.compare(0, 4, "ADQR") != 0) {
        throw_validation(path + ": not an ADQR embedding file");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    uint32_t version = read_u32_le(p + 4);
    if (version != 1) throw_validation(path + ": unsupported version " + std::to_string(version));
    uint32_t dim = read_u32_le(p + 8);
    uint32_t count = read_u32_le(p + 12);
    size_t expected = 16 + static_cast<size_t>(dim) * count * 4;
    if (bytes.size() != expected) {
        throw_validation(path + ": truncated (have " + std::to_string(bytes.size()) +
                         " bytes, expected " + std::to_string(expected) + ")");
    }
    std::vector<Embedding> embeddings;
    embeddings.reserve(count);
    size_t off = 16;
    for (uint32_t i = 0; i < count; ++i) {
        Embedding e;
        e.values.reserve(dim);
        for (uint32_t j = 0; j < dim; ++j) {
            e.values.push_back(static_cast<double>(read_f32_le(p + off)));
            off += 4;
        }
        validate_embedding(e, path + " record " + std::to_string(i));
        embeddings.push_back(std::move(e));
    }

    std::ifstream idx(path + ".ids");
    if (!idx) throw_io("cannot open " + path + ".ids");
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(idx, line)) {
        if (!line.empty()) ids.push_back(line);
    }
    if (ids.size() != count) {
        throw_validation(path + ".ids: has " + std::to_string(ids.size()) +
                         " ids, embedding file has " + std::to_string(count));
    }
    return {std::move(ids), std::move(embeddings)};
}

std::pair<EmbeddingPairSet, std::vector<std::string>>
make_pair_set(const std::vector<QueryRecord>& records) {
    EmbeddingPairSet set;
    std::vector<std::string> ids;
    for (const auto& r : records) {
        if (!r.embedding) {
            throw_validation("pair set: record '" + r.id + "' has no original embedding");
        }
        if (!r.reasoned_embedding) {
            throw_validation("pair set: record '" + r.id + "' has no reasoned embedding");
        }
        require_same_dim(*r.embedding, *r.reasoned_embedding, "pair set record '" + r.id + "'");
        if (set.dim == 0) {
            set.dim = r.embedding->dim();
        } else if (r.embedding->dim() != set.dim) {
            throw_validation("pair set: record '" + r.id + "' has dim " +
                             std::to_string(r.embedding->dim()) + ", expected " +
                             std::to_string(set.dim));
        }
        set.pairs.emplace_back(*r.embedding, *r.reasoned_embedding);
        ids.push_back(r.id);
    }
    if (set.pairs.empty()) throw_validation("pair set: no records with embedding pairs");
    return {std::move(set), std::move(ids)};
}

} // namespace adaqr
