#include "adaqr/mapper.hpp"

#include <cmath>
#include <fstream>

#include "adaqr/errors.hpp"
#include "adaqr/rng.hpp"
#include "adaqr/store.hpp"

namespace adaqr {

MapperParams init_params(size_t dim, uint64_t seed) {
    if (dim < 1) throw_validation("init_params: dim must be >= 1");
    MapperParams p;
    p.dim = dim;
    p.w1.resize(dim * dim);
    p.w2.resize(dim * dim);
    p.b1.assign(dim, 0.0);
    p.b2.assign(dim, 0.0);
    double bound = std::sqrt(6.0 / (2.0 * static_cast<double>(dim)));
    Rng rng(seed);
    for (double& w : p.w1) w = rng.next_uniform(-bound, bound);
    for (double& w : p.w2) w = rng.next_uniform(-bound, bound);
    return p;
}

void validate_params(const MapperParams& p) {
    if (p.dim < 1) throw_validation("mapper params: dim must be >= 1");
    size_t d = p.dim;
    if (p.w1.size() != d * d || p.w2.size() != d * d || p.b1.size() != d || p.b2.size() != d) {
        throw_validation("mapper params: shapes inconsistent with dim " + std::to_string(d));
    }
    auto check = [](const std::vector<double>& v, const char* name) {
        for (double x : v) {
            if (!std::isfinite(x)) throw_validation(std::string("mapper params: non-finite entry in ") + name);
        }
    };
    check(p.w1, "w1");
    check(p.b1, "b1");
    check(p.w2, "w2");
    check(p.b2, "b2");
}

Embedding forward(const MapperParams& p, const Embedding& e, bool output_tanh) {
    if (e.dim() != p.dim) {
        throw_validation("forward: embedding dim " + std::to_string(e.dim()) +
                         " does not match mapper dim " + std::to_string(p.dim));
    }
    size_t d = p.dim;
    Embedding out;
    out.values.resize(d);
    std::vector<double> hidden(d);
    for (size_t i = 0; i < d; ++i) {
        double acc = p.b1[i];
        const double* row = &p.w1[i * d];
        for (size_t j = 0; j < d; ++j) acc += row[j] * e.values[j];
        hidden[i] = std::tanh(acc);
    }
    for (size_t i = 0; i < d; ++i) {
        double acc = p.b2[i];
        const double* row = &p.w2[i * d];
        for (size_t j = 0; j < d; ++j) acc += row[j] * hidden[j];
        out.values[i] = output_tanh ? std::tanh(acc) : acc;
    }
    return out;
}

void save_checkpoint(const MapperParams& params, const std::string& path,
                     const std::string& meta) {
    validate_params(params);
    std::string bytes;
    size_t d = params.dim;
    bytes.reserve(12 + (2 * d * d + 2 * d) * 4);
    bytes += "ADQM";
    write_u32_le(bytes, 1); // version
    write_u32_le(bytes, static_cast<uint32_t>(d));
    auto dump = [&](const std::vector<double>& v) {
        for (double x : v) write_f32_le(bytes, static_cast<float>(x));
    };
    dump(params.w1);
    dump(params.b1);
    dump(params.w2);
    dump(params.b2);
    write_file_bytes(path, bytes);
    if (!meta.empty()) {
        write_file_bytes(path + ".meta", meta);
    }
}

MapperParams load_checkpoint(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    if (bytes.size() < 12 || bytes.compare(0, 4, "ADQM") != 0) {
        throw_validation(path + ": not an ADQM checkpoint");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    uint32_t version = read_u32_le(p + 4);
    if (version != 1) throw_validation(path + ": unsupported version " + std::to_string(version));
    size_t d = read_u32_le(p + 8);
    size_t expected = 12 + (2 * d * d + 2 * d) * 4;
    if (bytes.size() != expected) {
        throw_validation(path + ": truncated (have " + std::to_string(bytes.size()) +
                         " bytes, expected " + std::to_string(expected) + ")");
    }
    MapperParams params;
    params.dim = d;
    size_t off = 12;
    auto slurp = [&](std::vector<double>& v, size_t n) {
        v.resize(n);
        for (size_t i = 0; i < n; ++i) {
            v[i] = static_cast<double>(read_f32_le(p + off));
            off += 4;
        }
    };
    slurp(params.w1, d * d);
    slurp(params.b1, d);
    slurp(params.w2, d * d);
    slurp(params.b2, d);
    validate_params(params);
    return params;
}

} // namespace adaqr
