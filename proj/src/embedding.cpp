#include "adaqr/embedding.hpp"

#include <cmath>

#include "adaqr/errors.hpp"

namespace adaqr {

void validate_embedding(const Embedding& e, const std::string& what) {
    if (e.dim() == 0) {
        throw_validation(what + ": embedding has dim 0");
    }
    for (size_t i = 0; i < e.dim(); ++i) {
        if (!std::isfinite(e.values[i])) {
            throw_validation(what + ": non-finite value at index " + std::to_string(i));
        }
    }
}

void require_same_dim(const Embedding& a, const Embedding& b, const std::string& what) {
    if (a.dim() != b.dim()) {
        throw_validation(what + ": dimension mismatch (" + std::to_string(a.dim()) +
                         " vs " + std::to_string(b.dim()) + ")");
    }
}

double dot(const Embedding& a, const Embedding& b) {
    require_same_dim(a, b, "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.dim(); ++i) s += a.values[i] * b.values[i];
    return s;
}

double l2_norm(const Embedding& e) {
    double s = 0.0;
    for (double v : e.values) s += v * v;
    return std::sqrt(s);
}

Embedding normalized(const Embedding& e) {
    double n = l2_norm(e);
    if (n == 0.0) {
        throw_validation("normalized: zero-norm vector");
    }
    Embedding out = e;
    for (double& v : out.values) v /= n;
    return out;
}

Embedding add(const Embedding& a, const Embedding& b) {
    require_same_dim(a, b, "add");
    Embedding out = a;
    for (size_t i = 0; i < b.dim(); ++i) out.values[i] += b.values[i];
    return out;
}

Embedding sub(const Embedding& a, const Embedding& b) {
    require_same_dim(a, b, "sub");
    Embedding out = a;
    for (size_t i = 0; i < b.dim(); ++i) out.values[i] -= b.values[i];
    return out;
}

Embedding scale(const Embedding& e, double c) {
    Embedding out = e;
    for (double& v : out.values) v *= c;
    return out;
}

} // namespace adaqr
