#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace adaqr {

// Fixed-dimension real vector; the universal currency of the system.
// Invariants: dim() >= 1 for stored embeddings, every value finite.
struct Embedding {
    std::vector<double> values;

    Embedding() = default;
    explicit Embedding(std::vector<double> v) : values(std::move(v)) {}

    size_t dim() const { return values.size(); }
    double& operator[](size_t i) { return values[i]; }
    double operator[](size_t i) const { return values[i]; }

    bool operator==(const Embedding& other) const { return values == other.values; }
};

// Throws validation error unless dim >= 1 and all values finite.
// `what` names the offending object in the message.
void validate_embedding(const Embedding& e, const std::string& what);

double dot(const Embedding& a, const Embedding& b);
double l2_norm(const Embedding& e);
Embedding normalized(const Embedding& e); // throws on zero norm

Embedding add(const Embedding& a, const Embedding& b);
Embedding sub(const Embedding& a, const Embedding& b);
Embedding scale(const Embedding& e, double c);

void require_same_dim(const Embedding& a, const Embedding& b, const std::string& what);

} // namespace adaqr
