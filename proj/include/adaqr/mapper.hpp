#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adaqr/embedding.hpp"

namespace adaqr {

// Trainable parameters of the embedding-space mapper: two affine layers
// with a tanh between them, hidden size equal to the input dim.
//   forward(e) = w2 * tanh(w1 * e + b1) + b2
// Matrices are row-major d x d.
struct MapperParams {
    size_t dim = 0;
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    std::vector<double> b2;

    bool operator==(const MapperParams& other) const = default;
};

// Deterministic given (dim, seed): weights scaled-uniform in
// +-sqrt(6 / (2*dim)), biases zero.
MapperParams init_params(size_t dim, uint64_t seed);

void validate_params(const MapperParams& params);

// The reasoned embedding for e. The output layer is linear by default;
// output_tanh applies a final tanh instead (alternate reading of the
// two-layer architecture, bounds outputs to (-1, 1)).
Embedding forward(const MapperParams& params, const Embedding& e, bool output_tanh = false);

// Checkpoint: magic "ADQM", u32 version, u32 dim, then w1, b1, w2, b2 as
// little-endian f32 row-major. `meta` (may be empty) is written verbatim
// to a text sidecar at `path + ".meta"`.
void save_checkpoint(const MapperParams& params, const std::string& path,
                     const std::string& meta = {});
MapperParams load_checkpoint(const std::string& path);

} // namespace adaqr
