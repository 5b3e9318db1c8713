#pragma once

#include <utility>
#include <vector>

#include "lch/bundle_io.hpp"
#include "lch/data_model.hpp"

namespace lch {

struct SynthConfig {
    int classes = 10;
    int per_class = 100;
    int d_img = 64;
    int d_txt = 32;
    double noise_sigma = 0.05;
    // cardinality -> probability; sampled per instance.
    std::vector<std::pair<int, double>> label_cardinality_probs = {{1, 0.6}, {2, 0.3}, {3, 0.1}};
    // 0 = uniform extra classes; towards 1, ring-neighbor classes co-occur more.
    double co_occurrence = 0.3;
    std::uint64_t seed = 1;
};

// Per class one random unit prototype per modality (orthonormal when the
// dimension allows). An instance's feature is the normalized sum of its
// classes' prototypes plus Gaussian noise. Deterministic per seed, independent
// of generation order (per-instance RNG streams).
Bundle generate(const SynthConfig& config);

struct OracleMap {
    double i2t = 0, t2i = 0;
};

// MAP upper-bound reference: rank the database by raw-feature cosine on the
// query's own modality (instances are image/text pairs, so this orders the
// paired items of the other modality).
OracleMap feature_space_oracle(const Bundle& bundle, const DatasetSplit& split);

}  // namespace lch
