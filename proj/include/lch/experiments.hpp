#pragma once

#include <string>
#include <vector>

#include "lch/lifelong_phase.hpp"
#include "lch/original_phase.hpp"
#include "lch/pipeline.hpp"
#include "lch/synth_data.hpp"

namespace lch {

struct ForgettingStageRow {
    int stage = 0;
    int classes_present = 0;  // incremental classes revealed so far
    double map_i2t_original_queries = 0, map_t2i_original_queries = 0;
    double map_i2t_all_queries = 0, map_t2i_all_queries = 0;
    // Control that never runs the lifelong update: new items are indexed
    // through the unchanged original networks.
    double control_map_i2t_all = 0, control_map_t2i_all = 0;
};

struct ForgettingResult {
    std::vector<ForgettingStageRow> rows;
    DatasetSplit split;
    OracleMap oracle;
};

// Class-arrival protocol: train the original phase once, then one lifelong
// stage per schedule entry (that many classes arrive together). Codes learned
// at a stage are frozen for all later stages.
ForgettingResult forgetting_protocol(const Bundle& bundle, const std::vector<int>& schedule,
                                     const OriginalTrainOptions& orig_options,
                                     const LifelongTrainOptions& life_options,
                                     double query_fraction = 0.1, int radius = 2);

struct AblationRow {
    std::string variant;
    double map_orig_i2t = 0, map_orig_t2i = 0;   // after the original phase
    double map_life_i2t = 0, map_life_t2i = 0;   // after the lifelong phase
};

// Valid variant names: intra, inter, quant, O, I (alias L), Q, B,
// single_label, multi_label. "full" is always run first. All variants share
// the split, seeds and data order.
std::vector<AblationRow> ablation_runner(const Bundle& bundle,
                                         const OriginalTrainOptions& base_orig,
                                         const LifelongTrainOptions& base_life,
                                         const std::vector<std::string>& variants,
                                         int incremental_classes = 1, double query_fraction = 0.1,
                                         int jobs = 1);

struct TimingRow {
    Index n = 0;          // incremental database size
    Index m = 0;          // original database size
    double lifelong_seconds = 0;
    double retrain_seconds = 0;  // original-phase retraining over all classes
};

struct TimingResult {
    std::vector<TimingRow> rows;
    bool exponent_defined = false;
    double lifelong_exponent = 0;  // slope of log(time) vs log(n)
    double retrain_exponent = 0;   // slope of log(time) vs log(m+n)
};

// One synthetic dataset per size with m = 4n; wall-clock covers the update
// loops only unless include_setup is set.
TimingResult timing_bench(const std::vector<Index>& sizes, const HyperParams& hp,
                          bool include_setup, std::uint64_t seed);

struct SensitivityRow {
    double alpha = 0, beta = 0, gamma = 0, lambda = 0, mu = 0;
    double map_i2t = 0, map_t2i = 0;  // final (post-lifelong) all-query MAP
};

struct SensitivityGrid {
    std::vector<std::string> axes = {"alpha", "beta", "gamma", "lambda", "mu"};
    std::vector<double> values;  // empty = 1e-2..1e5 with multiplicative step 10
    bool factorial = false;      // default: per-axis sweep around the base point
};

std::vector<SensitivityRow> sensitivity_sweep(const Bundle& bundle,
                                              const OriginalTrainOptions& base_orig,
                                              const LifelongTrainOptions& base_life,
                                              const SensitivityGrid& grid,
                                              int incremental_classes = 1,
                                              double query_fraction = 0.1, int jobs = 1);

}  // namespace lch
