#pragma once

#include <vector>

#include "lch/bundle_io.hpp"
#include "lch/data_model.hpp"
#include "lch/network.hpp"
#include "lch/original_phase.hpp"

namespace lch {

// Training sample drawn for the lifelong phase: a1 database instances from the
// original set followed by a2 from the incremental set.
struct TrainingSample {
    std::vector<Index> original;      // a1 bundle indices, sorted
    std::vector<Index> incremental;   // a2 bundle indices, sorted
    LabelMatrix labels;               // (a1+a2) x classes, original rows first

    Index a1() const { return static_cast<Index>(original.size()); }
    Index a2() const { return static_cast<Index>(incremental.size()); }
    Index total() const { return a1() + a2(); }
};

TrainingSample sample_training_set(const LabelMatrix& labels, const DatasetSplit& split,
                                   Index a1, Index a2, std::uint64_t seed);

struct LifelongLossTerms {
    double preserve_old = 0, preserve_new = 0, quan = 0, balance = 0, total = 0;
};

// sample_positions maps the a2 trailing training columns onto columns of the
// incremental code matrices (for the quantization term).
LifelongLossTerms lifelong_loss(const HashCodes& codes_img, const HashCodes& codes_txt,
                                const HashCodes& codes_img_new, const HashCodes& codes_txt_new,
                                const ContinuousCodes& fit_img, const ContinuousCodes& fit_txt,
                                const ContinuousCodes& out_img_new, const ContinuousCodes& out_txt_new,
                                const std::vector<Index>& sample_positions,
                                const SimilarityMatrix& s_train_old,
                                const SimilarityMatrix& s_train_new, int k, double lambda,
                                double mu);

// Gradient of one modality's lifelong objective w.r.t. the raw network outputs
// u (k x a). The similarity terms see tanh(u); the quantization and balance
// terms act directly on the trailing a2 columns.
Matrix grad_lifelong_net(const Matrix& u, const HashCodes& codes_old, const HashCodes& codes_new,
                         const SimilarityMatrix& s_train_old, const SimilarityMatrix& s_train_new,
                         const std::vector<Index>& a2_columns,
                         const std::vector<Index>& sample_positions, int k, double lambda,
                         double mu, bool detach_tanh_fit = false);

Matrix grad_lifelong_imgnet(const Matrix& u, const HashCodes& codes_img,
                            const HashCodes& codes_img_new, const SimilarityMatrix& s_train_old,
                            const SimilarityMatrix& s_train_new, const std::vector<Index>& a2_columns,
                            const std::vector<Index>& sample_positions, int k, double lambda,
                            double mu, bool detach_tanh_fit = false);

Matrix grad_lifelong_txtnet(const Matrix& u, const HashCodes& codes_txt,
                            const HashCodes& codes_txt_new, const SimilarityMatrix& s_train_old,
                            const SimilarityMatrix& s_train_new, const std::vector<Index>& a2_columns,
                            const std::vector<Index>& sample_positions, int k, double lambda,
                            double mu, bool detach_tanh_fit = false);

// Scratch for the discrete cyclic coordinate descent code update.
struct DccWorkspace {
    Matrix p;                        // k x n
    Matrix extended;                 // k x n, network outputs at sampled columns, 0 elsewhere
    std::vector<Index> sample_map;   // a2 -> column of the new-code matrix
};

DccWorkspace make_dcc_workspace(const ContinuousCodes& fit, const SimilarityMatrix& s_train_new,
                                const ContinuousCodes& out_new, const std::vector<Index>& sample_map,
                                int k, double lambda);

// ||B'^T A||_F^2 + tr(B'^T P): the part of the lifelong objective that depends
// on the new codes.
double dcc_objective(const HashCodes& codes_new, const ContinuousCodes& fit, const Matrix& p);

// Cyclic row updates, each the closed-form conditional minimizer.
HashCodes dcc_update(const HashCodes& codes_new, const ContinuousCodes& fit,
                     const DccWorkspace& workspace, int sweeps = 1);

struct LifelongTrainOptions {
    HyperParams hp;
    SimKind sim_kind = SimKind::multi;
    bool use_old = true;
    bool use_new = true;
    bool use_quant = true;
    bool use_balance = true;
    bool detach_tanh_fit = false;
};

struct LifelongLossTraceRow {
    int iteration = 0;
    double preserve_old = 0, preserve_new = 0, quan = 0, balance = 0, total = 0;
};

struct LifelongTrainResult {
    NetworkParams img_net, txt_net;
    HashCodes codes_img_new, codes_txt_new;  // columns follow incremental_db
    std::vector<Index> incremental_db;       // incremental retrieval instances
    TrainingSample sample;
    std::vector<LifelongLossTraceRow> trace;
    std::uint64_t frozen_checksum_before = 0;
    std::uint64_t frozen_checksum_after = 0;
    double setup_seconds = 0;
    double train_seconds = 0;
};

// Updates the two modality networks and learns codes for the incremental
// database instances. The original codes are read-only throughout; the result
// records their checksum before and after as evidence.
LifelongTrainResult train_lifelong(const Bundle& bundle, const DatasetSplit& split,
                                   const NetworkParams& img_net, const NetworkParams& txt_net,
                                   const HashCodes& codes_img, const HashCodes& codes_txt,
                                   const std::vector<Index>& original_db,
                                   const LifelongTrainOptions& options);

}  // namespace lch
