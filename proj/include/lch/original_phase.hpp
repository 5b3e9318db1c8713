#pragma once

#include <vector>

#include "lch/bundle_io.hpp"
#include "lch/data_model.hpp"
#include "lch/network.hpp"

namespace lch {

enum class SimKind { multi, single, label_dot };

SimilarityMatrix label_similarity(SimKind kind, const LabelMatrix& l1, const LabelMatrix& l2);

// ||S_il - Q_il||_F^2 + alpha * ||S_tl - Q_tl||_F^2
double inter_modality_loss(const SimilarityMatrix& s_img_label, const SimilarityMatrix& q_img_label,
                           const SimilarityMatrix& s_txt_label, const SimilarityMatrix& q_txt_label,
                           double alpha);

// Sum of the three same-space Frobenius gaps (label/label, img/img, txt/txt).
double intra_modality_loss(const SimilarityMatrix& s_ll, const SimilarityMatrix& q_ll,
                           const SimilarityMatrix& s_ii, const SimilarityMatrix& q_ii,
                           const SimilarityMatrix& s_tt, const SimilarityMatrix& q_tt);

// ||F-Bx||^2 + ||G-By||^2 + (||H-Bx||^2 + ||H-By||^2) / 2
double quantization_loss_original(const ContinuousCodes& img_out, const ContinuousCodes& txt_out,
                                  const ContinuousCodes& label_out, const HashCodes& codes_img,
                                  const HashCodes& codes_txt);

struct OriginalLossTerms {
    double inter = 0, intra = 0, quan = 0, total = 0;
};

OriginalLossTerms total_original_loss(const ContinuousCodes& img_out, const ContinuousCodes& txt_out,
                                      const ContinuousCodes& label_out, const HashCodes& codes_img,
                                      const HashCodes& codes_txt, const SimilarityMatrix& s_img_label,
                                      const SimilarityMatrix& s_txt_label, const SimilarityMatrix& s_ll,
                                      const SimilarityMatrix& s_ii, const SimilarityMatrix& s_tt,
                                      double alpha, double beta, double gamma);

// Gradients of the per-network objectives w.r.t. the network output columns.
// The clamped region of the representation similarity contributes exactly zero.
Matrix grad_labelnet_output(const ContinuousCodes& img_out, const ContinuousCodes& txt_out,
                            const ContinuousCodes& label_out, const SimilarityMatrix& s_img_label,
                            const SimilarityMatrix& s_txt_label, const SimilarityMatrix& s_ll,
                            const HashCodes& codes_img, const HashCodes& codes_txt, double alpha,
                            double beta, double gamma);

Matrix grad_imgnet_output(const ContinuousCodes& img_out, const ContinuousCodes& label_out,
                          const SimilarityMatrix& s_img_label, const SimilarityMatrix& s_ii,
                          const HashCodes& codes_img, double beta, double gamma);

Matrix grad_txtnet_output(const ContinuousCodes& txt_out, const ContinuousCodes& label_out,
                          const SimilarityMatrix& s_txt_label, const SimilarityMatrix& s_tt,
                          const HashCodes& codes_txt, double alpha, double beta, double gamma);

// B = sign(2*gamma*out + gamma*label_out), sign(0) = +1.
HashCodes update_codes_original(const ContinuousCodes& modality_out,
                                const ContinuousCodes& label_out, double gamma);

struct OriginalTrainOptions {
    HyperParams hp;
    SimKind sim_kind = SimKind::multi;
    bool use_inter = true;
    bool use_intra = true;
    bool use_quant = true;
    std::vector<int> hidden_img = {512};
    std::vector<int> hidden_txt = {512};
    std::vector<int> hidden_label = {256};
};

struct OriginalLossTraceRow {
    int iteration = 0;
    double inter = 0, intra = 0, quan = 0, total = 0;
};

struct OriginalTrainResult {
    NetworkParams label_net, img_net, txt_net;
    HashCodes codes_img, codes_txt;     // columns follow train_indices
    std::vector<Index> train_indices;   // original retrieval instances (the database)
    std::vector<OriginalLossTraceRow> trace;
    double setup_seconds = 0;  // similarity precompute and gathers
    double train_seconds = 0;  // alternating optimization only
};

// Alternating optimization: label net, image net, text net by mini-batch SGD,
// then closed-form sign updates of both code matrices, per outer iteration.
OriginalTrainResult train_original(const Bundle& bundle, const DatasetSplit& split,
                                   const OriginalTrainOptions& options);

}  // namespace lch
