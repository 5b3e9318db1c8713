#include "lch/original_phase.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "lch/rng.hpp"
#include "lch/similarity.hpp"

namespace lch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError(std::string(what) + ": shape mismatch");
}

// Residual of the clamped-cosine fit: R_ij = 2w(Q_ij - S_ij) on the active
// region (raw cosine >= 0), zero elsewhere. Returns R and the raw cosines.
struct CosineFit {
    Matrix residual;  // rows(U cols) x cols(V cols)
    Matrix cosines;
};

CosineFit cosine_fit(const Matrix& u_norm, const Matrix& v_norm, const Matrix& s, double w) {
    CosineFit fit;
    fit.cosines = u_norm.transpose() * v_norm;
    check_same_shape(fit.cosines, s, "cosine_fit");
    const auto active = (fit.cosines.array() >= 0.0).cast<double>();
    fit.residual = ((2.0 * w) * (fit.cosines.array().max(0.0) - s.array()) * active).matrix();
    return fit;
}

// d/dV of w * sum_ij (max(0, cos(U_i, V_j)) - S_ij)^2, U treated as constant.
Matrix cosine_fit_grad_v(const Matrix& u, const Matrix& v, const Matrix& s, double w) {
    if (w == 0.0) return Matrix::Zero(v.rows(), v.cols());
    const Matrix un = normalize_columns(u, "cosine gradient");
    const Matrix vn = normalize_columns(v, "cosine gradient");
    const CosineFit fit = cosine_fit(un, vn, s, w);
    const Vector along = fit.residual.cwiseProduct(fit.cosines).colwise().sum().transpose();
    Matrix grad = un * fit.residual - vn * along.asDiagonal();
    for (Index j = 0; j < v.cols(); ++j) grad.col(j) /= v.col(j).norm();
    return grad;
}

// d/dU of the same expression, V treated as constant.
Matrix cosine_fit_grad_u(const Matrix& u, const Matrix& v, const Matrix& s, double w) {
    if (w == 0.0) return Matrix::Zero(u.rows(), u.cols());
    const Matrix un = normalize_columns(u, "cosine gradient");
    const Matrix vn = normalize_columns(v, "cosine gradient");
    const CosineFit fit = cosine_fit(un, vn, s, w);
    const Vector along = fit.residual.cwiseProduct(fit.cosines).rowwise().sum();
    Matrix grad = vn * fit.residual.transpose() - un * along.asDiagonal();
    for (Index i = 0; i < u.cols(); ++i) grad.col(i) /= u.col(i).norm();
    return grad;
}

// sum_ij (max(0, cos(U_i, V_j)) - S_ij)^2, blocked so no full Q is kept.
double relu_cos_gap_sq(const Matrix& u, const Matrix& v, const Matrix& s) {
    const Matrix un = normalize_columns(u, "loss");
    const Matrix vn = normalize_columns(v, "loss");
    constexpr Index kBlock = 512;
    double acc = 0.0;
    for (Index j0 = 0; j0 < vn.cols(); j0 += kBlock) {
        const Index w = std::min(kBlock, vn.cols() - j0);
        const Matrix q = (un.transpose() * vn.middleCols(j0, w)).cwiseMax(0.0);
        acc += (q - s.middleCols(j0, w)).squaredNorm();
    }
    return acc;
}

Matrix gather_rows(const Matrix& m, const std::vector<Index>& idx) {
    Matrix out(static_cast<Index>(idx.size()), m.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = m.row(idx[r]);
    return out;
}

Matrix gather_cols(const Matrix& m, const Index* idx, Index count) {
    Matrix out(m.rows(), count);
    for (Index c = 0; c < count; ++c) out.col(c) = m.col(idx[c]);
    return out;
}

}  // namespace

SimilarityMatrix label_similarity(SimKind kind, const LabelMatrix& l1, const LabelMatrix& l2) {
    switch (kind) {
        case SimKind::multi: return multi_label_similarity(l1, l2);
        case SimKind::single: return single_label_similarity(l1, l2);
        case SimKind::label_dot: return label_dot_similarity(l1, l2);
    }
    throw DataError("unknown similarity kind");
}

double inter_modality_loss(const SimilarityMatrix& s_img_label, const SimilarityMatrix& q_img_label,
                           const SimilarityMatrix& s_txt_label, const SimilarityMatrix& q_txt_label,
                           double alpha) {
    check_same_shape(s_img_label.values, q_img_label.values, "inter_modality_loss");
    check_same_shape(s_txt_label.values, q_txt_label.values, "inter_modality_loss");
    return (s_img_label.values - q_img_label.values).squaredNorm() +
           alpha * (s_txt_label.values - q_txt_label.values).squaredNorm();
}

double intra_modality_loss(const SimilarityMatrix& s_ll, const SimilarityMatrix& q_ll,
                           const SimilarityMatrix& s_ii, const SimilarityMatrix& q_ii,
                           const SimilarityMatrix& s_tt, const SimilarityMatrix& q_tt) {
    check_same_shape(s_ll.values, q_ll.values, "intra_modality_loss");
    check_same_shape(s_ii.values, q_ii.values, "intra_modality_loss");
    check_same_shape(s_tt.values, q_tt.values, "intra_modality_loss");
    return (s_ll.values - q_ll.values).squaredNorm() + (s_ii.values - q_ii.values).squaredNorm() +
           (s_tt.values - q_tt.values).squaredNorm();
}

double quantization_loss_original(const ContinuousCodes& img_out, const ContinuousCodes& txt_out,
                                  const ContinuousCodes& label_out, const HashCodes& codes_img,
                                  const HashCodes& codes_txt) {
    check_same_shape(img_out.values, codes_img.values, "quantization_loss");
    check_same_shape(txt_out.values, codes_txt.values, "quantization_loss");
    check_same_shape(label_out.values, codes_img.values, "quantization_loss");
    return (img_out.values - codes_img.values).squaredNorm() +
           (txt_out.values - codes_txt.values).squaredNorm() +
           0.5 * ((label_out.values - codes_img.values).squaredNorm() +
                  (label_out.values - codes_txt.values).squaredNorm());
}

OriginalLossTerms total_original_loss(const ContinuousCodes& img_out, const ContinuousCodes& txt_out,
                                      const ContinuousCodes& label_out, const HashCodes& codes_img,
                                      const HashCodes& codes_txt, const SimilarityMatrix& s_img_label,
                                      const SimilarityMatrix& s_txt_label, const SimilarityMatrix& s_ll,
                                      const SimilarityMatrix& s_ii, const SimilarityMatrix& s_tt,
                                      double alpha, double beta, double gamma) {
    OriginalLossTerms terms;
    terms.inter = relu_cos_gap_sq(img_out.values, label_out.values, s_img_label.values) +
                  alpha * relu_cos_gap_sq(txt_out.values, label_out.values, s_txt_label.values);
    terms.intra = relu_cos_gap_sq(label_out.values, label_out.values, s_ll.values) +
                  relu_cos_gap_sq(img_out.values, img_out.values, s_ii.values) +
                  relu_cos_gap_sq(txt_out.values, txt_out.values, s_tt.values);
    terms.quan = quantization_loss_original(img_out, txt_out, label_out, codes_img, codes_txt);
    terms.total = terms.inter + beta * terms.intra + gamma * terms.quan;
    return terms;
}

Matrix grad_labelnet_output(const ContinuousCodes& img_out, const ContinuousCodes& txt_out,
                            const ContinuousCodes& label_out, const SimilarityMatrix& s_img_label,
                            const SimilarityMatrix& s_txt_label, const SimilarityMatrix& s_ll,
                            const HashCodes& codes_img, const HashCodes& codes_txt, double alpha,
                            double beta, double gamma) {
    const Matrix& h = label_out.values;
    Matrix grad = cosine_fit_grad_v(img_out.values, h, s_img_label.values, 1.0);
    grad += cosine_fit_grad_v(txt_out.values, h, s_txt_label.values, alpha);
    // Label/label term: both cosine arguments are columns of H.
    grad += cosine_fit_grad_v(h, h, s_ll.values, beta) + cosine_fit_grad_u(h, h, s_ll.values, beta);
    grad += gamma * (h - codes_img.values) + gamma * (h - codes_txt.values);
    return grad;
}

Matrix grad_imgnet_output(const ContinuousCodes& img_out, const ContinuousCodes& label_out,
                          const SimilarityMatrix& s_img_label, const SimilarityMatrix& s_ii,
                          const HashCodes& codes_img, double beta, double gamma) {
    const Matrix& f = img_out.values;
    Matrix grad = cosine_fit_grad_u(f, label_out.values, s_img_label.values, 1.0);
    grad += cosine_fit_grad_v(f, f, s_ii.values, beta) + cosine_fit_grad_u(f, f, s_ii.values, beta);
    grad += 2.0 * gamma * (f - codes_img.values);
    return grad;
}

Matrix grad_txtnet_output(const ContinuousCodes& txt_out, const ContinuousCodes& label_out,
                          const SimilarityMatrix& s_txt_label, const SimilarityMatrix& s_tt,
                          const HashCodes& codes_txt, double alpha, double beta, double gamma) {
    const Matrix& g = txt_out.values;
    Matrix grad = cosine_fit_grad_u(g, label_out.values, s_txt_label.values, alpha);
    grad += cosine_fit_grad_v(g, g, s_tt.values, beta) + cosine_fit_grad_u(g, g, s_tt.values, beta);
    grad += 2.0 * gamma * (g - codes_txt.values);
    return grad;
}

HashCodes update_codes_original(const ContinuousCodes& modality_out,
                                const ContinuousCodes& label_out, double gamma) {
    check_same_shape(modality_out.values, label_out.values, "update_codes_original");
    if (gamma <= 0.0) throw DataError("update_codes_original: gamma must be > 0");
    const Matrix score = 2.0 * gamma * modality_out.values + gamma * label_out.values;
    Matrix codes = score.unaryExpr([](double v) { return code_sign(v); });
    return HashCodes{std::move(codes)};
}

OriginalTrainResult train_original(const Bundle& bundle, const DatasetSplit& split,
                                   const OriginalTrainOptions& options) {
    const HyperParams& hp = options.hp;
    validate(hp);
    const auto report = validate_bundle(bundle.img, bundle.txt, bundle.labels);
    if (!report.ok()) throw DataError("train_original: invalid bundle: " + report.violations.front());

    const auto t_setup = Clock::now();

    // Training set = original-class instances on the database side.
    std::vector<Index> train;
    {
        std::vector<char> in_retrieval(static_cast<std::size_t>(bundle.instances()), 0);
        for (Index i : split.retrieval_indices) in_retrieval[static_cast<std::size_t>(i)] = 1;
        for (Index i : split.original_indices)
            if (in_retrieval[static_cast<std::size_t>(i)]) train.push_back(i);
    }
    if (train.empty()) throw DataError("train_original: empty original training set");
    const Index m = static_cast<Index>(train.size());
    const int k = hp.k;

    const Matrix x = gather_rows(bundle.img.values, train);
    const Matrix y = gather_rows(bundle.txt.values, train);
    const LabelMatrix l = make_labels(gather_rows(bundle.labels.values, train));

    // One matrix serves all five supervision roles: the label rows are shared
    // across modalities.
    const SimilarityMatrix s = label_similarity(options.sim_kind, l, l);

    OriginalTrainResult result;
    result.train_indices = train;

    auto dims = [&](Index input, const std::vector<int>& hidden) {
        std::vector<int> d{static_cast<int>(input)};
        d.insert(d.end(), hidden.begin(), hidden.end());
        d.push_back(k);
        return d;
    };
    result.label_net = init_params(dims(bundle.classes(), options.hidden_label), Modality::label,
                                   splitmix64(hp.seed ^ 1));
    result.img_net =
        init_params(dims(bundle.img.dim(), options.hidden_img), Modality::image, splitmix64(hp.seed ^ 2));
    result.txt_net =
        init_params(dims(bundle.txt.dim(), options.hidden_txt), Modality::text, splitmix64(hp.seed ^ 3));
    result.codes_img = random_codes(k, m, splitmix64(hp.seed ^ 4));
    result.codes_txt = random_codes(k, m, splitmix64(hp.seed ^ 5));

    result.setup_seconds = seconds_since(t_setup);
    const auto t_train = Clock::now();

    auto rng = make_rng(hp.seed, 0xba7c);
    std::vector<Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), Index{0});

    const double alpha = hp.alpha, beta = hp.beta, gamma = hp.gamma;
    const double gamma_codes = options.use_quant && gamma > 0.0 ? gamma : 1.0;

    Matrix h_buf, f_buf, g_buf;
    auto forward_all = [&](const NetworkParams& net, const Matrix& rows) {
        return forward(net, rows).values;
    };

    // One pass of mini-batch SGD over one network. Label outputs sit on the
    // column side of the cross pairings; image/text outputs sit on the row
    // side, matching the per-network objectives.
    auto run_batches = [&](NetworkParams& net, const Matrix& rows, Matrix& buf, int batch_size,
                           bool is_label_net) {
        std::shuffle(perm.begin(), perm.end(), rng);
        const Index batches = (m + batch_size - 1) / batch_size;
        for (Index b = 0; b < batches; ++b) {
            const Index begin = b * batch_size;
            const Index count = std::min<Index>(batch_size, m - begin);
            const Index* idx = perm.data() + begin;

            Matrix batch_rows(count, rows.cols());
            for (Index c = 0; c < count; ++c) batch_rows.row(c) = rows.row(idx[c]);

            ForwardCache cache;
            const Matrix out = forward_cached(net, batch_rows, cache).values;  // k x count
            for (Index c = 0; c < count; ++c) buf.col(idx[c]) = out.col(c);

            Matrix grad = Matrix::Zero(k, count);
            if (is_label_net) {
                const Matrix s_cols = gather_cols(s.values, idx, count);  // m x count
                if (options.use_inter) {
                    grad += cosine_fit_grad_v(f_buf, out, s_cols, 1.0);
                    grad += cosine_fit_grad_v(g_buf, out, s_cols, alpha);
                }
                if (options.use_intra) grad += cosine_fit_grad_v(h_buf, out, s_cols, beta);
                if (options.use_quant) {
                    for (Index c = 0; c < count; ++c)
                        grad.col(c) += gamma * (out.col(c) - result.codes_img.values.col(idx[c])) +
                                       gamma * (out.col(c) - result.codes_txt.values.col(idx[c]));
                }
            } else {
                const bool img_side = net.modality == Modality::image;
                const Matrix s_rows = gather_cols(s.values, idx, count);  // symmetric: rows as cols
                if (options.use_inter)
                    grad += cosine_fit_grad_u(out, h_buf, s_rows.transpose(), img_side ? 1.0 : alpha);
                if (options.use_intra)
                    grad += cosine_fit_grad_u(out, img_side ? f_buf : g_buf, s_rows.transpose(), beta);
                if (options.use_quant) {
                    const Matrix& codes =
                        img_side ? result.codes_img.values : result.codes_txt.values;
                    for (Index c = 0; c < count; ++c)
                        grad.col(c) += 2.0 * gamma * (out.col(c) - codes.col(idx[c]));
                }
            }
            sgd_step(net, backward_cached(net, cache, grad), hp.lr_original);
        }
    };

    for (int epoch = 0; epoch < hp.epochs_original; ++epoch) {
        h_buf = forward_all(result.label_net, l.values);
        f_buf = forward_all(result.img_net, x);
        g_buf = forward_all(result.txt_net, y);

        run_batches(result.label_net, l.values, h_buf, hp.batch_label, true);
        h_buf = forward_all(result.label_net, l.values);

        run_batches(result.img_net, x, f_buf, hp.batch_image, false);
        f_buf = forward_all(result.img_net, x);

        run_batches(result.txt_net, y, g_buf, hp.batch_text, false);
        g_buf = forward_all(result.txt_net, y);

        result.codes_img = update_codes_original(ContinuousCodes{f_buf}, ContinuousCodes{h_buf},
                                                 gamma_codes);
        result.codes_txt = update_codes_original(ContinuousCodes{g_buf}, ContinuousCodes{h_buf},
                                                 gamma_codes);

        OriginalLossTerms terms;
        terms.inter = relu_cos_gap_sq(f_buf, h_buf, s.values) +
                      alpha * relu_cos_gap_sq(g_buf, h_buf, s.values);
        terms.intra = relu_cos_gap_sq(h_buf, h_buf, s.values) +
                      relu_cos_gap_sq(f_buf, f_buf, s.values) +
                      relu_cos_gap_sq(g_buf, g_buf, s.values);
        terms.quan = quantization_loss_original(ContinuousCodes{f_buf}, ContinuousCodes{g_buf},
                                                ContinuousCodes{h_buf}, result.codes_img,
                                                result.codes_txt);
        terms.total = (options.use_inter ? terms.inter : 0.0) +
                      (options.use_intra ? beta * terms.intra : 0.0) +
                      (options.use_quant ? gamma * terms.quan : 0.0);
        if (!std::isfinite(terms.total))
            throw NumericalError("train_original: non-finite loss at iteration " +
                                 std::to_string(epoch + 1) + " (inter=" + std::to_string(terms.inter) +
                                 " intra=" + std::to_string(terms.intra) +
                                 " quan=" + std::to_string(terms.quan) + "); lower lr_original");
        result.trace.push_back({epoch + 1, terms.inter, terms.intra, terms.quan, terms.total});
    }

    result.train_seconds = seconds_since(t_train);
    return result;
}

}  // namespace lch
