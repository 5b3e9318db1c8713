#include "lch/lifelong_phase.hpp"

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

Matrix gather_rows(const Matrix& m, const std::vector<Index>& idx) {
    Matrix out(static_cast<Index>(idx.size()), m.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = m.row(idx[r]);
    return out;
}

std::vector<Index> intersect_sorted(const std::vector<Index>& a, const std::vector<Index>& b,
                                    Index universe) {
    std::vector<char> mark(static_cast<std::size_t>(universe), 0);
    for (Index i : b) mark[static_cast<std::size_t>(i)] = 1;
    std::vector<Index> out;
    for (Index i : a)
        if (mark[static_cast<std::size_t>(i)]) out.push_back(i);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Index> draw_without_replacement(std::vector<Index> pool, Index count,
                                            std::mt19937_64& rng) {
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(static_cast<std::size_t>(count));
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace

TrainingSample sample_training_set(const LabelMatrix& labels, const DatasetSplit& split,
                                   Index a1, Index a2, std::uint64_t seed) {
    std::vector<Index> pool_old =
        intersect_sorted(split.original_indices, split.retrieval_indices, labels.rows());
    std::vector<Index> pool_new =
        intersect_sorted(split.incremental_indices, split.retrieval_indices, labels.rows());
    if (a1 > static_cast<Index>(pool_old.size()))
        throw DataError("sample_training_set: original pool exhausted (" +
                        std::to_string(pool_old.size()) + " < a1=" + std::to_string(a1) + ")");
    if (a2 > static_cast<Index>(pool_new.size()))
        throw DataError("sample_training_set: incremental pool exhausted (" +
                        std::to_string(pool_new.size()) + " < a2=" + std::to_string(a2) + ")");

    auto rng = make_rng(seed, 0x5a3e);
    TrainingSample sample;
    sample.original = draw_without_replacement(std::move(pool_old), a1, rng);
    sample.incremental = draw_without_replacement(std::move(pool_new), a2, rng);

    std::vector<Index> all = sample.original;
    all.insert(all.end(), sample.incremental.begin(), sample.incremental.end());
    sample.labels = LabelMatrix{gather_rows(labels.values, all)};
    return sample;
}

namespace {

void check_lifelong_shapes(const HashCodes& codes_old, const HashCodes& codes_new,
                           const Matrix& fit, const SimilarityMatrix& s_old,
                           const SimilarityMatrix& s_new, int k) {
    if (codes_old.bits() != k || codes_new.bits() != k || fit.rows() != k)
        throw ShapeError("lifelong: bit counts differ");
    const Index a = fit.cols();
    if (s_old.rows() != codes_old.count() || s_old.cols() != a)
        throw ShapeError("lifelong: similarity to original data must be m x a");
    if (s_new.rows() != codes_new.count() || s_new.cols() != a)
        throw ShapeError("lifelong: similarity to incremental data must be n x a");
}

}  // namespace

LifelongLossTerms lifelong_loss(const HashCodes& codes_img, const HashCodes& codes_txt,
                                const HashCodes& codes_img_new, const HashCodes& codes_txt_new,
                                const ContinuousCodes& fit_img, const ContinuousCodes& fit_txt,
                                const ContinuousCodes& out_img_new, const ContinuousCodes& out_txt_new,
                                const std::vector<Index>& sample_positions,
                                const SimilarityMatrix& s_train_old,
                                const SimilarityMatrix& s_train_new, int k, double lambda,
                                double mu) {
    check_lifelong_shapes(codes_img, codes_img_new, fit_img.values, s_train_old, s_train_new, k);
    check_lifelong_shapes(codes_txt, codes_txt_new, fit_txt.values, s_train_old, s_train_new, k);
    const auto a2 = static_cast<Index>(sample_positions.size());
    if (out_img_new.count() != a2 || out_txt_new.count() != a2)
        throw ShapeError("lifelong_loss: sampled outputs must have a2 columns");

    LifelongLossTerms terms;
    const Matrix ks_old = static_cast<double>(k) * s_train_old.values;
    const Matrix ks_new = static_cast<double>(k) * s_train_new.values;
    terms.preserve_old = (codes_img.values.transpose() * fit_img.values - ks_old).squaredNorm() +
                         (codes_txt.values.transpose() * fit_txt.values - ks_old).squaredNorm();
    terms.preserve_new = (codes_img_new.values.transpose() * fit_img.values - ks_new).squaredNorm() +
                         (codes_txt_new.values.transpose() * fit_txt.values - ks_new).squaredNorm();
    for (Index t = 0; t < a2; ++t) {
        const Index col = sample_positions[static_cast<std::size_t>(t)];
        terms.quan += (codes_img_new.values.col(col) - out_img_new.values.col(t)).squaredNorm() +
                      (codes_txt_new.values.col(col) - out_txt_new.values.col(t)).squaredNorm();
    }
    terms.balance = out_img_new.values.rowwise().sum().squaredNorm() +
                    out_txt_new.values.rowwise().sum().squaredNorm();
    terms.total = terms.preserve_old + terms.preserve_new + lambda * terms.quan + mu * terms.balance;
    return terms;
}

Matrix grad_lifelong_net(const Matrix& u, const HashCodes& codes_old, const HashCodes& codes_new,
                         const SimilarityMatrix& s_train_old, const SimilarityMatrix& s_train_new,
                         const std::vector<Index>& a2_columns,
                         const std::vector<Index>& sample_positions, int k, double lambda,
                         double mu, bool detach_tanh_fit) {
    check_lifelong_shapes(codes_old, codes_new, u, s_train_old, s_train_new, k);
    if (a2_columns.size() != sample_positions.size())
        throw ShapeError("grad_lifelong_net: sample index lists differ in length");

    const Matrix fit = u.array().tanh().matrix();
    Matrix grad_fit =
        codes_old.values *
            (2.0 * (codes_old.values.transpose() * fit - static_cast<double>(k) * s_train_old.values)) +
        codes_new.values *
            (2.0 * (codes_new.values.transpose() * fit - static_cast<double>(k) * s_train_new.values));
    Matrix grad = detach_tanh_fit
                      ? std::move(grad_fit)
                      : Matrix((grad_fit.array() * (1.0 - fit.array().square())).matrix());

    // Quantization- and balance-term columns: the sampled incremental outputs.
    Vector row_sums = Vector::Zero(k);
    for (Index col : a2_columns) row_sums += u.col(col);
    for (std::size_t t = 0; t < a2_columns.size(); ++t) {
        const Index col = a2_columns[t];
        const Index code_col = sample_positions[t];
        grad.col(col) += 2.0 * lambda * (u.col(col) - codes_new.values.col(code_col));
        grad.col(col) += 2.0 * mu * row_sums;
    }
    return grad;
}

Matrix grad_lifelong_imgnet(const Matrix& u, const HashCodes& codes_img,
                            const HashCodes& codes_img_new, const SimilarityMatrix& s_train_old,
                            const SimilarityMatrix& s_train_new, const std::vector<Index>& a2_columns,
                            const std::vector<Index>& sample_positions, int k, double lambda,
                            double mu, bool detach_tanh_fit) {
    return grad_lifelong_net(u, codes_img, codes_img_new, s_train_old, s_train_new, a2_columns,
                             sample_positions, k, lambda, mu, detach_tanh_fit);
}

Matrix grad_lifelong_txtnet(const Matrix& u, const HashCodes& codes_txt,
                            const HashCodes& codes_txt_new, const SimilarityMatrix& s_train_old,
                            const SimilarityMatrix& s_train_new, const std::vector<Index>& a2_columns,
                            const std::vector<Index>& sample_positions, int k, double lambda,
                            double mu, bool detach_tanh_fit) {
    return grad_lifelong_net(u, codes_txt, codes_txt_new, s_train_old, s_train_new, a2_columns,
                             sample_positions, k, lambda, mu, detach_tanh_fit);
}

DccWorkspace make_dcc_workspace(const ContinuousCodes& fit, const SimilarityMatrix& s_train_new,
                                const ContinuousCodes& out_new, const std::vector<Index>& sample_map,
                                int k, double lambda) {
    if (fit.bits() != k || out_new.bits() != k) throw ShapeError("make_dcc_workspace: bit counts differ");
    if (s_train_new.cols() != fit.count())
        throw ShapeError("make_dcc_workspace: similarity columns must match training size");
    if (out_new.count() != static_cast<Index>(sample_map.size()))
        throw ShapeError("make_dcc_workspace: sample_map size must match sampled outputs");

    const Index n = s_train_new.rows();
    DccWorkspace ws;
    ws.sample_map = sample_map;
    ws.extended = Matrix::Zero(k, n);
    for (std::size_t t = 0; t < sample_map.size(); ++t)
        ws.extended.col(sample_map[t]) = out_new.values.col(static_cast<Index>(t));
    ws.p = -2.0 * static_cast<double>(k) * fit.values * s_train_new.values.transpose() -
           2.0 * lambda * ws.extended;
    return ws;
}

double dcc_objective(const HashCodes& codes_new, const ContinuousCodes& fit, const Matrix& p) {
    return (codes_new.values.transpose() * fit.values).squaredNorm() +
           codes_new.values.cwiseProduct(p).sum();
}

HashCodes dcc_update(const HashCodes& codes_new, const ContinuousCodes& fit,
                     const DccWorkspace& workspace, int sweeps) {
    const int k = codes_new.bits();
    if (fit.bits() != k || workspace.p.rows() != k || workspace.p.cols() != codes_new.count())
        throw ShapeError("dcc_update: shape mismatch");

    Matrix b = codes_new.values;
    const Matrix gram = fit.values * fit.values.transpose();  // k x k row Gram
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int r = 0; r < k; ++r) {
            // z = 2 * (B_{-r})^T A_{-r} A_{r*}^T + P_{r*}^T, via the full Gram
            // minus the self row.
            Vector z = 2.0 * (b.transpose() * gram.col(r) - gram(r, r) * b.row(r).transpose()) +
                       workspace.p.row(r).transpose();
            for (Index j = 0; j < b.cols(); ++j) b(r, j) = -code_sign(z(j));
        }
    }
    return HashCodes{std::move(b)};
}

LifelongTrainResult train_lifelong(const Bundle& bundle, const DatasetSplit& split,
                                   const NetworkParams& img_net, const NetworkParams& txt_net,
                                   const HashCodes& codes_img, const HashCodes& codes_txt,
                                   const std::vector<Index>& original_db,
                                   const LifelongTrainOptions& options) {
    const HyperParams& hp = options.hp;
    validate(hp);
    if (codes_img.count() != static_cast<Index>(original_db.size()) ||
        codes_txt.count() != static_cast<Index>(original_db.size()))
        throw ShapeError("train_lifelong: original codes must cover original_db");

    const auto t_setup = Clock::now();

    LifelongTrainResult result;
    result.incremental_db =
        intersect_sorted(split.incremental_indices, split.retrieval_indices, bundle.instances());
    if (result.incremental_db.empty())
        throw DataError("train_lifelong: incremental set is empty");
    const Index n = static_cast<Index>(result.incremental_db.size());
    const int k = hp.k;

    const Index a1 = std::min<Index>(hp.a1, static_cast<Index>(original_db.size()));
    const Index a2 = std::min<Index>(hp.a2, n);
    result.sample = sample_training_set(bundle.labels, split, a1, a2, splitmix64(hp.seed ^ 6));
    // Restrict the original half of the sample to instances that carry codes.
    // original_db is exactly the original retrieval pool, so this holds by
    // construction; assert cheaply.
    {
        std::vector<char> has_code(static_cast<std::size_t>(bundle.instances()), 0);
        for (Index i : original_db) has_code[static_cast<std::size_t>(i)] = 1;
        for (Index i : result.sample.original)
            if (!has_code[static_cast<std::size_t>(i)])
                throw DataError("train_lifelong: sampled original instance has no stored code");
    }
    const Index a = result.sample.total();

    const LabelMatrix labels_old{gather_rows(bundle.labels.values, original_db)};
    const LabelMatrix labels_new{gather_rows(bundle.labels.values, result.incremental_db)};
    const SimilarityMatrix s_train_old =
        label_similarity(options.sim_kind, labels_old, result.sample.labels);
    const SimilarityMatrix s_train_new =
        label_similarity(options.sim_kind, labels_new, result.sample.labels);

    std::vector<Index> all_idx = result.sample.original;
    all_idx.insert(all_idx.end(), result.sample.incremental.begin(), result.sample.incremental.end());
    const Matrix x = gather_rows(bundle.img.values, all_idx);
    const Matrix y = gather_rows(bundle.txt.values, all_idx);

    // Trailing a2 training columns and their columns in the new code matrices.
    std::vector<Index> a2_columns(static_cast<std::size_t>(a2));
    std::iota(a2_columns.begin(), a2_columns.end(), a1);
    std::vector<Index> sample_positions;
    {
        std::vector<Index> pos(static_cast<std::size_t>(bundle.instances()), -1);
        for (Index c = 0; c < n; ++c) pos[static_cast<std::size_t>(result.incremental_db[c])] = c;
        for (Index i : result.sample.incremental) sample_positions.push_back(pos[static_cast<std::size_t>(i)]);
    }

    auto frozen_checksum = [&] {
        const std::uint64_t cx = code_checksum(codes_img);
        const std::uint64_t cy = code_checksum(codes_txt);
        return fnv1a(&cy, sizeof(cy), fnv1a(&cx, sizeof(cx)));
    };

    result.img_net = img_net;
    result.txt_net = txt_net;
    result.codes_img_new = random_codes(k, n, splitmix64(hp.seed ^ 7));
    result.codes_txt_new = random_codes(k, n, splitmix64(hp.seed ^ 8));
    result.frozen_checksum_before = frozen_checksum();

    const double lambda = options.use_quant ? hp.lambda_ : 0.0;
    const double mu = options.use_balance ? hp.mu : 0.0;

    result.setup_seconds = seconds_since(t_setup);
    const auto t_train = Clock::now();

    auto rng = make_rng(hp.seed, 0x11fe);
    std::vector<Index> perm(static_cast<std::size_t>(a));
    std::iota(perm.begin(), perm.end(), Index{0});

    auto trailing_outputs = [&](const Matrix& buf) {
        Matrix out(k, a2);
        for (Index t = 0; t < a2; ++t) out.col(t) = buf.col(a1 + t);
        return out;
    };

    auto run_batches = [&](NetworkParams& net, const Matrix& rows, const HashCodes& old_codes,
                           HashCodes& new_codes, int batch_size) {
        Matrix u_buf = forward(net, rows).values;  // k x a
        std::shuffle(perm.begin(), perm.end(), rng);
        const Index batches = (a + batch_size - 1) / batch_size;
        for (Index b = 0; b < batches; ++b) {
            const Index begin = b * batch_size;
            const Index count = std::min<Index>(batch_size, a - begin);
            const Index* idx = perm.data() + begin;

            Matrix batch_rows(count, rows.cols());
            for (Index c = 0; c < count; ++c) batch_rows.row(c) = rows.row(idx[c]);
            ForwardCache cache;
            const Matrix out = forward_cached(net, batch_rows, cache).values;
            for (Index c = 0; c < count; ++c) u_buf.col(idx[c]) = out.col(c);

            const Matrix fit = out.array().tanh().matrix();
            Matrix grad_fit = Matrix::Zero(k, count);
            if (options.use_old) {
                Matrix s_cols(old_codes.count(), count);
                for (Index c = 0; c < count; ++c) s_cols.col(c) = s_train_old.values.col(idx[c]);
                grad_fit += old_codes.values *
                            (2.0 * (old_codes.values.transpose() * fit - static_cast<double>(k) * s_cols));
            }
            if (options.use_new) {
                Matrix s_cols(new_codes.count(), count);
                for (Index c = 0; c < count; ++c) s_cols.col(c) = s_train_new.values.col(idx[c]);
                grad_fit += new_codes.values *
                            (2.0 * (new_codes.values.transpose() * fit - static_cast<double>(k) * s_cols));
            }
            Matrix grad = options.detach_tanh_fit
                              ? std::move(grad_fit)
                              : Matrix((grad_fit.array() * (1.0 - fit.array().square())).matrix());

            Vector row_sums = Vector::Zero(k);
            for (Index col : a2_columns) row_sums += u_buf.col(col);
            for (Index c = 0; c < count; ++c) {
                const Index col = idx[c];
                if (col < a1) continue;  // original-sample column: similarity terms only
                const Index code_col = sample_positions[static_cast<std::size_t>(col - a1)];
                grad.col(c) += 2.0 * lambda * (out.col(c) - new_codes.values.col(code_col));
                grad.col(c) += 2.0 * mu * row_sums;
            }

            sgd_step(net, backward_cached(net, cache, grad), hp.lr_lifelong);
        }
    };

    for (int epoch = 0; epoch < hp.epochs_lifelong; ++epoch) {
        run_batches(result.img_net, x, codes_img, result.codes_img_new, hp.batch_image);
        run_batches(result.txt_net, y, codes_txt, result.codes_txt_new, hp.batch_text);

        // Code updates with the networks held fixed.
        const Matrix ux = forward(result.img_net, x).values;
        const ContinuousCodes ax{Matrix(ux.array().tanh().matrix())};
        const ContinuousCodes fx{trailing_outputs(ux)};
        const DccWorkspace wsx = make_dcc_workspace(ax, s_train_new, fx, sample_positions, k, lambda);
        result.codes_img_new = dcc_update(result.codes_img_new, ax, wsx, hp.dcc_sweeps);

        const Matrix uy = forward(result.txt_net, y).values;
        const ContinuousCodes ay{Matrix(uy.array().tanh().matrix())};
        const ContinuousCodes gy{trailing_outputs(uy)};
        const DccWorkspace wsy = make_dcc_workspace(ay, s_train_new, gy, sample_positions, k, lambda);
        result.codes_txt_new = dcc_update(result.codes_txt_new, ay, wsy, hp.dcc_sweeps);

        const LifelongLossTerms terms =
            lifelong_loss(codes_img, codes_txt, result.codes_img_new, result.codes_txt_new, ax, ay,
                          fx, gy, sample_positions, s_train_old, s_train_new, k, lambda, mu);
        double total = lambda * terms.quan + mu * terms.balance;
        if (options.use_old) total += terms.preserve_old;
        if (options.use_new) total += terms.preserve_new;
        if (!std::isfinite(total))
            throw NumericalError("train_lifelong: non-finite loss at iteration " +
                                 std::to_string(epoch + 1) + "; lower lr_lifelong");
        result.trace.push_back({epoch + 1, terms.preserve_old, terms.preserve_new, terms.quan,
                                terms.balance, total});
    }

    result.train_seconds = seconds_since(t_train);
    result.frozen_checksum_after = frozen_checksum();
    return result;
}

}  // namespace lch
