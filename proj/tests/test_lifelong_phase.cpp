#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lch/lifelong_phase.hpp"
#include "lch/synth_data.hpp"
#include "test_util.hpp"

using namespace lch;

namespace {

Bundle small_bundle(std::uint64_t seed = 5, int classes = 4, int per_class = 25) {
    SynthConfig config;
    config.classes = classes;
    config.per_class = per_class;
    config.d_img = 10;
    config.d_txt = 8;
    config.noise_sigma = 0.05;
    config.label_cardinality_probs = {{1, 1.0}};
    config.co_occurrence = 0.0;
    config.seed = seed;
    return generate(config);
}

SimilarityMatrix sim(Matrix m) { return SimilarityMatrix{SimilarityKind::multi_label, std::move(m)}; }

// Image-side lifelong objective as a function of the raw outputs u.
double lifelong_side_loss(const Matrix& u, const Matrix& bx, const Matrix& bxp, const Matrix& s_to,
                          const Matrix& s_ti, const std::vector<Index>& a2_cols,
                          const std::vector<Index>& positions, int k, double lambda, double mu) {
    const Matrix a = u.array().tanh().matrix();
    double loss = (bx.transpose() * a - static_cast<double>(k) * s_to).squaredNorm() +
                  (bxp.transpose() * a - static_cast<double>(k) * s_ti).squaredNorm();
    Vector row_sums = Vector::Zero(u.rows());
    for (std::size_t t = 0; t < a2_cols.size(); ++t) {
        loss += lambda * (u.col(a2_cols[t]) - bxp.col(positions[t])).squaredNorm();
        row_sums += u.col(a2_cols[t]);
    }
    loss += mu * row_sums.squaredNorm();
    return loss;
}

}  // namespace

TEST_CASE("sample_training_set examples") {
    const Bundle bundle = small_bundle();
    const auto split = make_split(bundle.labels, 1, 0.2, 3);
    const Index pool_old = static_cast<Index>(split.original_indices.size()) -
                           static_cast<Index>(std::count_if(
                               split.original_indices.begin(), split.original_indices.end(),
                               [&](Index i) {
                                   return std::find(split.query_indices.begin(),
                                                    split.query_indices.end(),
                                                    i) != split.query_indices.end();
                               }));

    SUBCASE("full population when a1/a2 cover the pools") {
        Index pool_new = 0;
        for (Index i : split.incremental_indices)
            if (std::find(split.retrieval_indices.begin(), split.retrieval_indices.end(), i) !=
                split.retrieval_indices.end())
                ++pool_new;
        const auto sample = sample_training_set(bundle.labels, split, pool_old, pool_new, 1);
        CHECK(sample.a1() == pool_old);
        CHECK(sample.a2() == pool_new);
    }

    SUBCASE("a2 = 0 uses original data only") {
        const auto sample = sample_training_set(bundle.labels, split, 10, 0, 1);
        CHECK(sample.a2() == 0);
        CHECK(sample.labels.rows() == 10);
    }

    SUBCASE("deterministic per seed, exhausted pool throws") {
        const auto a = sample_training_set(bundle.labels, split, 8, 4, 9);
        const auto b = sample_training_set(bundle.labels, split, 8, 4, 9);
        CHECK(a.original == b.original);
        CHECK(a.incremental == b.incremental);
        CHECK_THROWS_AS(sample_training_set(bundle.labels, split, 10000, 0, 1), DataError);
    }
}

TEST_CASE("lifelong loss: exact fit, balance identity, random oracle") {
    auto rng = make_rng(71);
    const int k = 4;
    const Index m = 6, n = 3, a = 4, a2 = 2;

    SUBCASE("constructed exact fit gives zero total") {
        // One-column codes replicated so B^T A = k S exactly with A = B/k ... use
        // B with orthogonal-ish rows: simplest exact construction is A built
        // from B and S chosen to match.
        const Matrix bx = test::random_sign_matrix(k, m, rng);
        const Matrix bxp = test::random_sign_matrix(k, n, rng);
        const Matrix ax = test::random_matrix(k, a, rng);
        const Matrix s_to = (bx.transpose() * ax) / static_cast<double>(k);
        const Matrix s_ti = (bxp.transpose() * ax) / static_cast<double>(k);
        std::vector<Index> positions{0, 2};
        Matrix fp(k, a2);
        fp.col(0) = bxp.col(0);
        fp.col(1) = bxp.col(2);

        const auto terms = lifelong_loss(
            HashCodes{bx}, HashCodes{bx}, HashCodes{bxp}, HashCodes{bxp}, ContinuousCodes{ax},
            ContinuousCodes{ax}, ContinuousCodes{fp}, ContinuousCodes{fp}, positions,
            sim(s_to), sim(s_ti), k, 2.0, 0.0);
        CHECK(terms.preserve_old == doctest::Approx(0.0));
        CHECK(terms.preserve_new == doctest::Approx(0.0));
        CHECK(terms.quan == doctest::Approx(0.0));
        CHECK(terms.total == doctest::Approx(0.0));
    }

    SUBCASE("per-bit balanced outputs zero the balance term") {
        Matrix fp(2, 2);
        fp << 0.5, -0.5, -0.25, 0.25;  // rows sum to zero
        const Matrix bx = test::random_sign_matrix(2, m, rng);
        const Matrix bxp = test::random_sign_matrix(2, n, rng);
        const Matrix ax = test::random_matrix(2, 2, rng);
        const auto terms = lifelong_loss(
            HashCodes{bx}, HashCodes{bx}, HashCodes{bxp}, HashCodes{bxp}, ContinuousCodes{ax},
            ContinuousCodes{ax}, ContinuousCodes{fp}, ContinuousCodes{fp}, {0, 1},
            sim(Matrix::Zero(m, 2)), sim(Matrix::Zero(n, 2)), 2, 0.0, 3.0);
        CHECK(terms.balance == doctest::Approx(0.0));
    }

    SUBCASE("random instance matches elementwise oracle") {
        const Matrix bx = test::random_sign_matrix(k, m, rng);
        const Matrix by = test::random_sign_matrix(k, m, rng);
        const Matrix bxp = test::random_sign_matrix(k, n, rng);
        const Matrix byp = test::random_sign_matrix(k, n, rng);
        const Matrix ax = test::random_matrix(k, a, rng);
        const Matrix ay = test::random_matrix(k, a, rng);
        const Matrix fp = test::random_matrix(k, a2, rng);
        const Matrix gp = test::random_matrix(k, a2, rng);
        const Matrix s_to = test::random_matrix(m, a, rng, 0, 1);
        const Matrix s_ti = test::random_matrix(n, a, rng, 0, 1);
        const std::vector<Index> positions{1, 2};
        const double lambda = 0.7, mu = 1.3;

        double expect_old = 0, expect_new = 0, expect_quan = 0, expect_bal = 0;
        auto sq = [](double v) { return v * v; };
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < a; ++j) {
                expect_old += sq(bx.col(i).dot(ax.col(j)) - k * s_to(i, j));
                expect_old += sq(by.col(i).dot(ay.col(j)) - k * s_to(i, j));
            }
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < a; ++j) {
                expect_new += sq(bxp.col(i).dot(ax.col(j)) - k * s_ti(i, j));
                expect_new += sq(byp.col(i).dot(ay.col(j)) - k * s_ti(i, j));
            }
        for (Index t = 0; t < a2; ++t) {
            expect_quan += (bxp.col(positions[t]) - fp.col(t)).squaredNorm();
            expect_quan += (byp.col(positions[t]) - gp.col(t)).squaredNorm();
        }
        for (Index r = 0; r < k; ++r) {
            expect_bal += sq(fp.row(r).sum());
            expect_bal += sq(gp.row(r).sum());
        }

        const auto terms = lifelong_loss(HashCodes{bx}, HashCodes{by}, HashCodes{bxp},
                                         HashCodes{byp}, ContinuousCodes{ax}, ContinuousCodes{ay},
                                         ContinuousCodes{fp}, ContinuousCodes{gp}, positions,
                                         sim(s_to), sim(s_ti), k, lambda, mu);
        CHECK(terms.preserve_old == doctest::Approx(expect_old));
        CHECK(terms.preserve_new == doctest::Approx(expect_new));
        CHECK(terms.quan == doctest::Approx(expect_quan));
        CHECK(terms.balance == doctest::Approx(expect_bal));
        CHECK(terms.total ==
              doctest::Approx(expect_old + expect_new + lambda * expect_quan + mu * expect_bal));
    }
}

TEST_CASE("lifelong network gradient") {
    auto rng = make_rng(73);
    const int k = 4;
    const Index m = 6, n = 3, a = 4;
    const std::vector<Index> a2_cols{2, 3};
    const std::vector<Index> positions{0, 2};

    SUBCASE("matches finite differences") {
        for (int trial = 0; trial < 10; ++trial) {
            const Matrix bx = test::random_sign_matrix(k, m, rng);
            const Matrix bxp = test::random_sign_matrix(k, n, rng);
            const Matrix s_to = test::random_matrix(m, a, rng, 0, 1);
            const Matrix s_ti = test::random_matrix(n, a, rng, 0, 1);
            Matrix u = test::random_matrix(k, a, rng);
            const double lambda = 0.8, mu = 0.5;

            const Matrix analytic =
                grad_lifelong_imgnet(u, HashCodes{bx}, HashCodes{bxp}, sim(s_to), sim(s_ti),
                                     a2_cols, positions, k, lambda, mu);
            auto loss = [&] {
                return lifelong_side_loss(u, bx, bxp, s_to, s_ti, a2_cols, positions, k, lambda, mu);
            };
            const Matrix fd = test::finite_difference(loss, u);
            CHECK(test::relative_error(analytic, fd) <= 1e-4);
        }
    }

    SUBCASE("zero at a constructed stationary point") {
        // lambda = mu = 0 and both similarity residuals identically zero.
        Matrix u = test::random_matrix(k, a, rng);
        const Matrix ax = u.array().tanh().matrix();
        const Matrix bx = test::random_sign_matrix(k, m, rng);
        const Matrix bxp = test::random_sign_matrix(k, n, rng);
        const Matrix s_to = (bx.transpose() * ax) / static_cast<double>(k);
        const Matrix s_ti = (bxp.transpose() * ax) / static_cast<double>(k);
        const Matrix analytic = grad_lifelong_imgnet(u, HashCodes{bx}, HashCodes{bxp}, sim(s_to),
                                                     sim(s_ti), a2_cols, positions, k, 0.0, 0.0);
        CHECK(analytic.cwiseAbs().maxCoeff() <= 1e-12);
    }

    SUBCASE("mu-only gradient broadcasts the row sums") {
        Matrix u = test::random_matrix(k, a, rng);
        const Matrix bx = test::random_sign_matrix(k, m, rng);
        const Matrix bxp = test::random_sign_matrix(k, n, rng);
        const Matrix zero_to = Matrix::Zero(m, a), zero_ti = Matrix::Zero(n, a);
        // Zero out the similarity path by matching residuals.
        const Matrix ax = u.array().tanh().matrix();
        const Matrix s_to = (bx.transpose() * ax) / static_cast<double>(k);
        const Matrix s_ti = (bxp.transpose() * ax) / static_cast<double>(k);
        const double mu = 2.5;
        const Matrix analytic = grad_lifelong_imgnet(u, HashCodes{bx}, HashCodes{bxp}, sim(s_to),
                                                     sim(s_ti), a2_cols, positions, k, 0.0, mu);
        Vector row_sums = Vector::Zero(k);
        for (Index col : a2_cols) row_sums += u.col(col);
        for (std::size_t t = 0; t < a2_cols.size(); ++t)
            CHECK(test::relative_error(analytic.col(a2_cols[t]), Matrix(2.0 * mu * row_sums)) <=
                  1e-12);
        CHECK(analytic.col(0).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

namespace {

// Exhaustive one-sweep simulation: each row in order is replaced by the
// pattern minimizing the full objective, ties impossible for generic draws.
Matrix exhaustive_sweep(const Matrix& b0, const Matrix& a, const Matrix& p) {
    Matrix b = b0;
    const Index n = b.cols();
    for (Index r = 0; r < b.rows(); ++r) {
        double best = std::numeric_limits<double>::infinity();
        Matrix best_b = b;
        for (long mask = 0; mask < (1L << n); ++mask) {
            Matrix candidate = b;
            for (Index j = 0; j < n; ++j) candidate(r, j) = (mask >> j) & 1 ? 1.0 : -1.0;
            const double value = dcc_objective(HashCodes{candidate}, ContinuousCodes{a}, p);
            if (value < best) {
                best = value;
                best_b = candidate;
            }
        }
        b = best_b;
    }
    return b;
}

}  // namespace

TEST_CASE("dcc update") {
    auto rng = make_rng(79);

    SUBCASE("k = 1 reduces to -sign(P)") {
        const Matrix a = test::random_matrix(1, 4, rng);
        const Matrix bxp = test::random_sign_matrix(1, 3, rng);
        const Matrix s_ti = test::random_matrix(3, 4, rng, 0, 1);
        const Matrix fp = test::random_matrix(1, 2, rng);
        const auto ws = make_dcc_workspace(ContinuousCodes{a}, sim(s_ti), ContinuousCodes{fp},
                                           {0, 2}, 1, 0.5);
        const auto updated = dcc_update(HashCodes{bxp}, ContinuousCodes{a}, ws, 1);
        for (Index j = 0; j < 3; ++j)
            CHECK(updated.values(0, j) == -code_sign(ws.p(0, j)));
    }

    SUBCASE("one sweep matches the exhaustive row-by-row minimizer") {
        for (int trial = 0; trial < 25; ++trial) {
            const int k = 2 + trial % 2;
            const Index n = 3 + trial % 3;
            const Index a_cols = 4;
            const Matrix a = test::random_matrix(k, a_cols, rng);
            const Matrix b0 = test::random_sign_matrix(k, n, rng);
            const Matrix s_ti = test::random_matrix(n, a_cols, rng, 0, 1);
            const Matrix fp = test::random_matrix(k, 2, rng);
            const auto ws = make_dcc_workspace(ContinuousCodes{a}, sim(s_ti), ContinuousCodes{fp},
                                               {0, n - 1}, k, 0.7);
            const auto updated = dcc_update(HashCodes{b0}, ContinuousCodes{a}, ws, 1);
            const Matrix expect = exhaustive_sweep(b0, a, ws.p);
            REQUIRE(updated.values == expect);
        }
    }

    SUBCASE("objective never increases across row updates and sweeps") {
        for (int trial = 0; trial < 20; ++trial) {
            const int k = 4;
            const Index n = 6, a_cols = 5;
            const Matrix a = test::random_matrix(k, a_cols, rng);
            const Matrix b0 = test::random_sign_matrix(k, n, rng);
            const Matrix s_ti = test::random_matrix(n, a_cols, rng, 0, 1);
            const Matrix fp = test::random_matrix(k, 3, rng);
            const auto ws = make_dcc_workspace(ContinuousCodes{a}, sim(s_ti), ContinuousCodes{fp},
                                               {0, 2, 4}, k, 1.1);
            double prev = dcc_objective(HashCodes{b0}, ContinuousCodes{a}, ws.p);
            HashCodes b{b0};
            for (int sweep = 0; sweep < 3; ++sweep) {
                b = dcc_update(b, ContinuousCodes{a}, ws, 1);
                const double now = dcc_objective(b, ContinuousCodes{a}, ws.p);
                REQUIRE(now <= prev + 1e-9);
                prev = now;
            }
        }
    }
}

TEST_CASE("train_lifelong basics") {
    const Bundle bundle = small_bundle(7, 4, 30);
    const auto split = make_split(bundle.labels, 1, 0.15, 11);

    OriginalTrainOptions orig_options;
    orig_options.hp.k = 8;
    orig_options.hp.alpha = 1;
    orig_options.hp.beta = 1;
    orig_options.hp.gamma = 1;
    orig_options.hp.batch_label = orig_options.hp.batch_image = orig_options.hp.batch_text = 32;
    orig_options.hp.lr_original = 0.05;
    orig_options.hp.epochs_original = 5;
    orig_options.hp.seed = 3;
    orig_options.hidden_img = orig_options.hidden_txt = orig_options.hidden_label = {16};
    const auto orig = train_original(bundle, split, orig_options);

    LifelongTrainOptions options;
    options.hp = orig_options.hp;
    options.hp.lambda_ = 1.0;
    options.hp.mu = 0.5;
    options.hp.a1 = 40;
    options.hp.a2 = 20;
    options.hp.lr_lifelong = 0.01;
    options.hp.batch_image = options.hp.batch_text = 16;

    SUBCASE("zero epochs leaves random codes and frozen originals") {
        options.hp.epochs_lifelong = 0;
        const auto life = train_lifelong(bundle, split, orig.img_net, orig.txt_net, orig.codes_img,
                                         orig.codes_txt, orig.train_indices, options);
        CHECK(life.trace.empty());
        CHECK(life.codes_img_new.values ==
              random_codes(8, life.codes_img_new.count(), splitmix64(options.hp.seed ^ 7)).values);
        CHECK(life.frozen_checksum_before == life.frozen_checksum_after);
    }

    SUBCASE("deterministic, frozen codes, sane shapes") {
        options.hp.epochs_lifelong = 4;
        const Matrix before_img = orig.codes_img.values;
        const auto a = train_lifelong(bundle, split, orig.img_net, orig.txt_net, orig.codes_img,
                                      orig.codes_txt, orig.train_indices, options);
        const auto b = train_lifelong(bundle, split, orig.img_net, orig.txt_net, orig.codes_img,
                                      orig.codes_txt, orig.train_indices, options);
        CHECK(a.codes_img_new.values == b.codes_img_new.values);
        CHECK(a.codes_txt_new.values == b.codes_txt_new.values);
        CHECK(a.frozen_checksum_before == a.frozen_checksum_after);
        CHECK(orig.codes_img.values == before_img);
        CHECK(a.codes_img_new.count() == static_cast<Index>(a.incremental_db.size()));
        // Shape law: the preserved-similarity residuals pair m x a and n x a.
        CHECK(a.sample.total() == options.hp.a1 + options.hp.a2);
        REQUIRE_FALSE(a.trace.empty());
        for (const auto& row : a.trace) {
            CHECK(row.preserve_old >= 0);
            CHECK(row.preserve_new >= 0);
            CHECK(row.quan >= 0);
            CHECK(row.balance >= 0);
        }
    }

    SUBCASE("empty incremental set throws") {
        const auto no_incr = make_split(bundle.labels, 0, 0.15, 11);
        options.hp.epochs_lifelong = 1;
        CHECK_THROWS_AS(train_lifelong(bundle, no_incr, orig.img_net, orig.txt_net, orig.codes_img,
                                       orig.codes_txt, orig.train_indices, options),
                        DataError);
    }
}
