#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lch/similarity.hpp"
#include "test_util.hpp"

using namespace lch;

namespace {
LabelMatrix row(std::initializer_list<double> values) {
    Matrix m(1, static_cast<Index>(values.size()));
    Index j = 0;
    for (double v : values) m(0, j++) = v;
    return LabelMatrix{m};
}
}  // namespace

TEST_CASE("multi-label similarity examples") {
    CHECK(multi_label_similarity(row({1, 0, 1}), row({1, 0, 1})).values(0, 0) == doctest::Approx(1.0));
    CHECK(multi_label_similarity(row({1, 0}), row({0, 1})).values(0, 0) == doctest::Approx(0.0));
    CHECK(multi_label_similarity(row({1, 0, 1, 0}), row({1, 1, 0, 0})).values(0, 0) ==
          doctest::Approx(0.5));

    LabelMatrix zero;
    zero.values = Matrix::Zero(1, 3);
    CHECK_THROWS_AS(multi_label_similarity(zero, row({1, 0, 0})), DataError);
}

TEST_CASE("single-label similarity examples") {
    CHECK(single_label_similarity(row({1, 0, 1}), row({1, 0, 1})).values(0, 0) == 1.0);
    CHECK(single_label_similarity(row({1, 0}), row({0, 1})).values(0, 0) == 0.0);
    CHECK(single_label_similarity(row({1, 0, 1, 0}), row({1, 1, 0, 0})).values(0, 0) == 1.0);
}

TEST_CASE("label dot similarity keeps shared-class counts") {
    CHECK(label_dot_similarity(row({1, 1, 1}), row({1, 1, 0})).values(0, 0) == 2.0);
}

TEST_CASE("representation similarity examples") {
    Matrix u(2, 1), v(2, 1);
    u << 1, 0;
    v << 1, 1;
    CHECK(representation_similarity(ContinuousCodes{u}, ContinuousCodes{u}).values(0, 0) ==
          doctest::Approx(1.0));
    CHECK(representation_similarity(ContinuousCodes{u}, ContinuousCodes{Matrix(-u)}).values(0, 0) ==
          doctest::Approx(0.0));
    CHECK(representation_similarity(ContinuousCodes{u}, ContinuousCodes{v}).values(0, 0) ==
          doctest::Approx(1.0 / std::sqrt(2.0)));

    Matrix dead = Matrix::Zero(2, 1);
    CHECK_THROWS_AS(representation_similarity(ContinuousCodes{u}, ContinuousCodes{dead}),
                    NumericalError);
}

TEST_CASE("similarity ranges and symmetry on random inputs") {
    auto rng = make_rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto l = LabelMatrix{test::random_labels(12, 5, rng)};
        const auto s = multi_label_similarity(l, l);
        CHECK(s.values.minCoeff() >= 0.0);
        CHECK(s.values.maxCoeff() <= 1.0);
        CHECK((s.values - s.values.transpose()).norm() == doctest::Approx(0.0));
        for (Index i = 0; i < s.rows(); ++i) CHECK(s.values(i, i) == doctest::Approx(1.0));

        const auto u = ContinuousCodes{test::random_matrix(4, 6, rng)};
        const auto v = ContinuousCodes{test::random_matrix(4, 7, rng)};
        const auto q = representation_similarity(u, v);
        CHECK(q.values.minCoeff() >= 0.0);
        CHECK(q.values.maxCoeff() <= 1.0);
    }
}

TEST_CASE("adding a shared class never decreases multi-label similarity") {
    // Brute force over all non-empty 5-class label pairs.
    const int classes = 5;
    for (int a = 1; a < (1 << classes); ++a) {
        for (int b = 1; b < (1 << classes); ++b) {
            for (int c = 0; c < classes; ++c) {
                if ((a >> c) & 1 || (b >> c) & 1) continue;
                auto to_row = [&](int mask) {
                    Matrix m = Matrix::Zero(1, classes);
                    for (int bit = 0; bit < classes; ++bit)
                        if ((mask >> bit) & 1) m(0, bit) = 1.0;
                    return LabelMatrix{m};
                };
                const double before =
                    multi_label_similarity(to_row(a), to_row(b)).values(0, 0);
                const double after = multi_label_similarity(to_row(a | (1 << c)),
                                                            to_row(b | (1 << c))).values(0, 0);
                REQUIRE(after >= before - 1e-12);
            }
        }
    }
}

TEST_CASE("single and multi label agree on positivity") {
    auto rng = make_rng(9);
    const auto l1 = LabelMatrix{test::random_labels(20, 6, rng)};
    const auto l2 = LabelMatrix{test::random_labels(15, 6, rng)};
    const auto multi = multi_label_similarity(l1, l2);
    const auto single = single_label_similarity(l1, l2);
    for (Index i = 0; i < multi.rows(); ++i) {
        for (Index j = 0; j < multi.cols(); ++j) {
            const double m = multi.values(i, j);
            const double s = single.values(i, j);
            CHECK(s >= (m > 0.0 ? 1.0 : 0.0));
            CHECK(s <= std::ceil(m - 1e-15) + 1e-15);
        }
    }
}
