#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>
#include <set>

#include "lch/bundle_io.hpp"
#include "lch/data_model.hpp"
#include "lch/synth_data.hpp"
#include "test_util.hpp"

using namespace lch;

TEST_CASE("label matrix rejects bad rows") {
    Matrix ok(2, 3);
    ok << 1, 0, 1, 0, 1, 0;
    CHECK_NOTHROW(make_labels(ok));

    Matrix zero_row(2, 3);
    zero_row << 1, 0, 0, 0, 0, 0;
    CHECK_THROWS_AS(make_labels(zero_row), DataError);

    Matrix bad_value(1, 2);
    bad_value << 1, 0.5;
    CHECK_THROWS_AS(make_labels(bad_value), DataError);
}

TEST_CASE("pack/unpack round-trips for every code length up to 256") {
    auto rng = make_rng(7);
    for (int k = 1; k <= 256; ++k) {
        const Index count = 1 + static_cast<Index>(k % 5);
        const HashCodes codes{test::random_sign_matrix(k, count, rng)};
        const PackedCodes packed = pack(codes);
        CHECK(packed.words_per_code == (k + 63) / 64);
        // Padding bits must stay zero.
        if (k % 64 != 0) {
            const std::uint64_t mask = ~((std::uint64_t{1} << (k % 64)) - 1);
            for (Index j = 0; j < count; ++j)
                CHECK((packed.row(j)[packed.words_per_code - 1] & mask) == 0);
        }
        const HashCodes back = unpack(packed);
        CHECK(back.values == codes.values);
    }
}

TEST_CASE("validate_bundle reports the spec'd violations") {
    auto rng = make_rng(3);
    const auto img = make_features(Modality::image, test::random_matrix(3, 4, rng));
    const auto txt = make_features(Modality::text, test::random_matrix(3, 2, rng));
    Matrix l(3, 2);
    l << 1, 0, 0, 1, 1, 1;
    const auto labels = make_labels(l);

    CHECK(validate_bundle(img, txt, labels).ok());

    const auto txt_short = make_features(Modality::text, test::random_matrix(2, 2, rng));
    const auto r1 = validate_bundle(img, txt_short, labels);
    REQUIRE_FALSE(r1.ok());
    CHECK(r1.violations.front().find("row count mismatch") != std::string::npos);

    // An all-zero label row is reported rather than thrown here.
    LabelMatrix raw;
    raw.values = Matrix::Zero(3, 2);
    raw.values(0, 0) = 1;
    raw.values(1, 1) = 1;
    const auto r2 = validate_bundle(img, txt, raw);
    REQUIRE_FALSE(r2.ok());
    CHECK(r2.violations.front().find("unlabeled instance") != std::string::npos);
}

TEST_CASE("make_split follows the class protocol") {
    SynthConfig config;
    config.classes = 10;
    config.per_class = 12;
    config.d_img = 8;
    config.d_txt = 8;
    config.label_cardinality_probs = {{1, 1.0}};
    config.co_occurrence = 0.0;
    config.seed = 11;
    const Bundle bundle = generate(config);

    SUBCASE("wiki-style 9/1") {
        const auto split = make_split(bundle.labels, 1, 0.1, 5);
        CHECK(split.original_classes.size() == 9);
        CHECK(split.incremental_classes.size() == 1);
        CHECK(split.original_indices.size() + split.incremental_indices.size() ==
              static_cast<std::size_t>(bundle.instances()));
    }

    SUBCASE("no incremental classes") {
        const auto split = make_split(bundle.labels, 0, 0.1, 5);
        CHECK(split.incremental_indices.empty());
        CHECK(split.incremental_classes.empty());
    }

    SUBCASE("deterministic per seed") {
        const auto a = make_split(bundle.labels, 2, 0.2, 17);
        const auto b = make_split(bundle.labels, 2, 0.2, 17);
        CHECK(a.original_indices == b.original_indices);
        CHECK(a.incremental_indices == b.incremental_indices);
        CHECK(a.query_indices == b.query_indices);
        CHECK(a.retrieval_indices == b.retrieval_indices);
        CHECK(a.incremental_classes == b.incremental_classes);
    }

    SUBCASE("rejects bad arguments") {
        CHECK_THROWS_AS(make_split(bundle.labels, 10, 0.1, 5), DataError);
        CHECK_THROWS_AS(make_split(bundle.labels, 1, 0.0, 5), DataError);
        CHECK_THROWS_AS(make_split(bundle.labels, 1, 1.0, 5), DataError);
    }
}

TEST_CASE("make_split invariants hold across many seeds") {
    auto rng = make_rng(23);
    const auto labels = make_labels(test::random_labels(80, 6, rng));
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto split = make_split(labels, 2, 0.15, seed);
        const auto again = make_split(labels, 2, 0.15, seed);
        REQUIRE(split.original_indices == again.original_indices);
        REQUIRE(split.query_indices == again.query_indices);

        std::set<int> incr(split.incremental_classes.begin(), split.incremental_classes.end());
        // Original instances carry no incremental class; incremental carry >= 1.
        for (Index i : split.original_indices)
            for (int c : incr) REQUIRE(labels.values(i, c) == 0.0);
        for (Index i : split.incremental_indices) {
            bool any = false;
            for (int c : incr) any = any || labels.values(i, c) == 1.0;
            REQUIRE(any);
        }
        REQUIRE(split.query_indices.size() + split.retrieval_indices.size() ==
                static_cast<std::size_t>(labels.rows()));
    }
}

TEST_CASE("hyperparams json round-trip and unknown keys") {
    HyperParams hp;
    hp.alpha = 3.5;
    hp.k = 32;
    hp.seed = 99;
    const auto j = hyperparams_to_json(hp);
    const HyperParams back = hyperparams_from_json(j);
    CHECK(back.alpha == hp.alpha);
    CHECK(back.k == hp.k);
    CHECK(back.seed == hp.seed);

    HyperParams bad;
    bad.gamma = -1;
    CHECK_THROWS_AS(validate(bad), DataError);
}

TEST_CASE("presets carry the tuned weights") {
    HyperParams hp;
    REQUIRE(apply_preset("mirflickr-i2t", hp));
    CHECK(hp.alpha == 10);
    CHECK(hp.beta == 100);
    CHECK(hp.gamma == 1);
    CHECK(hp.lambda_ == 10);
    CHECK(hp.mu == 100);
    CHECK_FALSE(apply_preset("nope", hp));
}
