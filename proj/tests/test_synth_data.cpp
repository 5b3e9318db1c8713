#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <map>

#include "lch/bundle_io.hpp"
#include "lch/synth_data.hpp"
#include "test_util.hpp"

using namespace lch;

TEST_CASE("zero noise makes equal label sets share features") {
    SynthConfig config;
    config.classes = 4;
    config.per_class = 10;
    config.noise_sigma = 0.0;
    config.label_cardinality_probs = {{1, 1.0}};
    config.co_occurrence = 0.0;
    config.seed = 2;
    const Bundle bundle = generate(config);
    // Same single class -> identical features.
    for (Index i = 0; i < bundle.instances(); ++i)
        for (Index j = i + 1; j < bundle.instances(); ++j)
            if (bundle.labels.values.row(i) == bundle.labels.values.row(j)) {
                REQUIRE(bundle.img.values.row(i) == bundle.img.values.row(j));
                REQUIRE(bundle.txt.values.row(i) == bundle.txt.values.row(j));
            }
}

TEST_CASE("cardinality table {1: 1.0} yields a single-label dataset") {
    SynthConfig config;
    config.classes = 5;
    config.per_class = 8;
    config.label_cardinality_probs = {{1, 1.0}};
    config.seed = 3;
    const Bundle bundle = generate(config);
    for (Index i = 0; i < bundle.instances(); ++i)
        CHECK(bundle.labels.values.row(i).sum() == doctest::Approx(1.0));
}

TEST_CASE("default config is separable and balanced") {
    SynthConfig config;
    config.seed = 4;
    const Bundle bundle = generate(config);

    SUBCASE("nearest prototype classifies at least 95% of instances") {
        // Recover the prototypes as per-class feature means of single-label rows;
        // an instance counts as correct if its best prototype is among its labels.
        Matrix means = Matrix::Zero(config.classes, config.d_img);
        Vector counts = Vector::Zero(config.classes);
        for (Index i = 0; i < bundle.instances(); ++i) {
            if (bundle.labels.values.row(i).sum() != 1.0) continue;
            for (int c = 0; c < config.classes; ++c)
                if (bundle.labels.values(i, c) == 1.0) {
                    means.row(c) += bundle.img.values.row(i);
                    counts(c) += 1;
                }
        }
        for (int c = 0; c < config.classes; ++c) means.row(c) /= std::max(1.0, counts(c));

        Index correct = 0;
        for (Index i = 0; i < bundle.instances(); ++i) {
            int best = 0;
            double best_cos = -2;
            for (int c = 0; c < config.classes; ++c) {
                const double cos = bundle.img.values.row(i).dot(means.row(c)) /
                                   (bundle.img.values.row(i).norm() * means.row(c).norm());
                if (cos > best_cos) {
                    best_cos = cos;
                    best = c;
                }
            }
            if (bundle.labels.values(i, best) == 1.0) ++correct;
        }
        CHECK(static_cast<double>(correct) / static_cast<double>(bundle.instances()) >= 0.95);
    }

    SUBCASE("class membership counts are balanced") {
        Vector counts = bundle.labels.values.colwise().sum();
        const double mean = counts.mean();
        for (int c = 0; c < config.classes; ++c) {
            CHECK(counts(c) >= 0.9 * mean);
            CHECK(counts(c) <= 1.1 * mean);
        }
        CHECK(mean >= config.per_class);
    }

    SUBCASE("generation is deterministic per seed") {
        const Bundle again = generate(config);
        CHECK(bundle.img.values == again.img.values);
        CHECK(bundle.txt.values == again.txt.values);
        CHECK(bundle.labels.values == again.labels.values);
        SynthConfig other = config;
        other.seed = 5;
        CHECK(generate(other).img.values != bundle.img.values);
    }
}

TEST_CASE("invalid probability tables are rejected") {
    SynthConfig config;
    config.label_cardinality_probs = {{1, 0.5}, {2, 0.2}};
    CHECK_THROWS_AS(generate(config), DataError);
    config.label_cardinality_probs = {{0, 1.0}};
    CHECK_THROWS_AS(generate(config), DataError);
    config.label_cardinality_probs = {};
    CHECK_THROWS_AS(generate(config), DataError);
}

TEST_CASE("feature-space oracle") {
    SynthConfig config;
    config.classes = 6;
    config.per_class = 20;
    config.noise_sigma = 0.0;
    config.label_cardinality_probs = {{1, 1.0}};
    config.co_occurrence = 0.0;
    config.seed = 6;
    const Bundle bundle = generate(config);
    const auto split = make_split(bundle.labels, 0, 0.1, 6);

    SUBCASE("noise-free disjoint single labels give MAP 1") {
        const auto oracle = feature_space_oracle(bundle, split);
        CHECK(oracle.i2t == doctest::Approx(1.0));
        CHECK(oracle.t2i == doctest::Approx(1.0));
    }

    SUBCASE("oracle is deterministic") {
        const auto a = feature_space_oracle(bundle, split);
        const auto b = feature_space_oracle(bundle, split);
        CHECK(a.i2t == b.i2t);
        CHECK(a.t2i == b.t2i);
    }
}

TEST_CASE("bundle writes and reads back bit-exact") {
    SynthConfig config;
    config.classes = 3;
    config.per_class = 5;
    config.d_img = 6;
    config.d_txt = 4;
    config.seed = 9;
    const Bundle bundle = generate(config);

    const auto dir = std::filesystem::temp_directory_path() / "lch_test_bundle";
    std::filesystem::remove_all(dir);
    write_bundle(dir, bundle);
    CHECK_THROWS_AS(write_bundle(dir, bundle, /*force=*/false), DataError);
    write_bundle(dir, bundle, /*force=*/true);

    const Bundle back = read_bundle(dir);
    CHECK(back.labels.values == bundle.labels.values);
    CHECK(back.class_names == bundle.class_names);
    // Feature payloads are float32 on disk; the round-trip must be exact at
    // float precision.
    CHECK((back.img.values.cast<float>() == bundle.img.values.cast<float>()));
    CHECK((back.txt.values.cast<float>() == bundle.txt.values.cast<float>()));
    std::filesystem::remove_all(dir);
}

TEST_CASE("pool validation catches bad bundles") {
    SynthConfig config;
    config.classes = 3;
    config.per_class = 4;
    config.seed = 1;
    const Bundle bundle = generate(config);
    const auto report = validate_bundle(bundle.img, bundle.txt, bundle.labels);
    CHECK(report.ok());
}
