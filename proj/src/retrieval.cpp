#include "lch/retrieval.hpp"

#include <bit>

namespace lch {

int hamming_distance(const std::uint64_t* a, const std::uint64_t* b, int words_per_code) {
    int d = 0;
    for (int w = 0; w < words_per_code; ++w) d += std::popcount(a[w] ^ b[w]);
    return d;
}

int hamming_distance(const PackedCodes& a, Index i, const PackedCodes& b, Index j) {
    if (a.bits != b.bits) throw ShapeError("hamming_distance: code lengths differ");
    return hamming_distance(a.row(i), b.row(j), a.words_per_code);
}

std::vector<std::vector<Index>> rank_database(const PackedCodes& queries,
                                              const PackedCodes& database) {
    if (queries.bits != database.bits) throw ShapeError("rank_database: code lengths differ");
    if (database.count == 0) throw DataError("rank_database: empty database");

    std::vector<std::vector<Index>> rankings(static_cast<std::size_t>(queries.count));
    std::vector<std::vector<Index>> buckets(static_cast<std::size_t>(queries.bits) + 1);
    for (Index q = 0; q < queries.count; ++q) {
        for (auto& bucket : buckets) bucket.clear();
        const std::uint64_t* qrow = queries.row(q);
        for (Index j = 0; j < database.count; ++j)
            buckets[static_cast<std::size_t>(
                        hamming_distance(qrow, database.row(j), database.words_per_code))]
                .push_back(j);
        auto& out = rankings[static_cast<std::size_t>(q)];
        out.reserve(static_cast<std::size_t>(database.count));
        for (const auto& bucket : buckets) out.insert(out.end(), bucket.begin(), bucket.end());
    }
    return rankings;
}

RelevanceMatrix relevance_from_labels(const LabelMatrix& query_labels,
                                      const LabelMatrix& db_labels) {
    if (query_labels.classes() != db_labels.classes())
        throw ShapeError("relevance_from_labels: class spaces differ");
    const Matrix dots = query_labels.values * db_labels.values.transpose();
    RelevanceMatrix rel(dots.rows(), dots.cols());
    for (Index j = 0; j < dots.cols(); ++j)
        for (Index i = 0; i < dots.rows(); ++i) rel(i, j) = dots(i, j) > 0.0 ? 1 : 0;
    return rel;
}

double mean_average_precision(const std::vector<std::vector<Index>>& rankings,
                              const RelevanceMatrix& relevance) {
    if (rankings.empty()) throw DataError("mean_average_precision: no queries");
    double map_sum = 0.0;
    for (std::size_t q = 0; q < rankings.size(); ++q) {
        const auto& ranking = rankings[q];
        Index hits = 0;
        double ap = 0.0;
        for (std::size_t t = 0; t < ranking.size(); ++t) {
            if (relevance(static_cast<Index>(q), ranking[t])) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(t + 1);
            }
        }
        if (hits == 0)
            throw DataError("mean_average_precision: query " + std::to_string(q) +
                            " has no relevant item");
        map_sum += ap / static_cast<double>(hits);
    }
    return map_sum / static_cast<double>(rankings.size());
}

std::vector<PrPoint> precision_recall_curve(const std::vector<std::vector<Index>>& rankings,
                                            const RelevanceMatrix& relevance) {
    if (rankings.empty()) throw DataError("precision_recall_curve: no queries");
    const std::size_t depth = rankings.front().size();
    for (const auto& r : rankings)
        if (r.size() != depth) throw ShapeError("precision_recall_curve: ragged rankings");

    const auto n_queries = static_cast<double>(rankings.size());
    std::vector<double> recall_at(depth, 0.0), precision_at(depth, 0.0);
    for (std::size_t q = 0; q < rankings.size(); ++q) {
        Index total_relevant = 0;
        for (Index j = 0; j < relevance.cols(); ++j)
            total_relevant += relevance(static_cast<Index>(q), j);
        if (total_relevant == 0)
            throw DataError("precision_recall_curve: query " + std::to_string(q) +
                            " has no relevant item");
        Index hits = 0;
        for (std::size_t t = 0; t < depth; ++t) {
            hits += relevance(static_cast<Index>(q), rankings[q][t]);
            recall_at[t] += static_cast<double>(hits) / static_cast<double>(total_relevant);
            precision_at[t] += static_cast<double>(hits) / static_cast<double>(t + 1);
        }
    }

    std::vector<PrPoint> curve;
    curve.reserve(depth + 1);
    curve.push_back({0.0, precision_at[0] / n_queries});
    for (std::size_t t = 0; t < depth; ++t)
        curve.push_back({recall_at[t] / n_queries, precision_at[t] / n_queries});
    return curve;
}

double hash_lookup_precision(const PackedCodes& queries, const PackedCodes& database,
                             const RelevanceMatrix& relevance, int radius) {
    if (queries.bits != database.bits) throw ShapeError("hash_lookup_precision: code lengths differ");
    double sum = 0.0;
    for (Index q = 0; q < queries.count; ++q) {
        Index candidates = 0, hits = 0;
        const std::uint64_t* qrow = queries.row(q);
        for (Index j = 0; j < database.count; ++j) {
            if (hamming_distance(qrow, database.row(j), database.words_per_code) <= radius) {
                ++candidates;
                hits += relevance(q, j);
            }
        }
        if (candidates > 0) sum += static_cast<double>(hits) / static_cast<double>(candidates);
    }
    return queries.count == 0 ? 0.0 : sum / static_cast<double>(queries.count);
}

}  // namespace lch
