#pragma once

#include <cstdint>
#include <vector>

#include "lch/data_model.hpp"

namespace lch {

int hamming_distance(const std::uint64_t* a, const std::uint64_t* b, int words_per_code);
int hamming_distance(const PackedCodes& a, Index i, const PackedCodes& b, Index j);

// Per query: database indices by ascending Hamming distance, ties by ascending
// database index. Counting sort over distances keeps it deterministic.
std::vector<std::vector<Index>> rank_database(const PackedCodes& queries,
                                              const PackedCodes& database);

using RelevanceMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Relevant iff the instances share at least one class.
RelevanceMatrix relevance_from_labels(const LabelMatrix& query_labels,
                                      const LabelMatrix& db_labels);

double mean_average_precision(const std::vector<std::vector<Index>>& rankings,
                              const RelevanceMatrix& relevance);

struct PrPoint {
    double recall = 0, precision = 0;
};

// Precision/recall averaged over queries at each ranking depth; the recall-0
// boundary point carries precision@1.
std::vector<PrPoint> precision_recall_curve(const std::vector<std::vector<Index>>& rankings,
                                            const RelevanceMatrix& relevance);

// Precision among database items within the Hamming radius, averaged over
// queries; a query with no candidate contributes 0.
double hash_lookup_precision(const PackedCodes& queries, const PackedCodes& database,
                             const RelevanceMatrix& relevance, int radius = 2);

}  // namespace lch
