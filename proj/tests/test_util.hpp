#pragma once

#include <random>

#include "lch/data_model.hpp"
#include "lch/rng.hpp"

namespace lch::test {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
    return m;
}

inline Matrix random_sign_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = coin(rng) ? 1.0 : -1.0;
    return m;
}

// Random multi-hot labels; every row gets 1..max_card classes.
inline Matrix random_labels(Index rows, Index classes, std::mt19937_64& rng, int max_card = 3) {
    std::uniform_int_distribution<int> card_dist(1, max_card);
    std::uniform_int_distribution<Index> class_dist(0, classes - 1);
    Matrix m = Matrix::Zero(rows, classes);
    for (Index i = 0; i < rows; ++i) {
        const int card = card_dist(rng);
        for (int c = 0; c < card; ++c) m(i, class_dist(rng)) = 1.0;
    }
    return m;
}

// Central finite differences of a scalar function w.r.t. every entry of x.
template <typename F, typename Mat>
Matrix finite_difference(F&& f, Mat& x, double eps = 1e-4) {
    Matrix grad(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        for (Index i = 0; i < x.rows(); ++i) {
            const double orig = x(i, j);
            x(i, j) = orig + eps;
            const double up = f();
            x(i, j) = orig - eps;
            const double down = f();
            x(i, j) = orig;
            grad(i, j) = (up - down) / (2.0 * eps);
        }
    }
    return grad;
}

inline double relative_error(const Matrix& a, const Matrix& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale < 1e-12 ? (a - b).norm() : (a - b).norm() / scale;
}

}  // namespace lch::test
