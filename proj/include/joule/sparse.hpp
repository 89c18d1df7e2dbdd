#pragma once

#include <span>
#include <utility>
#include <vector>

namespace joule {

/// Compressed sparse row matrix (square, symmetric by construction here).
struct Csr {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;

    void multiply(std::span<const double> x, std::span<double> y) const {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
            y[i] = s;
        }
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                if (col[k] == i) d[i] = val[k];
        return d;
    }
};

/// Row-wise accumulator used during assembly; flattened into Csr once all
/// element contributions are in. Insertion order does not affect the result.
class SparseAccumulator {
public:
    explicit SparseAccumulator(int n) : rows_(n) {}

    void add(int i, int j, double v) {
        auto& row = rows_[i];
        for (auto& [c, x] : row)
            if (c == j) {
                x += v;
                return;
            }
        row.emplace_back(j, v);
    }

    Csr to_csr() const;

private:
    std::vector<std::vector<std::pair<int, double>>> rows_;
};

} // namespace joule
