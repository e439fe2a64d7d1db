#pragma once

#include <cstdint>
#include <vector>

#include "tabrep/table.hpp"

namespace tabrep {

// standard normal CDF / inverse CDF
double stdnormal_cdf(double z);
double stdnormal_inv(double p);

// Monotone map from a column's empirical distribution to a standard normal,
// realized as piecewise-linear interpolation between reference quantiles on a
// uniform probability grid.
class QuantileMap {
public:
    struct Column {
        std::vector<double> refs;  // non-decreasing reference quantiles
        bool constant = false;     // zero interquantile range; passes through as zeros
    };

    QuantileMap() = default;
    QuantileMap(std::vector<Column> columns, double clip) : columns_(std::move(columns)), clip_(clip) {}

    int n_columns() const { return static_cast<int>(columns_.size()); }
    const Column& column(int j) const { return columns_[static_cast<size_t>(j)]; }
    double clip() const { return clip_; }
    bool fitted() const { return !columns_.empty(); }

    double forward(int col, double x) const;
    double inverse(int col, double z) const;

    std::vector<double> forward(int col, const std::vector<double>& xs) const;
    std::vector<double> inverse(int col, const std::vector<double>& zs) const;

private:
    std::vector<Column> columns_;
    double clip_ = 5.2;
};

// One map per numeric block column of `table`. The grid has
// min(n_quantiles, N) points. `seed` only matters when subsampling is ever
// added; it is kept in the signature for interface stability.
QuantileMap fit_quantile(const Table& table, int n_quantiles = 1000, uint64_t seed = 0);

QuantileMap fit_quantile_columns(const std::vector<std::vector<double>>& columns,
                                 int n_quantiles = 1000, double clip = 5.2);

}  // namespace tabrep
