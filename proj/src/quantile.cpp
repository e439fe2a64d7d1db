#include "tabrep/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tabrep {

double stdnormal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// Acklam's rational approximation with one Halley refinement; accurate to
// ~1e-15 over (0,1).
double stdnormal_inv(double p) {
    if (p <= 0.0) return -INFINITY;
    if (p >= 1.0) return INFINITY;

    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double e = stdnormal_cdf(x) - p;
    const double u = e * 2.50662827463100050242 * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

namespace {

// linear-interpolation quantile of sorted data at probability q
double sorted_quantile(const std::vector<double>& sorted, double q) {
    const size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = q * static_cast<double>(n - 1);
    const size_t lo = static_cast<size_t>(std::min(pos, static_cast<double>(n - 2)));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

double QuantileMap::forward(int col, double x) const {
    const Column& c = columns_[static_cast<size_t>(col)];
    if (c.constant) return 0.0;
    const auto& refs = c.refs;
    const size_t m = refs.size();
    x = std::clamp(x, refs.front(), refs.back());

    const auto lo = std::lower_bound(refs.begin(), refs.end(), x);
    const auto hi = std::upper_bound(refs.begin(), refs.end(), x);
    const double denom = static_cast<double>(m - 1);
    double p;
    if (lo != hi) {
        // exact tie run: midpoint of its grid span
        const double q_first = static_cast<double>(lo - refs.begin()) / denom;
        const double q_last = static_cast<double>(hi - refs.begin() - 1) / denom;
        p = 0.5 * (q_first + q_last);
    } else {
        const size_t k = static_cast<size_t>(lo - refs.begin());  // refs[k-1] < x < refs[k]
        const double q0 = static_cast<double>(k - 1) / denom;
        const double q1 = static_cast<double>(k) / denom;
        p = q0 + (q1 - q0) * (x - refs[k - 1]) / (refs[k] - refs[k - 1]);
    }
    return std::clamp(stdnormal_inv(p), -clip_, clip_);
}

double QuantileMap::inverse(int col, double z) const {
    const Column& c = columns_[static_cast<size_t>(col)];
    const auto& refs = c.refs;
    if (c.constant) return refs.front();
    if (z >= clip_) return refs.back();
    if (z <= -clip_) return refs.front();
    const double p = stdnormal_cdf(z);
    const double u = p * static_cast<double>(refs.size() - 1);
    const size_t k = static_cast<size_t>(std::min(u, static_cast<double>(refs.size() - 2)));
    const double frac = u - static_cast<double>(k);
    return refs[k] + (refs[k + 1] - refs[k]) * frac;
}

std::vector<double> QuantileMap::forward(int col, const std::vector<double>& xs) const {
    std::vector<double> out(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) out[i] = forward(col, xs[i]);
    return out;
}

std::vector<double> QuantileMap::inverse(int col, const std::vector<double>& zs) const {
    std::vector<double> out(zs.size());
    for (size_t i = 0; i < zs.size(); ++i) out[i] = inverse(col, zs[i]);
    return out;
}

QuantileMap fit_quantile_columns(const std::vector<std::vector<double>>& columns, int n_quantiles,
                                 double clip) {
    if (n_quantiles < 2) throw std::invalid_argument("fit_quantile: n_quantiles must be >= 2");
    std::vector<QuantileMap::Column> fitted;
    fitted.reserve(columns.size());
    for (const auto& values : columns) {
        if (values.empty()) throw std::invalid_argument("fit_quantile: empty column");
        std::vector<double> sorted(values);
        std::sort(sorted.begin(), sorted.end());
        const size_t m = static_cast<size_t>(
            std::max<int64_t>(2, std::min<int64_t>(n_quantiles, static_cast<int64_t>(sorted.size()))));
        QuantileMap::Column col;
        col.refs.resize(m);
        for (size_t i = 0; i < m; ++i)
            col.refs[i] = sorted_quantile(sorted, static_cast<double>(i) / static_cast<double>(m - 1));
        col.constant = col.refs.back() == col.refs.front();
        fitted.push_back(std::move(col));
    }
    return QuantileMap(std::move(fitted), clip);
}

QuantileMap fit_quantile(const Table& table, int n_quantiles, uint64_t /*seed*/) {
    if (table.n_numeric() == 0)
        throw std::invalid_argument("fit_quantile: table has no numeric columns");
    std::vector<std::vector<double>> columns;
    columns.reserve(static_cast<size_t>(table.n_numeric()));
    for (int j = 0; j < table.n_numeric(); ++j) columns.push_back(table.numeric_column(j));
    return fit_quantile_columns(columns, n_quantiles);
}

}  // namespace tabrep
