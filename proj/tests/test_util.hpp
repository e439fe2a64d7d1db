#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "tabrep/rng.hpp"
#include "tabrep/table.hpp"

namespace tabrep::testing {

inline std::string temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("tabrep_test_" + tag);
    std::filesystem::create_directories(dir);
    return dir.string();
}

inline std::string temp_path(const std::string& tag, const std::string& name) {
    return (std::filesystem::path(temp_dir(tag)) / name).string();
}

// Two correlated numerics (rho = 0.7) plus a K=3 categorical whose
// distribution flips with the sign of the first numeric.
inline Table toy_table(int64_t n, uint64_t seed) {
    TableSchema schema;
    schema.columns.push_back({"x1", ColumnKind::Numeric, {}});
    schema.columns.push_back({"x2", ColumnKind::Numeric, {}});
    schema.columns.push_back({"c", ColumnKind::Categorical, {"a", "b", "c"}});
    schema.target_name = "c";
    schema.task = TaskKind::MulticlassClassification;

    std::vector<double> numeric;
    std::vector<int32_t> categorical;
    CounterRng g(seed, 7001);
    for (int64_t i = 0; i < n; ++i) {
        const double x1 = g.next_normal();
        const double x2 = 0.7 * x1 + std::sqrt(1.0 - 0.49) * g.next_normal();
        numeric.push_back(x1);
        numeric.push_back(x2);
        const double u = g.next_unit();
        int32_t c;
        if (x1 > 0)
            c = u < 0.7 ? 0 : (u < 0.9 ? 1 : 2);
        else
            c = u < 0.1 ? 0 : (u < 0.3 ? 1 : 2);
        categorical.push_back(c);
    }
    return Table(schema, std::move(numeric), std::move(categorical), n);
}

// single skewed categorical column, cardinality k
inline Table categorical_only_table(int64_t n, int k, uint64_t seed) {
    TableSchema schema;
    ColumnSpec spec;
    spec.name = "c";
    spec.kind = ColumnKind::Categorical;
    for (int i = 0; i < k; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "c%02d", i);
        spec.vocabulary.push_back(buf);
    }
    schema.columns.push_back(spec);
    schema.target_name = "c";
    schema.task = TaskKind::MulticlassClassification;

    // Zipf-ish weights make the marginal informative for TVD
    std::vector<double> cdf(static_cast<size_t>(k));
    double total = 0;
    for (int i = 0; i < k; ++i) {
        total += 1.0 / static_cast<double>(i + 1);
        cdf[static_cast<size_t>(i)] = total;
    }
    for (auto& v : cdf) v /= total;

    std::vector<int32_t> categorical(static_cast<size_t>(n));
    CounterRng g(seed, 7002);
    for (int64_t i = 0; i < n; ++i) {
        const double u = g.next_unit();
        int32_t c = 0;
        while (c + 1 < k && u > cdf[static_cast<size_t>(c)]) ++c;
        categorical[static_cast<size_t>(i)] = c;
    }
    return Table(schema, {}, std::move(categorical), n);
}

// randomized mixed table for codec round-trip properties
inline Table random_table(uint64_t seed, int max_rows = 50, int max_cols = 8, int max_k = 32) {
    CounterRng g(seed, 7003);
    const int64_t n = 2 + static_cast<int64_t>(g.next_below(static_cast<uint64_t>(max_rows - 1)));
    const int cols = 1 + static_cast<int>(g.next_below(static_cast<uint64_t>(max_cols)));

    TableSchema schema;
    std::vector<int> kinds;
    for (int j = 0; j < cols; ++j) {
        ColumnSpec spec;
        spec.name = "col" + std::to_string(j);
        if (g.next_unit() < 0.5) {
            spec.kind = ColumnKind::Numeric;
        } else {
            spec.kind = ColumnKind::Categorical;
            const int k = 2 + static_cast<int>(g.next_below(static_cast<uint64_t>(max_k - 1)));
            for (int c = 0; c < k; ++c) {
                char buf[8];
                std::snprintf(buf, sizeof(buf), "v%03d", c);
                spec.vocabulary.push_back(buf);
            }
        }
        kinds.push_back(spec.kind == ColumnKind::Numeric ? 0 : 1);
        schema.columns.push_back(spec);
    }
    schema.target_name = schema.columns.back().name;
    schema.task = kinds.back() == 0 ? TaskKind::Regression
                  : schema.columns.back().cardinality() == 2
                      ? TaskKind::BinaryClassification
                      : TaskKind::MulticlassClassification;

    std::vector<double> numeric;
    std::vector<int32_t> categorical;
    for (int64_t i = 0; i < n; ++i) {
        for (int j = 0; j < cols; ++j) {
            if (kinds[static_cast<size_t>(j)] == 0) {
                numeric.push_back(g.next_normal() * 10.0);
            } else {
                const int k = schema.columns[static_cast<size_t>(j)].cardinality();
                categorical.push_back(static_cast<int32_t>(g.next_below(static_cast<uint64_t>(k))));
            }
        }
    }
    return Table(schema, std::move(numeric), std::move(categorical), n);
}

}  // namespace tabrep::testing
