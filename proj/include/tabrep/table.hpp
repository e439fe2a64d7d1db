#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabrep/schema.hpp"

namespace tabrep {

// Typed, immutable view of an ingested CSV. Numeric and categorical cells
// live in separate row-major blocks ordered as in the schema.
class Table {
public:
    Table() = default;
    Table(TableSchema schema, std::vector<double> numeric, std::vector<int32_t> categorical,
          int64_t n_rows, int64_t dropped_rows = 0);

    const TableSchema& schema() const { return schema_; }
    int64_t n_rows() const { return n_rows_; }
    int64_t dropped_rows() const { return dropped_rows_; }
    int n_numeric() const { return static_cast<int>(numeric_cols_.size()); }
    int n_categorical() const { return static_cast<int>(categorical_cols_.size()); }

    // block index -> schema column index
    const std::vector<int>& numeric_columns() const { return numeric_cols_; }
    const std::vector<int>& categorical_columns() const { return categorical_cols_; }

    double num(int64_t row, int block_col) const {
        return numeric_[static_cast<size_t>(row) * numeric_cols_.size() +
                        static_cast<size_t>(block_col)];
    }
    int32_t cat(int64_t row, int block_col) const {
        return categorical_[static_cast<size_t>(row) * categorical_cols_.size() +
                            static_cast<size_t>(block_col)];
    }

    const std::vector<double>& numeric_data() const { return numeric_; }
    const std::vector<int32_t>& categorical_data() const { return categorical_; }

    std::vector<double> numeric_column(int block_col) const;
    std::vector<int32_t> categorical_column(int block_col) const;

    // block position of a schema column inside its typed block, -1 if other kind
    int numeric_block_of(int schema_col) const;
    int categorical_block_of(int schema_col) const;

    Table select_rows(const std::vector<int64_t>& rows) const;

    void append_rows(const Table& other);  // same schema required

private:
    TableSchema schema_;
    std::vector<double> numeric_;
    std::vector<int32_t> categorical_;
    int64_t n_rows_ = 0;
    int64_t dropped_rows_ = 0;
    std::vector<int> numeric_cols_;
    std::vector<int> categorical_cols_;
};

struct SplitIndices {
    std::vector<int64_t> train;
    std::vector<int64_t> validation;
    std::vector<int64_t> test;
    uint64_t seed = 0;
};

Table load_csv(const std::string& path, const TableSchema& schema);

TableSchema infer_schema(const std::string& path, int categorical_threshold = 20);

struct SplitRatio {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

SplitIndices split(const Table& table, const SplitRatio& ratio, uint64_t seed);

// Variant for a pre-supplied test file: only train/validation come from the
// main table, the test block indexes rows [n_main, n_main + n_test).
SplitIndices split_with_external_test(int64_t n_main, int64_t n_test, double train_fraction,
                                      uint64_t seed);

void write_csv(const Table& table, const std::string& path);
std::string table_to_csv(const Table& table);

}  // namespace tabrep
