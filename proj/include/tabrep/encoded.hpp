#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabrep/codec.hpp"
#include "tabrep/quantile.hpp"
#include "tabrep/table.hpp"

namespace tabrep {

struct LayoutEntry {
    std::string name;
    int offset = 0;
    int width = 1;
    ColumnKind kind = ColumnKind::Numeric;
};

// Row-major matrix in the unified continuous space, numeric block first,
// categorical blocks after, tiling [0, d_enc) exactly.
struct EncodedMatrix {
    int64_t n_rows = 0;
    int d_enc = 0;
    std::vector<double> data;
    std::vector<LayoutEntry> layout;

    double at(int64_t row, int col) const {
        return data[static_cast<size_t>(row) * static_cast<size_t>(d_enc) +
                    static_cast<size_t>(col)];
    }
    double& at(int64_t row, int col) {
        return data[static_cast<size_t>(row) * static_cast<size_t>(d_enc) +
                    static_cast<size_t>(col)];
    }
    const double* row(int64_t r) const {
        return data.data() + static_cast<size_t>(r) * static_cast<size_t>(d_enc);
    }
    double* row(int64_t r) {
        return data.data() + static_cast<size_t>(r) * static_cast<size_t>(d_enc);
    }
};

std::vector<LayoutEntry> make_layout(const TableSchema& schema, const CategoricalCodec& codec);

int encoded_width(const TableSchema& schema, const CategoricalCodec& codec);

EncodedMatrix encode_table(const Table& table, const QuantileMap& qmap,
                           const CategoricalCodec& codec);

Table decode_matrix(const EncodedMatrix& m, const QuantileMap& qmap,
                    const CategoricalCodec& codec, const TableSchema& schema);

// Fraction of cells per categorical block column whose decode fired the
// out-of-index cast.
std::vector<double> ooi_rate(const EncodedMatrix& m, const CategoricalCodec& codec);

}  // namespace tabrep
