#include "tabrep/encoded.hpp"

#include <stdexcept>

namespace tabrep {

std::vector<LayoutEntry> make_layout(const TableSchema& schema, const CategoricalCodec& codec) {
    std::vector<LayoutEntry> layout;
    int offset = 0;
    for (int idx : schema.numeric_indices()) {
        layout.push_back({schema.columns[static_cast<size_t>(idx)].name, offset, 1,
                          ColumnKind::Numeric});
        ++offset;
    }
    const auto cat_cols = schema.categorical_indices();
    if (codec.cardinalities.size() != cat_cols.size())
        throw std::invalid_argument("encode: codec fitted for a different schema");
    for (size_t j = 0; j < cat_cols.size(); ++j) {
        const auto& spec = schema.columns[static_cast<size_t>(cat_cols[j])];
        if (codec.cardinalities[j] != spec.cardinality())
            throw std::invalid_argument("encode: codec cardinality mismatch on column " + spec.name);
        layout.push_back({spec.name, offset, codec.widths[j], ColumnKind::Categorical});
        offset += codec.widths[j];
    }
    return layout;
}

int encoded_width(const TableSchema& schema, const CategoricalCodec& codec) {
    return static_cast<int>(schema.numeric_indices().size()) + codec.total_width();
}

EncodedMatrix encode_table(const Table& table, const QuantileMap& qmap,
                           const CategoricalCodec& codec) {
    const auto& schema = table.schema();
    if (qmap.n_columns() != table.n_numeric())
        throw std::invalid_argument("encode: quantile map fitted for a different schema");

    EncodedMatrix m;
    m.layout = make_layout(schema, codec);
    m.d_enc = encoded_width(schema, codec);
    m.n_rows = table.n_rows();
    m.data.resize(static_cast<size_t>(m.n_rows) * static_cast<size_t>(m.d_enc));

    const int dn = table.n_numeric();
    const int dc = table.n_categorical();
    for (int64_t i = 0; i < m.n_rows; ++i) {
        double* out = m.row(i);
        for (int j = 0; j < dn; ++j) out[j] = qmap.forward(j, table.num(i, j));
        int offset = dn;
        for (int j = 0; j < dc; ++j) {
            cat_encode(codec, table.cat(i, j), codec.cardinalities[static_cast<size_t>(j)],
                       out + offset);
            offset += codec.widths[static_cast<size_t>(j)];
        }
    }
    return m;
}

Table decode_matrix(const EncodedMatrix& m, const QuantileMap& qmap,
                    const CategoricalCodec& codec, const TableSchema& schema) {
    const auto expected = make_layout(schema, codec);
    if (!m.layout.empty()) {
        if (m.layout.size() != expected.size())
            throw std::invalid_argument("decode: layout/schema mismatch");
        for (size_t i = 0; i < m.layout.size(); ++i) {
            const auto& a = m.layout[i];
            const auto& b = expected[i];
            if (a.name != b.name || a.offset != b.offset || a.width != b.width || a.kind != b.kind)
                throw std::invalid_argument("decode: layout/schema mismatch at column " + a.name);
        }
    }
    if (m.d_enc != encoded_width(schema, codec))
        throw std::invalid_argument("decode: matrix width does not match schema");
    if (qmap.n_columns() != static_cast<int>(schema.numeric_indices().size()))
        throw std::invalid_argument("decode: quantile map fitted for a different schema");

    const int dn = qmap.n_columns();
    const int dc = static_cast<int>(codec.cardinalities.size());
    std::vector<double> numeric(static_cast<size_t>(m.n_rows) * static_cast<size_t>(dn));
    std::vector<int32_t> categorical(static_cast<size_t>(m.n_rows) * static_cast<size_t>(dc));
    for (int64_t i = 0; i < m.n_rows; ++i) {
        const double* in = m.row(i);
        for (int j = 0; j < dn; ++j)
            numeric[static_cast<size_t>(i) * static_cast<size_t>(dn) + static_cast<size_t>(j)] =
                qmap.inverse(j, in[j]);
        int offset = dn;
        for (int j = 0; j < dc; ++j) {
            categorical[static_cast<size_t>(i) * static_cast<size_t>(dc) +
                        static_cast<size_t>(j)] =
                cat_decode(codec, in + offset, codec.cardinalities[static_cast<size_t>(j)]);
            offset += codec.widths[static_cast<size_t>(j)];
        }
    }
    return Table(schema, std::move(numeric), std::move(categorical), m.n_rows);
}

std::vector<double> ooi_rate(const EncodedMatrix& m, const CategoricalCodec& codec) {
    const int dc = static_cast<int>(codec.cardinalities.size());
    std::vector<double> rates(static_cast<size_t>(dc), 0.0);
    if (m.n_rows == 0) return rates;
    int numeric_width = m.d_enc - codec.total_width();
    for (int64_t i = 0; i < m.n_rows; ++i) {
        const double* in = m.row(i);
        int offset = numeric_width;
        for (int j = 0; j < dc; ++j) {
            bool ooi = false;
            cat_decode(codec, in + offset, codec.cardinalities[static_cast<size_t>(j)], &ooi);
            if (ooi) rates[static_cast<size_t>(j)] += 1.0;
            offset += codec.widths[static_cast<size_t>(j)];
        }
    }
    for (auto& r : rates) r /= static_cast<double>(m.n_rows);
    return rates;
}

}  // namespace tabrep
