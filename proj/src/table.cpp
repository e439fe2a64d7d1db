#include "tabrep/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tabrep/csv.hpp"
#include "tabrep/io.hpp"
#include "tabrep/rng.hpp"

namespace tabrep {

namespace {

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end != begin + s.size()) return false;
    return std::isfinite(out);
}

bool is_missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "N/A" || s == "nan" || s == "NaN" || s == "?";
}

}  // namespace

Table::Table(TableSchema schema, std::vector<double> numeric, std::vector<int32_t> categorical,
             int64_t n_rows, int64_t dropped_rows)
    : schema_(std::move(schema)),
      numeric_(std::move(numeric)),
      categorical_(std::move(categorical)),
      n_rows_(n_rows),
      dropped_rows_(dropped_rows) {
    schema_.validate();
    numeric_cols_ = schema_.numeric_indices();
    categorical_cols_ = schema_.categorical_indices();
    if (numeric_.size() != static_cast<size_t>(n_rows_) * numeric_cols_.size())
        throw std::invalid_argument("table: numeric block size mismatch");
    if (categorical_.size() != static_cast<size_t>(n_rows_) * categorical_cols_.size())
        throw std::invalid_argument("table: categorical block size mismatch");
    for (size_t j = 0; j < categorical_cols_.size(); ++j) {
        const int k = schema_.columns[static_cast<size_t>(categorical_cols_[j])].cardinality();
        for (int64_t i = 0; i < n_rows_; ++i) {
            const int32_t c = cat(i, static_cast<int>(j));
            if (c < 0 || c >= k)
                throw std::invalid_argument("table: category index out of range in column " +
                                            schema_.columns[static_cast<size_t>(categorical_cols_[j])].name);
        }
    }
    for (double v : numeric_)
        if (!std::isfinite(v)) throw std::invalid_argument("table: non-finite numeric cell");
}

std::vector<double> Table::numeric_column(int block_col) const {
    std::vector<double> out(static_cast<size_t>(n_rows_));
    for (int64_t i = 0; i < n_rows_; ++i) out[static_cast<size_t>(i)] = num(i, block_col);
    return out;
}

std::vector<int32_t> Table::categorical_column(int block_col) const {
    std::vector<int32_t> out(static_cast<size_t>(n_rows_));
    for (int64_t i = 0; i < n_rows_; ++i) out[static_cast<size_t>(i)] = cat(i, block_col);
    return out;
}

int Table::numeric_block_of(int schema_col) const {
    for (size_t j = 0; j < numeric_cols_.size(); ++j)
        if (numeric_cols_[j] == schema_col) return static_cast<int>(j);
    return -1;
}

int Table::categorical_block_of(int schema_col) const {
    for (size_t j = 0; j < categorical_cols_.size(); ++j)
        if (categorical_cols_[j] == schema_col) return static_cast<int>(j);
    return -1;
}

Table Table::select_rows(const std::vector<int64_t>& rows) const {
    const size_t dn = numeric_cols_.size();
    const size_t dc = categorical_cols_.size();
    std::vector<double> numeric(rows.size() * dn);
    std::vector<int32_t> categorical(rows.size() * dc);
    for (size_t r = 0; r < rows.size(); ++r) {
        const int64_t src = rows[r];
        if (src < 0 || src >= n_rows_) throw std::out_of_range("table: row index out of range");
        std::copy_n(numeric_.begin() + static_cast<int64_t>(dn) * src, dn,
                    numeric.begin() + static_cast<int64_t>(dn * r));
        std::copy_n(categorical_.begin() + static_cast<int64_t>(dc) * src, dc,
                    categorical.begin() + static_cast<int64_t>(dc * r));
    }
    return Table(schema_, std::move(numeric), std::move(categorical),
                 static_cast<int64_t>(rows.size()));
}

void Table::append_rows(const Table& other) {
    if (!(other.schema_ == schema_)) throw std::invalid_argument("table: schema mismatch on append");
    numeric_.insert(numeric_.end(), other.numeric_.begin(), other.numeric_.end());
    categorical_.insert(categorical_.end(), other.categorical_.begin(), other.categorical_.end());
    n_rows_ += other.n_rows_;
}

Table load_csv(const std::string& path, const TableSchema& schema) {
    schema.validate();
    const auto rows = read_csv_file(path);
    if (rows.empty()) throw std::runtime_error("load_csv: empty file: " + path);

    const auto& header = rows.front();
    const size_t n_cols = schema.columns.size();
    if (header.size() != n_cols)
        throw std::runtime_error("load_csv: header has " + std::to_string(header.size()) +
                                 " columns, schema expects " + std::to_string(n_cols));
    // order-insensitive header match
    std::vector<int> src_of(n_cols, -1);
    for (size_t j = 0; j < n_cols; ++j) {
        for (size_t h = 0; h < header.size(); ++h) {
            if (header[h] == schema.columns[j].name) {
                src_of[j] = static_cast<int>(h);
                break;
            }
        }
        if (src_of[j] < 0)
            throw std::runtime_error("load_csv: header is missing column '" +
                                     schema.columns[j].name + "'");
    }

    const auto numeric_cols = schema.numeric_indices();
    const auto categorical_cols = schema.categorical_indices();

    std::vector<double> numeric;
    std::vector<int32_t> categorical;
    int64_t kept = 0, dropped = 0;
    std::map<std::string, std::set<std::string>> unseen;  // column -> offending values

    std::vector<double> num_row(numeric_cols.size());
    std::vector<int32_t> cat_row(categorical_cols.size());
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() == 1 && cells[0].empty()) continue;  // trailing blank line
        if (cells.size() != header.size())
            throw std::runtime_error("load_csv: row " + std::to_string(r) + " has " +
                                     std::to_string(cells.size()) + " fields, expected " +
                                     std::to_string(header.size()));
        bool drop = false;
        for (size_t b = 0; b < numeric_cols.size() && !drop; ++b) {
            const auto& cell = cells[static_cast<size_t>(src_of[static_cast<size_t>(numeric_cols[b])])];
            double v;
            if (is_missing(cell) || !parse_double(cell, v))
                drop = true;
            else
                num_row[b] = v;
        }
        for (size_t b = 0; b < categorical_cols.size() && !drop; ++b) {
            const auto& spec = schema.columns[static_cast<size_t>(categorical_cols[b])];
            const auto& cell = cells[static_cast<size_t>(src_of[static_cast<size_t>(categorical_cols[b])])];
            if (is_missing(cell)) {
                drop = true;
                break;
            }
            const auto it = std::lower_bound(spec.vocabulary.begin(), spec.vocabulary.end(), cell);
            if (it == spec.vocabulary.end() || *it != cell) {
                unseen[spec.name].insert(cell);
                drop = true;  // row is unusable either way; error raised below
            } else {
                cat_row[b] = static_cast<int32_t>(it - spec.vocabulary.begin());
            }
        }
        if (drop) {
            ++dropped;
            continue;
        }
        numeric.insert(numeric.end(), num_row.begin(), num_row.end());
        categorical.insert(categorical.end(), cat_row.begin(), cat_row.end());
        ++kept;
    }

    if (!unseen.empty()) {
        std::ostringstream msg;
        msg << "load_csv: categories not in vocabulary:";
        for (const auto& [col, values] : unseen) {
            msg << " " << col << "={";
            bool first = true;
            for (const auto& v : values) {
                if (!first) msg << ",";
                msg << "\"" << v << "\"";
                first = false;
            }
            msg << "}";
        }
        throw std::runtime_error(msg.str());
    }
    if (kept == 0) throw std::runtime_error("load_csv: empty table after cleaning: " + path);

    return Table(schema, std::move(numeric), std::move(categorical), kept, dropped);
}

TableSchema infer_schema(const std::string& path, int categorical_threshold) {
    const auto rows = read_csv_file(path);
    if (rows.empty() || (rows.size() == 1 && rows[0].size() == 1 && rows[0][0].empty()))
        throw std::runtime_error("infer_schema: empty file: " + path);
    if (rows.size() < 2) throw std::runtime_error("infer_schema: no data rows in " + path);

    const auto& header = rows.front();
    TableSchema schema;
    for (size_t j = 0; j < header.size(); ++j) {
        std::set<std::string> distinct;
        bool all_numeric = true;
        int64_t present = 0;
        for (size_t r = 1; r < rows.size(); ++r) {
            if (rows[r].size() == 1 && rows[r][0].empty()) continue;
            if (rows[r].size() != header.size())
                throw std::runtime_error("infer_schema: ragged row " + std::to_string(r));
            const auto& cell = rows[r][j];
            if (is_missing(cell)) continue;
            ++present;
            distinct.insert(cell);
            double v;
            if (!parse_double(cell, v)) all_numeric = false;
        }
        if (present == 0)
            throw std::runtime_error("infer_schema: column '" + header[j] + "' has no values");

        ColumnSpec spec;
        spec.name = header[j];
        if (all_numeric && static_cast<int64_t>(distinct.size()) > categorical_threshold) {
            spec.kind = ColumnKind::Numeric;
        } else {
            if (distinct.size() < 2)
                throw std::runtime_error("infer_schema: column '" + header[j] +
                                         "' has a single distinct value");
            spec.kind = ColumnKind::Categorical;
            spec.vocabulary.assign(distinct.begin(), distinct.end());  // set is sorted
        }
        schema.columns.push_back(std::move(spec));
    }

    const auto& last = schema.columns.back();
    schema.target_name = last.name;
    if (last.kind == ColumnKind::Numeric)
        schema.task = TaskKind::Regression;
    else
        schema.task = last.cardinality() == 2 ? TaskKind::BinaryClassification
                                              : TaskKind::MulticlassClassification;
    schema.validate();
    return schema;
}

SplitIndices split(const Table& table, const SplitRatio& ratio, uint64_t seed) {
    const int64_t n = table.n_rows();
    if (n < 10) throw std::invalid_argument("split: need at least 10 rows");
    if (ratio.train <= 0 || ratio.validation <= 0 || ratio.test <= 0)
        throw std::invalid_argument("split: ratios must be positive");
    const double sum = ratio.train + ratio.validation + ratio.test;
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split: ratios must sum to 1");

    std::vector<int64_t> order(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    deterministic_shuffle(order, seed, /*stream=*/17);

    const int64_t n_train = std::llround(static_cast<double>(n) * ratio.train);
    const int64_t n_val = std::llround(static_cast<double>(n) * ratio.validation);
    const int64_t n_test = n - n_train - n_val;
    if (n_train < 1 || n_val < 1 || n_test < 1)
        throw std::invalid_argument("split: a block would be empty at this ratio");

    SplitIndices out;
    out.seed = seed;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    out.test.assign(order.begin() + n_train + n_val, order.end());
    return out;
}

SplitIndices split_with_external_test(int64_t n_main, int64_t n_test, double train_fraction,
                                      uint64_t seed) {
    if (n_main < 2 || n_test < 1)
        throw std::invalid_argument("split: main and test tables must be non-empty");
    if (train_fraction <= 0 || train_fraction >= 1)
        throw std::invalid_argument("split: train fraction must be in (0,1)");
    std::vector<int64_t> order(static_cast<size_t>(n_main));
    for (int64_t i = 0; i < n_main; ++i) order[static_cast<size_t>(i)] = i;
    deterministic_shuffle(order, seed, /*stream=*/17);
    const int64_t n_train = std::max<int64_t>(
        1, std::min<int64_t>(n_main - 1, std::llround(static_cast<double>(n_main) * train_fraction)));
    SplitIndices out;
    out.seed = seed;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.validation.assign(order.begin() + n_train, order.end());
    out.test.resize(static_cast<size_t>(n_test));
    for (int64_t i = 0; i < n_test; ++i) out.test[static_cast<size_t>(i)] = n_main + i;
    return out;
}

std::string table_to_csv(const Table& table) {
    const auto& schema = table.schema();
    std::string out;
    std::vector<std::string> fields;
    for (const auto& c : schema.columns) fields.push_back(c.name);
    out += csv_join_row(fields);

    for (int64_t i = 0; i < table.n_rows(); ++i) {
        fields.clear();
        int nb = 0, cb = 0;
        for (const auto& c : schema.columns) {
            if (c.kind == ColumnKind::Numeric)
                fields.push_back(format_double(table.num(i, nb++)));
            else
                fields.push_back(c.vocabulary[static_cast<size_t>(table.cat(i, cb++))]);
        }
        out += csv_join_row(fields);
    }
    return out;
}

void write_csv(const Table& table, const std::string& path) {
    atomic_write_file(path, table_to_csv(table));
}

}  // namespace tabrep
