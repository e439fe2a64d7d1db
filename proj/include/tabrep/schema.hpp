#pragma once

#include <string>
#include <vector>

namespace tabrep {

enum class ColumnKind { Numeric, Categorical };

enum class TaskKind { BinaryClassification, MulticlassClassification, Regression };

std::string to_string(ColumnKind k);
std::string to_string(TaskKind k);
ColumnKind column_kind_from_string(const std::string& s);
TaskKind task_kind_from_string(const std::string& s);

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    // categorical only; sorted lexicographically, index = position
    std::vector<std::string> vocabulary;

    int cardinality() const { return static_cast<int>(vocabulary.size()); }
};

struct TableSchema {
    std::vector<ColumnSpec> columns;
    std::string target_name;
    TaskKind task = TaskKind::BinaryClassification;

    // throws std::invalid_argument on any violated invariant
    void validate() const;

    int column_index(const std::string& name) const;  // -1 when absent
    const ColumnSpec& column(const std::string& name) const;
    const ColumnSpec& target_column() const { return column(target_name); }

    std::vector<int> numeric_indices() const;
    std::vector<int> categorical_indices() const;

    std::string to_json() const;
    static TableSchema from_json(const std::string& text);
    static TableSchema load(const std::string& path);
    void save(const std::string& path) const;

    bool operator==(const TableSchema&) const = default;
};

bool operator==(const ColumnSpec& a, const ColumnSpec& b);

}  // namespace tabrep
