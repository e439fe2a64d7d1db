#include "tabrep/schema.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tabrep/io.hpp"

namespace tabrep {

using ordered_json = nlohmann::ordered_json;

std::string to_string(ColumnKind k) {
    return k == ColumnKind::Numeric ? "numeric" : "categorical";
}

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::BinaryClassification: return "binary-classification";
        case TaskKind::MulticlassClassification: return "multiclass-classification";
        case TaskKind::Regression: return "regression";
    }
    return "binary-classification";
}

ColumnKind column_kind_from_string(const std::string& s) {
    if (s == "numeric") return ColumnKind::Numeric;
    if (s == "categorical") return ColumnKind::Categorical;
    throw std::invalid_argument("schema: unknown column kind: " + s);
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "binary-classification") return TaskKind::BinaryClassification;
    if (s == "multiclass-classification") return TaskKind::MulticlassClassification;
    if (s == "regression") return TaskKind::Regression;
    throw std::invalid_argument("schema: unknown task kind: " + s);
}

bool operator==(const ColumnSpec& a, const ColumnSpec& b) {
    return a.name == b.name && a.kind == b.kind && a.vocabulary == b.vocabulary;
}

void TableSchema::validate() const {
    std::set<std::string> names;
    for (const auto& c : columns) {
        if (c.name.empty()) throw std::invalid_argument("schema: empty column name");
        if (!names.insert(c.name).second)
            throw std::invalid_argument("schema: duplicate column name: " + c.name);
        if (c.kind == ColumnKind::Categorical) {
            if (c.vocabulary.size() < 2)
                throw std::invalid_argument("schema: categorical column '" + c.name +
                                            "' needs at least 2 categories");
            for (size_t i = 0; i + 1 < c.vocabulary.size(); ++i) {
                if (!(c.vocabulary[i] < c.vocabulary[i + 1]))
                    throw std::invalid_argument("schema: vocabulary of '" + c.name +
                                                "' not sorted or has duplicates");
            }
        } else if (!c.vocabulary.empty()) {
            throw std::invalid_argument("schema: numeric column '" + c.name +
                                        "' must not carry a vocabulary");
        }
    }
    if (column_index(target_name) < 0)
        throw std::invalid_argument("schema: target column '" + target_name + "' not found");
}

int TableSchema::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return static_cast<int>(i);
    return -1;
}

const ColumnSpec& TableSchema::column(const std::string& name) const {
    const int i = column_index(name);
    if (i < 0) throw std::invalid_argument("schema: no such column: " + name);
    return columns[static_cast<size_t>(i)];
}

std::vector<int> TableSchema::numeric_indices() const {
    std::vector<int> out;
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].kind == ColumnKind::Numeric) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> TableSchema::categorical_indices() const {
    std::vector<int> out;
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].kind == ColumnKind::Categorical) out.push_back(static_cast<int>(i));
    return out;
}

std::string TableSchema::to_json() const {
    ordered_json j;
    j["columns"] = ordered_json::array();
    for (const auto& c : columns) {
        ordered_json jc;
        jc["name"] = c.name;
        jc["kind"] = to_string(c.kind);
        if (c.kind == ColumnKind::Categorical) jc["vocabulary"] = c.vocabulary;
        j["columns"].push_back(jc);
    }
    j["target"] = {{"name", target_name}, {"task", to_string(task)}};
    return j.dump(2) + "\n";
}

TableSchema TableSchema::from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    TableSchema s;
    for (const auto& jc : j.at("columns")) {
        ColumnSpec c;
        c.name = jc.at("name").get<std::string>();
        c.kind = column_kind_from_string(jc.at("kind").get<std::string>());
        if (jc.contains("vocabulary"))
            c.vocabulary = jc.at("vocabulary").get<std::vector<std::string>>();
        s.columns.push_back(std::move(c));
    }
    s.target_name = j.at("target").at("name").get<std::string>();
    s.task = task_kind_from_string(j.at("target").at("task").get<std::string>());
    s.validate();
    return s;
}

TableSchema TableSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("schema: cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

void TableSchema::save(const std::string& path) const {
    atomic_write_file(path, to_json());
}

}  // namespace tabrep
