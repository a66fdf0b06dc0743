#ifndef FEDQ_DATASTORE_HPP
#define FEDQ_DATASTORE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fedq/rng.hpp"

namespace fedq {

enum class ColumnKind { Identifier, Numeric, Categorical };

struct Column {
    std::string name;
    ColumnKind kind;
    bool operator==(const Column&) const = default;
};

struct Schema {
    std::vector<Column> columns;

    bool operator==(const Schema&) const = default;
    std::optional<size_t> index_of(const std::string& name) const;
    const Column& at(size_t i) const { return columns[i]; }
    size_t width() const { return columns.size(); }

    // The shared hospital layout every provider uses.
    static Schema hospital();
};

// A cell is either a real number (numeric columns) or text.
using Cell = std::variant<double, std::string>;

std::string cell_to_string(const Cell& c);
bool cell_is_numeric(const Cell& c);
double cell_number(const Cell& c);

using Row = std::vector<Cell>;

struct Table {
    Schema schema;
    std::vector<Row> rows;

    size_t row_count() const { return rows.size(); }
    std::vector<double> numeric_column(const std::string& name) const;
};

// --- CSV ---
Table load_csv(const std::string& path, const Schema& schema);
Table parse_csv(const std::string& text, const Schema& schema);
// Parses using the header row to project `base` onto the columns present.
Table parse_csv_with_header(const std::string& text, const Schema& base);
std::string to_csv(const Table& table);
void save_csv(const Table& table, const std::string& path);
std::string format_number(double v);

// --- Queries ---
enum class QueryOp { Eq, Range, Any };

struct Query {
    std::string column;   // ignored for Any
    QueryOp op = QueryOp::Any;
    std::string value;    // Eq
    double low = 0.0;     // Range
    double high = 0.0;
    std::vector<std::string> projection;  // empty = all columns

    void validate(const Schema& schema) const;
};

Table match_query(const Table& table, const Query& query);

// --- Synthetic data ---
struct ColumnGen {
    enum class Kind { Serial, ConstantNum, UniformNum, Choice };
    Kind kind = Kind::ConstantNum;
    std::string prefix;                 // Serial
    double value = 0.0;                 // ConstantNum
    double low = 0.0, high = 0.0;       // UniformNum (integers if integral bounds)
    bool integral = true;
    std::vector<std::string> choices;   // Choice

    static ColumnGen serial(std::string prefix);
    static ColumnGen constant(double v);
    static ColumnGen uniform_int(double lo, double hi);
    static ColumnGen uniform_real(double lo, double hi);
    static ColumnGen choice(std::vector<std::string> values);
};

using GenSpec = std::map<std::string, ColumnGen>;

GenSpec default_gen_spec();
Table gen_synthetic(const Schema& schema, size_t n, uint64_t seed,
                    const GenSpec& spec = default_gen_spec());

// Digitized sample hospital tables (the two fixture databases).
Table fixture_hospital_a();
Table fixture_hospital_b();

}  // namespace fedq

#endif
