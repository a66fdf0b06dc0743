#include "fedq/datastore.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fedq/errors.hpp"

namespace fedq {

std::optional<size_t> Schema::index_of(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return i;
    }
    return std::nullopt;
}

Schema Schema::hospital() {
    return Schema{{
        {"sno", ColumnKind::Identifier},
        {"personid", ColumnKind::Identifier},
        {"zipcode", ColumnKind::Numeric},
        {"diseasename", ColumnKind::Categorical},
        {"age", ColumnKind::Numeric},
        {"medicine", ColumnKind::Categorical},
    }};
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string cell_to_string(const Cell& c) {
    if (auto* d = std::get_if<double>(&c)) return format_number(*d);
    return std::get<std::string>(c);
}

bool cell_is_numeric(const Cell& c) { return std::holds_alternative<double>(c); }

double cell_number(const Cell& c) { return std::get<double>(c); }

std::vector<double> Table::numeric_column(const std::string& name) const {
    auto idx = schema.index_of(name);
    if (!idx) throw UnknownColumn(name);
    if (schema.at(*idx).kind != ColumnKind::Numeric) {
        throw UnknownColumn(name + " is not numeric");
    }
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(cell_number(r[*idx]));
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    out.push_back(field);
    return out;
}

Cell parse_cell(const std::string& text, const Column& col, size_t row, size_t col_idx) {
    if (col.kind != ColumnKind::Numeric) return text;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("row " + std::to_string(row) + ", column " +
                         std::to_string(col_idx) + " (" + col.name +
                         "): cannot parse '" + text + "' as a number");
    }
    return v;
}

Table parse_csv_impl(const std::string& text, const Schema& schema, bool header_projects) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw HeaderMismatch("empty input");
    auto header = split_line(line);

    Schema effective;
    if (header_projects) {
        for (const auto& name : header) {
            auto idx = schema.index_of(name);
            if (!idx) throw HeaderMismatch("unknown column '" + name + "'");
            effective.columns.push_back(schema.at(*idx));
        }
    } else {
        if (header.size() != schema.width()) {
            throw HeaderMismatch("expected " + std::to_string(schema.width()) +
                                 " columns, got " + std::to_string(header.size()));
        }
        for (size_t i = 0; i < header.size(); ++i) {
            if (header[i] != schema.at(i).name) {
                throw HeaderMismatch("column " + std::to_string(i) + " is '" +
                                     header[i] + "', expected '" + schema.at(i).name + "'");
            }
        }
        effective = schema;
    }

    Table table{effective, {}};
    size_t row_no = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row_no;
        auto fields = split_line(line);
        if (fields.size() != effective.width()) {
            throw ParseError("row " + std::to_string(row_no) + ": expected " +
                             std::to_string(effective.width()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        Row row;
        row.reserve(fields.size());
        for (size_t i = 0; i < fields.size(); ++i) {
            row.push_back(parse_cell(fields[i], effective.at(i), row_no, i));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace

Table parse_csv(const std::string& text, const Schema& schema) {
    return parse_csv_impl(text, schema, false);
}

Table parse_csv_with_header(const std::string& text, const Schema& base) {
    return parse_csv_impl(text, base, true);
}

Table load_csv(const std::string& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), schema);
}

std::string to_csv(const Table& table) {
    std::string out;
    for (size_t i = 0; i < table.schema.width(); ++i) {
        if (i) out.push_back(',');
        out += table.schema.at(i).name;
    }
    out.push_back('\n');
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(',');
            out += cell_to_string(row[i]);
        }
        out.push_back('\n');
    }
    return out;
}

void save_csv(const Table& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << to_csv(table);
}

void Query::validate(const Schema& schema) const {
    if (op == QueryOp::Any) {
        // column irrelevant
    } else {
        auto idx = schema.index_of(column);
        if (!idx) throw UnknownColumn(column);
        if (op == QueryOp::Range) {
            if (schema.at(*idx).kind != ColumnKind::Numeric) {
                throw UnknownColumn(column + " is not numeric; range requires numeric");
            }
            if (low > high) throw UnknownColumn("range low > high");
        }
    }
    for (const auto& p : projection) {
        if (!schema.index_of(p)) throw UnknownColumn(p);
    }
}

Table match_query(const Table& table, const Query& query) {
    query.validate(table.schema);

    std::vector<size_t> keep_cols;
    if (query.projection.empty()) {
        for (size_t i = 0; i < table.schema.width(); ++i) keep_cols.push_back(i);
    } else {
        for (const auto& name : query.projection) {
            keep_cols.push_back(*table.schema.index_of(name));
        }
    }

    Schema out_schema;
    for (size_t i : keep_cols) out_schema.columns.push_back(table.schema.at(i));
    Table out{out_schema, {}};

    size_t col = 0;
    if (query.op != QueryOp::Any) col = *table.schema.index_of(query.column);

    for (const auto& row : table.rows) {
        bool match = true;
        switch (query.op) {
            case QueryOp::Any:
                break;
            case QueryOp::Eq:
                if (cell_is_numeric(row[col])) {
                    double v = 0.0;
                    auto [p, ec] = std::from_chars(
                        query.value.data(), query.value.data() + query.value.size(), v);
                    match = ec == std::errc() && cell_number(row[col]) == v;
                } else {
                    match = std::get<std::string>(row[col]) == query.value;
                }
                break;
            case QueryOp::Range: {
                double v = cell_number(row[col]);
                match = v >= query.low && v <= query.high;
                break;
            }
        }
        if (!match) continue;
        Row projected;
        projected.reserve(keep_cols.size());
        for (size_t i : keep_cols) projected.push_back(row[i]);
        out.rows.push_back(std::move(projected));
    }
    return out;
}

ColumnGen ColumnGen::serial(std::string prefix) {
    ColumnGen g;
    g.kind = Kind::Serial;
    g.prefix = std::move(prefix);
    return g;
}

ColumnGen ColumnGen::constant(double v) {
    ColumnGen g;
    g.kind = Kind::ConstantNum;
    g.value = v;
    return g;
}

ColumnGen ColumnGen::uniform_int(double lo, double hi) {
    ColumnGen g;
    g.kind = Kind::UniformNum;
    g.low = lo;
    g.high = hi;
    g.integral = true;
    return g;
}

ColumnGen ColumnGen::uniform_real(double lo, double hi) {
    ColumnGen g;
    g.kind = Kind::UniformNum;
    g.low = lo;
    g.high = hi;
    g.integral = false;
    return g;
}

ColumnGen ColumnGen::choice(std::vector<std::string> values) {
    ColumnGen g;
    g.kind = Kind::Choice;
    g.choices = std::move(values);
    return g;
}

GenSpec default_gen_spec() {
    return GenSpec{
        {"sno", ColumnGen::serial("g")},
        {"personid", ColumnGen::serial("q")},
        {"zipcode", ColumnGen::uniform_int(500000, 599999)},
        {"diseasename",
         ColumnGen::choice({"Swine flu", "Diabetis", "Epistaxis", "Hayfever",
                            "Urticaria", "Melasma", "Acne", "Chicken pox"})},
        {"age", ColumnGen::uniform_int(20, 80)},
        {"medicine",
         ColumnGen::choice({"Tami flu", "Glycheck", "Nasivion", "Foristal",
                            "Benadryl softgel", "Cetraben", "Benzoyl peroxide",
                            "Daivonex"})},
    };
}

Table gen_synthetic(const Schema& schema, size_t n, uint64_t seed, const GenSpec& spec) {
    for (const auto& [name, gen] : spec) {
        if (!schema.index_of(name)) throw UnknownColumn(name);
    }
    SeededRng rng(seed);
    Table table{schema, {}};
    table.rows.reserve(n);
    for (size_t r = 0; r < n; ++r) {
        Row row;
        row.reserve(schema.width());
        for (const auto& col : schema.columns) {
            auto it = spec.find(col.name);
            if (it == spec.end()) {
                row.push_back(col.kind == ColumnKind::Numeric ? Cell{0.0} : Cell{std::string{}});
                continue;
            }
            const auto& g = it->second;
            switch (g.kind) {
                case ColumnGen::Kind::Serial:
                    row.push_back(g.prefix + std::to_string(r + 1));
                    break;
                case ColumnGen::Kind::ConstantNum:
                    row.push_back(g.value);
                    break;
                case ColumnGen::Kind::UniformNum:
                    if (g.integral) {
                        auto span = static_cast<uint64_t>(g.high - g.low) + 1;
                        row.push_back(g.low + static_cast<double>(rng.below(span)));
                    } else {
                        row.push_back(rng.uniform(g.low, g.high));
                    }
                    break;
                case ColumnGen::Kind::Choice:
                    row.push_back(g.choices[rng.below(g.choices.size())]);
                    break;
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {
// The trailing "*,0,0,...,0" line in the figures is a rendering artifact and
// is not part of either fixture.
const char* kHospitalA =
    "sno,personid,zipcode,diseasename,age,medicine\n"
    "1,p1,506001,Swine flu,30,Tami flu\n"
    "2,p2,506143,Diabetis,40,Glycheck\n"
    "3,p3,507198,Epistaxis,45,Nasivion\n"
    "4,p4,512672,Otitis externa,38,Betnor eye-ear drops\n"
    "5,p5,584965,Acute conjunctivitis,67,Ciprocent\n"
    "6,p6,578787,Retinal detachment,56,Visine eye drops\n"
    "7,p7,587729,Sjogrens syndrome,23,Nova vizol\n"
    "8,p8,581768,Urticaria,78,Benadryl softgel\n"
    "9,p9,583898,Hayfever,34,Foristal\n"
    "10,p10,587389,Melasma,65,Cetraben\n";

const char* kHospitalB =
    "sno,personid,zipcode,diseasename,age,medicine\n"
    "s1,,587899,Tineacapitis,67,Crotorax\n"
    "s2,,565778,Headlice,76,Exifime\n"
    "s3,,578789,Dandruff,23,Tetmosol soap\n"
    "s4,,578787,Chicken pox,54,Daivonex\n"
    "s5,,521287,Acne,45,Benzoyl peroxide\n"
    "s6,,578878,Seleroderma,49,Masse ceram\n"
    "s7,,527683,Hyper trichosis,24,Biotrexate\n"
    "s8,,587898,Hodgkins,29,Cytocristin\n"
    "s9,,523898,Mesothelioma,26,Desferal\n"
    "s10,,532883,Constipation,67,Cremaffin\n";
}  // namespace

Table fixture_hospital_a() { return parse_csv(kHospitalA, Schema::hospital()); }
Table fixture_hospital_b() { return parse_csv(kHospitalB, Schema::hospital()); }

}  // namespace fedq
