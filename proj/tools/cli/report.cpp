#include "cli/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hac24/errors.hpp"
#include "hac24/ingest.hpp"

namespace hac24::cli {

using nlohmann::json;

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw std::logic_error("table " + name + ": row has " + std::to_string(row.size()) + " cells for " +
                               std::to_string(columns.size()) + " columns");
    }
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& col) const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] == col) return j;
    }
    throw DataError("table " + name + " has no column '" + col + "'");
}

Format parse_format(const std::string& text) {
    if (text == "json") return Format::Json;
    if (text == "csv") return Format::Csv;
    throw UsageError("--format must be json or csv");
}

std::string extension(Format f) { return f == Format::Json ? "json" : "csv"; }

namespace {

json to_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return nullptr;
            } else if constexpr (std::is_same_v<T, double>) {
                if (!std::isfinite(v)) return nullptr;
                return v;
            } else {
                return v;
            }
        },
        c);
}

Cell from_json(const json& j) {
    if (j.is_null()) return std::monostate{};
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<long long>();
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw DataError("unsupported JSON cell");
}

std::string csv_text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "";
            } else if constexpr (std::is_same_v<T, double>) {
                return std::isfinite(v) ? format_number(v) : "";
            } else if constexpr (std::is_same_v<T, long long>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else {
                if (v.find_first_of(",\"\n\r") == std::string::npos) return v;
                std::string q = "\"";
                for (char ch : v) {
                    if (ch == '"') q += '"';
                    q += ch;
                }
                return q + '"';
            }
        },
        c);
}

std::vector<std::string> split_csv_line(std::istream& in, bool& ok) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false, any = false;
    char ch;
    while (in.get(ch)) {
        any = true;
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else if (ch == '\n') {
            break;
        } else if (ch != '\r') {
            field += ch;
        }
    }
    ok = any;
    out.push_back(field);
    return out;
}

Cell parse_cell(const std::string& s) {
    if (s.empty()) return std::monostate{};
    const char* first = s.data();
    const char* last = first + s.size();
    if (s.find_first_of(".eEin") == std::string::npos) {
        long long v = 0;
        const auto r = std::from_chars(first, last, v);
        if (r.ec == std::errc() && r.ptr == last) return v;
    }
    double d = 0.0;
    const auto r = std::from_chars(first, last, d);
    if (r.ec == std::errc() && r.ptr == last) return d;
    return s;
}

}  // namespace

void write_json(std::ostream& out, const Table& table) {
    json j;
    j["table"] = table.name;
    j["columns"] = table.columns;
    json rows = json::array();
    for (const auto& row : table.rows) {
        json r = json::array();
        for (const auto& c : row) r.push_back(to_json(c));
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    out << j.dump(2) << '\n';
}

void write_csv(std::ostream& out, const Table& table) {
    for (std::size_t j = 0; j < table.columns.size(); ++j) out << (j ? "," : "") << csv_text(table.columns[j]);
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << csv_text(row[j]);
        out << '\n';
    }
}

Table read_json(std::istream& in) {
    try {
        json j;
        in >> j;
        Table t;
        t.name = j.at("table").get<std::string>();
        t.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto& r : j.at("rows")) {
            std::vector<Cell> row;
            for (const auto& c : r) row.push_back(from_json(c));
            t.add(std::move(row));
        }
        return t;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed table JSON: ") + e.what());
    } catch (const std::logic_error& e) {
        throw DataError(e.what());
    }
}

Table read_csv(std::istream& in, std::string name) {
    Table t;
    t.name = std::move(name);
    bool ok = false;
    t.columns = split_csv_line(in, ok);
    if (!ok) throw DataError("empty table CSV");
    for (;;) {
        auto fields = split_csv_line(in, ok);
        if (!ok) break;
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != t.columns.size()) throw DataError("ragged table CSV row");
        std::vector<Cell> row;
        for (const auto& f : fields) row.push_back(parse_cell(f));
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::filesystem::path write_table(const std::filesystem::path& dir, const Table& table, Format f) {
    std::ostringstream s;
    if (f == Format::Json) {
        write_json(s, table);
    } else {
        write_csv(s, table);
    }
    const auto path = dir / (table.name + "." + extension(f));
    write_atomic(path, s.str());
    return path;
}

}  // namespace hac24::cli
