#pragma once

// Tabular reports written as JSON (canonical) or CSV (mirror), plus the
// atomic file writes every subcommand goes through.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace hac24::cli {

using Cell = std::variant<std::monostate, double, long long, std::string, bool>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
    std::size_t column(const std::string& name) const;
};

enum class Format { Json, Csv };

Format parse_format(const std::string& text);
std::string extension(Format f);

void write_json(std::ostream& out, const Table& table);
void write_csv(std::ostream& out, const Table& table);

/// Inverse of the writers. CSV cells come back as numbers when they parse
/// as one, as empty (monostate) when blank, and as strings otherwise.
Table read_json(std::istream& in);
Table read_csv(std::istream& in, std::string name = "");

/// Write through `path`.tmp and rename over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// <dir>/<table.name>.<ext>; returns the path written.
std::filesystem::path write_table(const std::filesystem::path& dir, const Table& table, Format f);

}  // namespace hac24::cli
