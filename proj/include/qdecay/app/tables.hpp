#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qdecay::app {

enum class OutputFormat { csv, json };

OutputFormat parse_format(std::string_view name);
std::string_view extension(OutputFormat format);

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

using Cell = std::variant<double, std::uint64_t, std::string>;

// Streams a table either as CSV (header line + rows) or as a JSON object
// {"columns": [...], "rows": [[...], ...]}.
class TableWriter {
public:
    TableWriter(const std::filesystem::path& path, std::vector<std::string> columns, OutputFormat format);
    ~TableWriter();

    TableWriter(const TableWriter&) = delete;
    TableWriter& operator=(const TableWriter&) = delete;

    void row(const std::vector<Cell>& cells);
    // Flushes, closes and throws Error(Io) if any write failed.
    void close();

private:
    std::filesystem::path path_;
    std::vector<std::string> columns_;
    OutputFormat format_;
    std::ofstream out_;
    bool first_row_ = true;
    bool closed_ = false;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
    double number(std::size_t row, std::size_t col) const;
};

// Reads a table written by TableWriter (format chosen by file extension).
Table read_table(const std::filesystem::path& path);

// Canonical column lists of every file the CLI writes, keyed by file stem.
const std::vector<std::pair<std::string, std::vector<std::string>>>& known_schemas();

void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace qdecay::app
