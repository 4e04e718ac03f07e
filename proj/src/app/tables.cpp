#include "qdecay/app/tables.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qdecay/error.hpp"

namespace qdecay::app {

OutputFormat parse_format(std::string_view name) {
    if (name == "csv") return OutputFormat::csv;
    if (name == "json") return OutputFormat::json;
    throw Error(ErrorCode::InvalidConfig, "format: expected csv or json");
}

std::string_view extension(OutputFormat format) {
    return format == OutputFormat::csv ? ".csv" : ".json";
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string render(const Cell& cell, OutputFormat format) {
    if (const auto* d = std::get_if<double>(&cell)) {
        std::string s = format_double(*d);
        if (format == OutputFormat::json && !std::isfinite(*d)) return "null";
        return s;
    }
    if (const auto* u = std::get_if<std::uint64_t>(&cell)) return std::to_string(*u);
    const auto& s = std::get<std::string>(cell);
    return format == OutputFormat::json ? nlohmann::json(s).dump() : s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

TableWriter::TableWriter(const std::filesystem::path& path, std::vector<std::string> columns, OutputFormat format)
    : path_(path), columns_(std::move(columns)), format_(format), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorCode::Io, "cannot write " + path.string());
    if (format_ == OutputFormat::csv) {
        for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
        out_ << '\n';
    } else {
        out_ << "{\"columns\":" << nlohmann::json(columns_).dump() << ",\"rows\":[";
    }
}

TableWriter::~TableWriter() {
    if (!closed_) {
        try {
            close();
        } catch (...) {
        }
    }
}

void TableWriter::row(const std::vector<Cell>& cells) {
    if (format_ == OutputFormat::csv) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << render(cells[i], format_);
        out_ << '\n';
    } else {
        out_ << (first_row_ ? "\n[" : ",\n[");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << render(cells[i], format_);
        out_ << ']';
    }
    first_row_ = false;
}

void TableWriter::close() {
    if (closed_) return;
    closed_ = true;
    if (format_ == OutputFormat::json) out_ << "\n]}\n";
    out_.close();
    if (!out_) throw Error(ErrorCode::Io, "write failed for " + path_.string());
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw Error(ErrorCode::SchemaMismatch, "missing column '" + std::string(name) + "'");
}

double Table::number(std::size_t row, std::size_t col) const {
    const std::string& s = rows.at(row).at(col);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw Error(ErrorCode::SchemaMismatch, "column '" + columns.at(col) + "' row " + std::to_string(row + 1) +
                                                   ": not a number '" + s + "'");
    }
    return v;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    Table table;
    if (path.extension() == ".json") {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
        }
        if (!doc.is_object() || !doc.contains("columns") || !doc.contains("rows")) {
            throw Error(ErrorCode::SchemaMismatch, path.string() + ": expected {columns, rows}");
        }
        table.columns = doc["columns"].get<std::vector<std::string>>();
        for (const auto& r : doc["rows"]) {
            std::vector<std::string> cells;
            for (const auto& c : r) cells.push_back(c.is_string() ? c.get<std::string>() : c.dump());
            table.rows.push_back(std::move(cells));
        }
    } else {
        std::string line;
        if (!std::getline(in, line)) throw Error(ErrorCode::SchemaMismatch, path.string() + ": empty file");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        table.columns = split_csv_line(line);
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            table.rows.push_back(split_csv_line(line));
        }
    }
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i].size() != table.columns.size()) {
            throw Error(ErrorCode::SchemaMismatch, path.string() + ": row " + std::to_string(i + 1) + " has " +
                                                       std::to_string(table.rows[i].size()) + " fields, expected " +
                                                       std::to_string(table.columns.size()));
        }
    }
    return table;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& known_schemas() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> schemas = {
        {"decay_times", {"traj_id", "t_decay"}},
        {"events", {"traj_id", "t", "kind", "occupation_before", "occupation_after"}},
        {"signal", {"traj_id", "t", "current", "sigma_x"}},
        {"fluorescence", {"bin_center", "intensity", "se", "torrey"}},
        {"drop_histogram", {"a_center", "count", "density_analytic"}},
        {"autocorrelation", {"lag", "zeta"}},
        {"spectrum", {"freq", "power"}},
        {"occupation", {"t", "mean", "se", "torrey"}},
    };
    return schemas;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    out.close();
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

} // namespace qdecay::app
