#include "fitkd/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fitkd {

namespace {

std::vector<std::string> column_names(const ReportRow& row) {
    std::vector<std::string> names;
    for (auto it = row.begin(); it != row.end(); ++it) names.push_back(it.key());
    return names;
}

std::string render_cell(const ReportRow& value) {
    if (value.is_number_float()) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", value.get<double>());
        return buf;
    }
    if (value.is_string()) return value.get<std::string>();
    return value.dump();
}

}  // namespace

std::string format_table(const std::vector<ReportRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("report: no rows");
    const std::vector<std::string> columns = column_names(rows[0]);
    if (columns.empty()) throw std::invalid_argument("report: rows have no columns");

    std::vector<std::vector<std::string>> cells;
    std::vector<std::vector<bool>> numeric;
    for (const ReportRow& row : rows) {
        if (!row.is_object() || column_names(row) != columns) {
            throw std::invalid_argument("report: rows disagree on the column set");
        }
        std::vector<std::string> line;
        std::vector<bool> is_num;
        for (const std::string& col : columns) {
            line.push_back(render_cell(row.at(col)));
            is_num.push_back(row.at(col).is_number());
        }
        cells.push_back(std::move(line));
        numeric.push_back(std::move(is_num));
    }

    std::vector<std::size_t> widths;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        std::size_t w = columns[c].size();
        for (const auto& line : cells) w = std::max(w, line[c].size());
        widths.push_back(w);
    }

    auto pad = [](const std::string& s, std::size_t width, bool right) {
        std::string fill(width - s.size(), ' ');
        return right ? fill + s : s + fill;
    };

    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) out += "  ";
        out += pad(columns[c], widths[c], false);
    }
    out += '\n';
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) out += "  ";
        out += std::string(widths[c], '-');
    }
    out += '\n';
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) out += "  ";
            out += pad(cells[r][c], widths[c], numeric[r][c]);
        }
        out += '\n';
    }
    return out;
}

void emit_report(const std::vector<ReportRow>& rows, const std::string& table_path,
                 const std::string& machine_path) {
    const std::string table = format_table(rows);  // validates the rows
    if (!table_path.empty()) {
        std::ofstream out(table_path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("report: cannot write " + table_path);
        out << table;
        if (!out) throw std::runtime_error("report: short write to " + table_path);
    }
    if (!machine_path.empty()) {
        std::ofstream out(machine_path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("report: cannot write " + machine_path);
        for (const ReportRow& row : rows) out << row.dump() << '\n';
        if (!out) throw std::runtime_error("report: short write to " + machine_path);
    }
}

std::vector<ReportRow> read_report(const std::string& machine_path) {
    std::ifstream in(machine_path, std::ios::binary);
    if (!in) throw std::runtime_error("report: cannot read " + machine_path);
    std::vector<ReportRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            rows.push_back(ReportRow::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error("report: " + machine_path + ":" + std::to_string(line_no) +
                                     ": " + e.what());
        }
    }
    return rows;
}

}  // namespace fitkd
