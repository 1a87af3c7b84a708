#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace fitkd {

// A report row is an ordered column → value object; every row in a report
// must carry the same columns in the same order.
using ReportRow = nlohmann::ordered_json;

// Aligned plain-text rendering: header line, rule, one line per row.
// Floating-point cells print as %.6f and right-aligned; integers
// right-aligned; strings left-aligned. Byte-deterministic given the rows.
std::string format_table(const std::vector<ReportRow>& rows);

// Writes the text table to `table_path` and one JSON object per line to
// `machine_path` (either may be empty to skip that output).
void emit_report(const std::vector<ReportRow>& rows, const std::string& table_path,
                 const std::string& machine_path);

// Inverse of the machine file; parse errors name the path and line.
std::vector<ReportRow> read_report(const std::string& machine_path);

}  // namespace fitkd
