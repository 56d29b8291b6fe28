// report.hpp: tabular reports with CSV and JSON emitters
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tfperf/config_io.hpp"

namespace tfperf {

inline constexpr std::string_view kSchemaVersion = "1";

using Cell = std::variant<std::int64_t, double, std::string>;

struct Report {
    std::string schema_version{kSchemaVersion};
    std::string generated_by;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    /// Throws ConfigError on a row whose width differs from columns.
    void add(std::vector<Cell> row);
    bool operator==(const Report&) const = default;
};

enum class Format { Csv, Json };

Format format_from_string(std::string_view s);

/// Shortest round-trip decimal, '.' separator, no locale.
std::string format_number(double v);

/// Header line then one line per row; fields holding ',', '"' or a newline
/// are quoted with doubled quotes.
void emit_csv(const Report& r, std::ostream& os);
std::string to_csv(const Report& r);

/// {"schema_version", "generated_by", "columns", "rows": [[...], ...]}.
Json to_json(const Report& r);
Report report_from_json(const Json& j);

/// path "-" writes to stdout. Throws IoError when the file cannot be written.
void emit(const Report& r, Format f, const std::string& path);

/// Minimal RFC 4180 reader, used to check emitted files.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace tfperf
