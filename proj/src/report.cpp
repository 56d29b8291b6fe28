#include "tfperf/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tfperf/error.hpp"

namespace tfperf {

void Report::add(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw ConfigError("report row has " + std::to_string(row.size()) + " fields, expected " +
                          std::to_string(columns.size()));
    rows.push_back(std::move(row));
}

Format format_from_string(std::string_view s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    throw ConfigError("unknown format '" + std::string(s) + "' (expected csv|json)");
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string cell_text(const Cell& c) {
    if (auto i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    if (auto d = std::get_if<double>(&c)) return format_number(*d);
    return quote(std::get<std::string>(c));
}

}  // namespace

void emit_csv(const Report& r, std::ostream& os) {
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << quote(r.columns[i]);
    os << '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
        os << '\n';
    }
}

std::string to_csv(const Report& r) {
    std::ostringstream os;
    emit_csv(r, os);
    return os.str();
}

Json to_json(const Report& r) {
    Json rows = Json::array();
    for (const auto& row : r.rows) {
        Json jr = Json::array();
        for (const auto& c : row) std::visit([&](const auto& v) { jr.push_back(v); }, c);
        rows.push_back(std::move(jr));
    }
    return Json{{"schema_version", r.schema_version},
                {"generated_by", r.generated_by},
                {"columns", r.columns},
                {"rows", std::move(rows)}};
}

Report report_from_json(const Json& j) {
    Report r;
    try {
        r.schema_version = j.at("schema_version").get<std::string>();
        r.generated_by = j.at("generated_by").get<std::string>();
        r.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto& jr : j.at("rows")) {
            std::vector<Cell> row;
            for (const auto& v : jr) {
                if (v.is_number_integer()) row.emplace_back(v.get<std::int64_t>());
                else if (v.is_number_float()) row.emplace_back(v.get<double>());
                else if (v.is_string()) row.emplace_back(v.get<std::string>());
                else throw ConfigError("report cell must be a number or string");
            }
            r.add(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed report JSON: ") + e.what());
    }
    return r;
}

void emit(const Report& r, Format f, const std::string& path) {
    auto write = [&](std::ostream& os) {
        if (f == Format::Csv) emit_csv(r, os);
        else os << to_json(r).dump(2) << '\n';
    };
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write(out);
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') field += '"', ++i;
            else if (c == '"') quoted = false;
            else field += c;
            continue;
        }
        if (c == '"') {
            quoted = true, any = true;
        } else if (c == ',') {
            row.push_back(std::move(field)), field.clear(), any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field)), field.clear();
            out.push_back(std::move(row)), row.clear();
            any = false;
        } else {
            field += c, any = true;
        }
    }
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace tfperf
