#include "radiomics/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "radiomics/error.hpp"

namespace radiomics {

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

std::size_t CsvTable::require_column(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw Error(ErrorCode::MissingColumn, std::string(name));
}

CsvTable parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        any = true;
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            record.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(record));
            record.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (quoted) throw Error(ErrorCode::MalformedHeader, "unterminated quoted CSV field");
    if (any || !field.empty() || !record.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    CsvTable t;
    if (records.empty()) return t;
    t.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() == 1 && records[r][0].empty()) continue;
        if (records[r].size() != t.header.size())
            throw Error(ErrorCode::MalformedHeader, "CSV row " + std::to_string(r) + " has " +
                                                        std::to_string(records[r].size()) + " fields, header has " +
                                                        std::to_string(t.header.size()));
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

namespace {

void append_field(std::string& out, const std::string& f) {
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
        out += f;
        return;
    }
    out += '"';
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

void append_record(std::string& out, const std::vector<std::string>& rec) {
    for (std::size_t i = 0; i < rec.size(); ++i) {
        if (i) out += ',';
        append_field(out, rec[i]);
    }
    out += '\n';
}

}  // namespace

std::string format_csv(const CsvTable& table) {
    std::string out;
    append_record(out, table.header);
    for (const auto& r : table.rows) append_record(out, r);
    return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
    auto bytes = detail::read_file_bytes(path);
    return parse_csv(std::string_view(bytes.data(), bytes.size()));
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) { write_text(path, format_csv(table)); }

void write_text(const std::filesystem::path& path, std::string_view text) { detail::write_file_bytes(path, text); }

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_number(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s == "NA" || s == "nan" || s == "NaN") return std::nan("");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorCode::InvalidArgument, "not a number: '" + std::string(s) + "'");
    return v;
}

}  // namespace radiomics
