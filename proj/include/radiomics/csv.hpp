#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace radiomics {

/// Minimal RFC 4180 table: first row is the header, fields are quoted only
/// when they contain a comma, quote or newline. Output always ends rows
/// with '\n', so a read/write cycle of anything this writer produced is
/// byte-identical.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(std::string_view name) const;
    /// Throws MissingColumn.
    std::size_t require_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
std::string format_csv(const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const CsvTable& table, const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_number(double v);
double parse_number(std::string_view s);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace radiomics
