#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace exakit {

using Json = nlohmann::ordered_json;

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

/// Builds CSV text with a header row. Fields are written verbatim; callers
/// pass numbers through format_double.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add_row(std::vector<std::string> row);
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// Two-space indented dump with a trailing newline.
std::string dump_json(const Json& j);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& data);

}  // namespace exakit
