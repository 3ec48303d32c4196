#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace streamlens::io {

/// Line reader over gzip or plain files; zlib detects the format transparently.
class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path);
    ~LineReader();
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;
    LineReader(LineReader&&) noexcept;
    LineReader& operator=(LineReader&&) noexcept;

    /// Reads the next line without its terminator. Returns false at end of input.
    bool next(std::string& line);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::vector<std::string> read_lines(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling then renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_gzip_file(const std::filesystem::path& path, std::string_view content);

/// Expands a shell-style glob, or lists regular files when given a directory.
/// Results are sorted for deterministic downstream ordering.
std::vector<std::filesystem::path> expand_inputs(const std::string& pattern);

using CsvRow = std::vector<std::string>;

CsvRow split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);
std::string join_csv(const CsvRow& row);

struct CsvTable {
    CsvRow header;
    std::vector<CsvRow> rows;

    /// Index of a header column; throws InputError when missing.
    std::size_t column(std::string_view name) const;
};

/// Reads a CSV file whose first line is a header. Blank lines are skipped.
/// Throws InputError when a row has a different field count than the header.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text, std::string_view origin = "<memory>");

/// `key=value` lines; '#' comments and blank lines are ignored.
using KeyValues = std::map<std::string, std::string>;
std::string format_key_values(const KeyValues& kv);
KeyValues parse_key_values(std::string_view text);

}  // namespace streamlens::io
