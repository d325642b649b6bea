#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flakerank {

/// Pull-based RFC 4180 reader over an in-memory buffer. Quoted fields may
/// contain commas, quotes ("" escape), and line breaks. Accepts LF, CRLF,
/// and lone CR row ends. Blank records are skipped.
class CsvReader {
public:
    explicit CsvReader(std::string_view data, std::string source_name = "<buffer>");

    /// Reads one record into `fields`. Returns false on end of input.
    /// Throws parse_error on an unterminated quoted field.
    bool next(std::vector<std::string>& fields);

    /// 1-based line number where the last record started.
    std::size_t record_line() const { return record_line_; }

private:
    bool next_raw(std::vector<std::string>& fields);

    std::string_view data_;
    std::string source_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t record_line_ = 1;
};

/// Minimal-quoting RFC 4180 writer with `\n` row terminators.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void write_row(std::span<const std::string> fields);

private:
    std::ostream& out_;
};

std::string csv_escape(const std::string& field);

/// Reads a whole file into memory. Throws io_error if it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace flakerank
