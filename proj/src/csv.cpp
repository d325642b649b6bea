#include "flakerank/csv.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "flakerank/errors.hpp"

namespace flakerank {

CsvReader::CsvReader(std::string_view data, std::string source_name)
    : data_(data), source_(std::move(source_name)) {}

bool CsvReader::next(std::vector<std::string>& fields) {
    while (next_raw(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank record
        return true;
    }
    return false;
}

bool CsvReader::next_raw(std::vector<std::string>& fields) {
    fields.clear();
    if (pos_ >= data_.size()) return false;

    record_line_ = line_;
    std::string field;
    bool in_quotes = false;

    while (pos_ < data_.size()) {
        const char c = data_[pos_++];

        if (in_quotes) {
            if (c == '"') {
                if (pos_ < data_.size() && data_[pos_] == '"') {
                    ++pos_;
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_;
                field.push_back(c);
            }
            continue;
        }

        switch (c) {
            case '"':
                if (field.empty()) {
                    in_quotes = true;
                } else {
                    field.push_back('"');  // stray quote, kept literally
                }
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                break;
            case '\r':
                if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
                ++line_;
                fields.push_back(std::move(field));
                return true;
            case '\n':
                ++line_;
                fields.push_back(std::move(field));
                return true;
            default:
                field.push_back(c);
                break;
        }
    }

    if (in_quotes) {
        throw parse_error(source_ + ":" + std::to_string(record_line_) +
                          ": unterminated quoted field");
    }
    fields.push_back(std::move(field));
    return true;
}

std::string csv_escape(const std::string& field) {
    bool needs_quotes = false;
    for (char c : field) {
        if (c == ',' || c == '"' || c == '\n' || c == '\r') {
            needs_quotes = true;
            break;
        }
    }
    if (!needs_quotes) return field;
    std::string out;
    out.reserve(field.size() + 8);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void CsvWriter::write_row(std::span<const std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out_ << ',';
        first = false;
        out_ << csv_escape(f);
    }
    out_ << '\n';
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw io_error("read failed: " + path);
    return std::move(buf).str();
}

}  // namespace flakerank
