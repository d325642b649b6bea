#pragma once

#include <stdexcept>
#include <string>

namespace flakerank {

// Exit-code classes: io_error/parse_error -> 1, validation_error -> 2.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

class io_error : public error {
public:
    explicit io_error(const std::string& msg) : error(msg) {}
};

// Structurally malformed input (broken CSV quoting, bad rule-file syntax).
class parse_error : public error {
public:
    explicit parse_error(const std::string& msg) : error(msg) {}
};

// Well-formed input carrying an invalid value (bad status token, bad
// timestamp, duplicate category, out-of-range parameter).
class validation_error : public error {
public:
    explicit validation_error(const std::string& msg) : error(msg) {}
};

}  // namespace flakerank
