#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flakerank/regex.hpp"

namespace flakerank {

/// One category rule: ordered patterns, any match assigns the category.
struct Rule {
    std::string category;  // [a-z0-9_-]+
    std::string description;
    std::vector<std::string> patterns;  // source order is significant
    bool case_insensitive = true;
    std::vector<rx::Regex> compiled;
};

/// Ordered rule list; the first rule with any matching pattern wins.
struct Rulebook {
    std::vector<Rule> rules;
    std::string source;  // "builtin" or a file path
};

/// The generic starter rulebook (8 categories).
Rulebook builtin_rulebook();

/// Loads and compiles a rule file, or the builtin rulebook when no path
/// is given. See the README for the line-oriented grammar.
Rulebook load_rules(const std::optional<std::string>& path);

/// Category of the first rule matching the ANSI-stripped log, if any.
std::optional<std::string> match_category(const Rulebook& rb, std::string_view log);

}  // namespace flakerank
