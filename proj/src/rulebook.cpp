#include "flakerank/rulebook.hpp"

#include <unordered_set>

#include "flakerank/csv.hpp"
#include "flakerank/errors.hpp"
#include "flakerank/text.hpp"

namespace flakerank {

namespace {

bool valid_category_id(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

void compile_rule(Rule& rule) {
    if (rule.patterns.empty()) {
        throw validation_error("rule '" + rule.category + "' has no patterns");
    }
    rule.compiled.clear();
    rule.compiled.reserve(rule.patterns.size());
    for (const auto& p : rule.patterns) {
        if (p.empty()) {
            throw validation_error("bad pattern in '" + rule.category + "': empty pattern");
        }
        try {
            rule.compiled.push_back(rx::Regex::compile(p, rule.case_insensitive));
        } catch (const rx::pattern_error& e) {
            throw validation_error("bad pattern in '" + rule.category + "': " + p + ": " +
                                   e.reason());
        }
    }
}

struct BuiltinRule {
    const char* category;
    const char* description;
    std::vector<const char*> patterns;
};

const std::vector<BuiltinRule>& builtin_rules() {
    static const std::vector<BuiltinRule> kRules = {
        {"job_timeout",
         "Job hit its execution time limit",
         {"execution took longer than", "job execution timed out",
          "exceeded the (maximum )?time limit"}},
        {"runner_failure",
         "CI runner or executor system failure",
         {"runner system failure", R"(job failed \(system failure\))",
          "lost contact with (the )?runner"}},
        {"connection_error",
         "Network connectivity problems",
         {"connection (timed out|refused|reset by peer)", "could not resolve host",
          "network is unreachable", "tls handshake (timeout|failure|error)"}},
        {"out_of_memory",
         "Process or container ran out of memory",
         {"out of memory", "oom-?kill(ed|er)?", "cannot allocate memory",
          R"(java\.lang\.outofmemoryerror)"}},
        {"docker_pull_error",
         "Container image could not be pulled",
         {"failed to pull image", "error pulling image", "manifest unknown", "toomanyrequests"}},
        {"git_checkout_error",
         "Source checkout or fetch failed",
         {"fatal: unable to access", "fatal: could not read from remote repository",
          "error: failed to (fetch|checkout)"}},
        {"dependency_install_error",
         "Package or dependency installation failed",
         {"could not find a version that satisfies", "npm err!", "unable to locate package",
          "no matching distribution found"}},
        {"disk_quota_exceeded",
         "Build ran out of disk space",
         {"no space left on device", "disk quota exceeded", "not enough (free )?disk space"}},
    };
    return kRules;
}

}  // namespace

Rulebook builtin_rulebook() {
    Rulebook rb;
    rb.source = "builtin";
    for (const auto& br : builtin_rules()) {
        Rule rule;
        rule.category = br.category;
        rule.description = br.description;
        for (const char* p : br.patterns) rule.patterns.emplace_back(p);
        compile_rule(rule);
        rb.rules.push_back(std::move(rule));
    }
    return rb;
}

Rulebook load_rules(const std::optional<std::string>& path) {
    if (!path) return builtin_rulebook();

    const std::string data = read_file(*path);
    Rulebook rb;
    rb.source = *path;
    std::unordered_set<std::string> seen;
    Rule current;
    bool have_rule = false;

    auto finish_rule = [&]() {
        if (!have_rule) return;
        compile_rule(current);
        rb.rules.push_back(std::move(current));
        current = Rule{};
    };

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= data.size()) {
        const std::size_t end = data.find('\n', start);
        std::string_view raw(data.data() + start,
                             (end == std::string::npos ? data.size() : end) - start);
        start = end == std::string::npos ? data.size() + 1 : end + 1;
        ++line_no;

        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;

        const std::string at = *path + ":" + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw parse_error(at + "unterminated section header");
            const std::string_view id = line.substr(1, line.size() - 2);
            if (!valid_category_id(id)) {
                throw parse_error(at + "bad category id '" + std::string(id) + "'");
            }
            finish_rule();
            if (!seen.insert(std::string(id)).second) {
                throw validation_error(at + "duplicate category '" + std::string(id) + "'");
            }
            current.category = std::string(id);
            have_rule = true;
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw parse_error(at + "expected 'key = value'");
        if (!have_rule) throw parse_error(at + "key outside of a [category] section");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key == "description") {
            current.description = std::string(value);
        } else if (key == "pattern") {
            current.patterns.emplace_back(value);
        } else if (key == "case_insensitive") {
            if (value == "true") {
                current.case_insensitive = true;
            } else if (value == "false") {
                current.case_insensitive = false;
            } else {
                throw parse_error(at + "case_insensitive must be true or false");
            }
        } else {
            throw parse_error(at + "unknown key '" + std::string(key) + "'");
        }
    }
    finish_rule();
    if (rb.rules.empty()) throw validation_error(*path + ": rulebook is empty");
    return rb;
}

std::optional<std::string> match_category(const Rulebook& rb, std::string_view log) {
    const std::string stripped = strip_ansi(log);
    for (const auto& rule : rb.rules) {
        for (const auto& re : rule.compiled) {
            if (re.search(stripped)) return rule.category;
        }
    }
    return std::nullopt;
}

}  // namespace flakerank
