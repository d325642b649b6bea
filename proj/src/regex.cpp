#include "flakerank/regex.hpp"

#include <memory>
#include <optional>

namespace flakerank::rx {

namespace {

constexpr std::size_t kMaxStates = 1 << 16;
constexpr int kMaxRepeat = 1000;

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
    enum class Kind { empty, chars, concat, alt, repeat, line_start, line_end };
    Kind kind;
    CharMask mask;                  // chars
    std::vector<NodePtr> children;  // concat/alt: 1+, repeat: exactly 1
    int min = 0;
    int max = -1;  // -1 = unbounded
};

NodePtr make_node(Node::Kind k) {
    auto n = std::make_unique<Node>();
    n->kind = k;
    return n;
}

CharMask digit_mask() {
    CharMask m;
    for (unsigned c = '0'; c <= '9'; ++c) m.set(static_cast<unsigned char>(c));
    return m;
}

CharMask word_mask() {
    CharMask m = digit_mask();
    for (unsigned c = 'a'; c <= 'z'; ++c) m.set(static_cast<unsigned char>(c));
    for (unsigned c = 'A'; c <= 'Z'; ++c) m.set(static_cast<unsigned char>(c));
    m.set('_');
    return m;
}

CharMask space_mask() {
    CharMask m;
    for (char c : {' ', '\t', '\r', '\n', '\f', '\v'}) m.set(static_cast<unsigned char>(c));
    return m;
}

CharMask single(unsigned char c, bool icase) {
    CharMask m;
    m.set(c);
    if (icase) m.fold_case();
    return m;
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

class Parser {
public:
    Parser(std::string_view pattern, bool icase) : p_(pattern), icase_(icase) {}

    NodePtr parse() {
        NodePtr root = parse_alt();
        if (pos_ != p_.size()) {
            // parse_alt stops only at an unmatched ')'
            throw pattern_error("unbalanced ')'", pos_);
        }
        return root;
    }

private:
    bool eof() const { return pos_ >= p_.size(); }
    char peek() const { return p_[pos_]; }
    char get() { return p_[pos_++]; }

    [[noreturn]] void fail(const std::string& reason) const { throw pattern_error(reason, pos_); }

    NodePtr parse_alt() {
        auto node = make_node(Node::Kind::alt);
        node->children.push_back(parse_concat());
        while (!eof() && peek() == '|') {
            ++pos_;
            node->children.push_back(parse_concat());
        }
        if (node->children.size() == 1) return std::move(node->children.front());
        return node;
    }

    NodePtr parse_concat() {
        auto node = make_node(Node::Kind::concat);
        while (!eof() && peek() != '|' && peek() != ')') {
            node->children.push_back(parse_repeat());
        }
        if (node->children.empty()) return make_node(Node::Kind::empty);
        if (node->children.size() == 1) return std::move(node->children.front());
        return node;
    }

    NodePtr parse_repeat() {
        NodePtr atom = parse_atom();
        for (;;) {
            if (eof()) return atom;
            int min = 0;
            int max = -1;
            const char c = peek();
            if (c == '*') {
                ++pos_;
            } else if (c == '+') {
                ++pos_;
                min = 1;
            } else if (c == '?') {
                ++pos_;
                max = 1;
            } else if (c == '{') {
                if (!parse_bounds(min, max)) return atom;  // literal '{' starts next atom
            } else {
                return atom;
            }
            if (!eof() && peek() == '?') ++pos_;  // lazy marker; same language
            auto rep = make_node(Node::Kind::repeat);
            rep->min = min;
            rep->max = max;
            rep->children.push_back(std::move(atom));
            atom = std::move(rep);
        }
    }

    // Attempts `{m}`, `{m,}` or `{m,n}` at the current '{'; on malformed
    // bounds the brace is left unconsumed and treated as a literal.
    bool parse_bounds(int& min, int& max) {
        const std::size_t saved = pos_;
        ++pos_;  // '{'
        auto number = [&]() -> std::optional<int> {
            if (eof() || peek() < '0' || peek() > '9') return std::nullopt;
            long v = 0;
            while (!eof() && peek() >= '0' && peek() <= '9') {
                v = v * 10 + (get() - '0');
                if (v > kMaxRepeat) fail("repetition bound exceeds " + std::to_string(kMaxRepeat));
            }
            return static_cast<int>(v);
        };
        auto lo = number();
        if (!lo) {
            pos_ = saved;
            return false;
        }
        min = *lo;
        max = *lo;
        if (!eof() && peek() == ',') {
            ++pos_;
            if (!eof() && peek() == '}') {
                max = -1;
            } else {
                auto hi = number();
                if (!hi) {
                    pos_ = saved;
                    return false;
                }
                max = *hi;
            }
        }
        if (eof() || peek() != '}') {
            pos_ = saved;
            return false;
        }
        ++pos_;
        if (max != -1 && max < min) fail("repetition bounds out of order");
        return true;
    }

    NodePtr parse_atom() {
        if (eof()) fail("expected an atom");
        const char c = get();
        switch (c) {
            case '(':
                return parse_group();
            case '[':
                return parse_class();
            case '.': {
                auto n = make_node(Node::Kind::chars);
                n->mask.invert();
                CharMask nl;
                nl.set('\n');
                n->mask.bits[0] &= ~nl.bits[0];
                return n;
            }
            case '^':
                return make_node(Node::Kind::line_start);
            case '$':
                return make_node(Node::Kind::line_end);
            case '\\':
                return parse_escape(false);
            case '*':
            case '+':
            case '?':
                fail("nothing to repeat");
            default: {
                auto n = make_node(Node::Kind::chars);
                n->mask = single(static_cast<unsigned char>(c), icase_);
                return n;
            }
        }
    }

    NodePtr parse_group() {
        if (!eof() && peek() == '?') {
            ++pos_;
            if (eof()) fail("unterminated group");
            const char c = get();
            if (c == ':') {
                // non-capturing
            } else if (c == '=' || c == '!') {
                fail("lookaround is not supported");
            } else if (c == '<') {
                if (!eof() && (peek() == '=' || peek() == '!')) fail("lookaround is not supported");
                skip_group_name('>');
            } else if (c == 'P') {
                if (!eof() && peek() == '=') fail("backreferences are not supported");
                if (eof() || get() != '<') fail("malformed named group");
                skip_group_name('>');
            } else {
                fail(std::string("unsupported group syntax '(?") + c + "'");
            }
        }
        NodePtr body = parse_alt();
        if (eof() || get() != ')') fail("unterminated group");
        return body;
    }

    void skip_group_name(char terminator) {
        while (!eof() && peek() != terminator) {
            const char c = get();
            const bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                              (c >= '0' && c <= '9') || c == '_';
            if (!word) fail("malformed group name");
        }
        if (eof()) fail("unterminated group name");
        ++pos_;
    }

    // Returns either a chars node (escape outside a class) or, via
    // `class_target`, merges the escape into a class under construction.
    NodePtr parse_escape(bool in_class, CharMask* class_target = nullptr) {
        if (eof()) fail("dangling escape");
        const char c = get();
        CharMask m;
        bool predefined = true;
        switch (c) {
            case 'd': m = digit_mask(); break;
            case 'D': m = digit_mask(); m.invert(); break;
            case 'w': m = word_mask(); break;
            case 'W': m = word_mask(); m.invert(); break;
            case 's': m = space_mask(); break;
            case 'S': m = space_mask(); m.invert(); break;
            default: predefined = false; break;
        }
        if (!predefined) {
            unsigned char lit = 0;
            switch (c) {
                case 'n': lit = '\n'; break;
                case 't': lit = '\t'; break;
                case 'r': lit = '\r'; break;
                case 'f': lit = '\f'; break;
                case 'v': lit = '\v'; break;
                case 'x': {
                    if (pos_ + 1 >= p_.size()) fail("truncated \\x escape");
                    const int hi = hex_value(get());
                    const int lo = hex_value(get());
                    if (hi < 0 || lo < 0) fail("bad \\x escape");
                    lit = static_cast<unsigned char>(hi * 16 + lo);
                    break;
                }
                case 'b':
                case 'B':
                    fail("word boundaries are not supported");
                default:
                    if (c >= '1' && c <= '9') fail("backreferences are not supported");
                    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '0') {
                        fail(std::string("unknown escape '\\") + c + "'");
                    }
                    lit = static_cast<unsigned char>(c);  // escaped punctuation
                    break;
            }
            m = single(lit, in_class ? false : icase_);
        }
        if (class_target) {
            for (std::size_t w = 0; w < 4; ++w) class_target->bits[w] |= m.bits[w];
            return nullptr;
        }
        auto n = make_node(Node::Kind::chars);
        n->mask = m;
        return n;
    }

    NodePtr parse_class() {
        CharMask members;
        bool negate = false;
        if (!eof() && peek() == '^') {
            negate = true;
            ++pos_;
        }
        bool first = true;
        std::optional<unsigned char> pending;  // candidate range start
        auto flush = [&]() {
            if (pending) {
                members.set(*pending);
                pending.reset();
            }
        };
        for (;;) {
            if (eof()) fail("unterminated character class");
            char c = peek();
            if (c == ']' && !first) {
                ++pos_;
                break;
            }
            first = false;
            ++pos_;
            if (c == '\\') {
                // Multi-char escapes (\d etc.) cannot form ranges.
                const std::size_t before = pos_;
                CharMask esc;
                parse_escape(true, &esc);
                int count = 0;
                unsigned char only = 0;
                for (unsigned b = 0; b < 256 && count <= 1; ++b) {
                    if (esc.test(static_cast<unsigned char>(b))) {
                        only = static_cast<unsigned char>(b);
                        ++count;
                    }
                }
                (void)before;
                flush();
                if (count == 1) {
                    pending = only;
                } else {
                    for (std::size_t w = 0; w < 4; ++w) members.bits[w] |= esc.bits[w];
                }
                continue;
            }
            if (c == '-' && pending && !eof() && peek() != ']') {
                char hi_raw = get();
                unsigned char hi;
                if (hi_raw == '\\') {
                    CharMask esc;
                    parse_escape(true, &esc);
                    int count = 0;
                    unsigned b_only = 0;
                    for (unsigned b = 0; b < 256; ++b) {
                        if (esc.test(static_cast<unsigned char>(b))) {
                            b_only = b;
                            ++count;
                        }
                    }
                    if (count != 1) fail("class escape cannot end a range");
                    hi = static_cast<unsigned char>(b_only);
                } else {
                    hi = static_cast<unsigned char>(hi_raw);
                }
                if (*pending > hi) fail("character range out of order");
                for (unsigned b = *pending; b <= hi; ++b) members.set(static_cast<unsigned char>(b));
                pending.reset();
                continue;
            }
            flush();
            pending = static_cast<unsigned char>(c);
        }
        flush();
        if (icase_) members.fold_case();
        if (negate) members.invert();
        auto n = make_node(Node::Kind::chars);
        n->mask = members;
        return n;
    }

    std::string_view p_;
    std::size_t pos_ = 0;
    bool icase_;
};

}  // namespace

class Compiler {
public:
    explicit Compiler(Regex& re) : re_(re) {}

    void run(const Node& root) {
        Fragment f = emit(root);
        const std::uint32_t accept = add_state(Regex::Op::accept);
        patch(f.outs, accept);
        re_.start_ = f.start;
    }

private:
    struct Fragment {
        std::uint32_t start;
        std::vector<std::uint64_t> outs;  // state_index * 2 + slot
    };

    std::uint32_t add_state(Regex::Op op, std::uint32_t mask_index = 0) {
        if (re_.states_.size() >= kMaxStates) {
            throw pattern_error("pattern too large", 0);
        }
        Regex::State s;
        s.op = op;
        s.mask = mask_index;
        re_.states_.push_back(s);
        return static_cast<std::uint32_t>(re_.states_.size() - 1);
    }

    void patch(const std::vector<std::uint64_t>& outs, std::uint32_t target) {
        for (std::uint64_t o : outs) {
            Regex::State& s = re_.states_[o >> 1];
            if (o & 1) {
                s.next1 = target;
            } else {
                s.next0 = target;
            }
        }
    }

    Fragment emit(const Node& n) {
        switch (n.kind) {
            case Node::Kind::empty: {
                const auto s = add_state(Regex::Op::eps);
                return {s, {std::uint64_t{s} * 2}};
            }
            case Node::Kind::chars: {
                re_.masks_.push_back(n.mask);
                const auto idx = static_cast<std::uint32_t>(re_.masks_.size() - 1);
                const auto s = add_state(Regex::Op::chars, idx);
                return {s, {std::uint64_t{s} * 2}};
            }
            case Node::Kind::line_start: {
                const auto s = add_state(Regex::Op::line_start);
                return {s, {std::uint64_t{s} * 2}};
            }
            case Node::Kind::line_end: {
                const auto s = add_state(Regex::Op::line_end);
                return {s, {std::uint64_t{s} * 2}};
            }
            case Node::Kind::concat: {
                Fragment acc = emit(*n.children.front());
                for (std::size_t i = 1; i < n.children.size(); ++i) {
                    Fragment next = emit(*n.children[i]);
                    patch(acc.outs, next.start);
                    acc.outs = std::move(next.outs);
                }
                return acc;
            }
            case Node::Kind::alt: {
                Fragment acc = emit(*n.children.front());
                for (std::size_t i = 1; i < n.children.size(); ++i) {
                    Fragment rhs = emit(*n.children[i]);
                    const auto s = add_state(Regex::Op::split);
                    re_.states_[s].next0 = acc.start;
                    re_.states_[s].next1 = rhs.start;
                    acc.start = s;
                    acc.outs.insert(acc.outs.end(), rhs.outs.begin(), rhs.outs.end());
                }
                return acc;
            }
            case Node::Kind::repeat:
                return emit_repeat(n);
        }
        throw pattern_error("internal: unknown node", 0);
    }

    Fragment emit_star(const Node& child) {
        const auto s = add_state(Regex::Op::split);
        Fragment f = emit(child);
        re_.states_[s].next0 = f.start;
        patch(f.outs, s);
        return {s, {std::uint64_t{s} * 2 + 1}};
    }

    Fragment emit_optional(const Node& child) {
        const auto s = add_state(Regex::Op::split);
        Fragment f = emit(child);
        re_.states_[s].next0 = f.start;
        f.outs.push_back(std::uint64_t{s} * 2 + 1);
        return {s, std::move(f.outs)};
    }

    Fragment emit_repeat(const Node& n) {
        const Node& child = *n.children.front();
        const int min = n.min;
        const int max = n.max;

        if (min == 0 && max == 0) {
            const auto s = add_state(Regex::Op::eps);
            return {s, {std::uint64_t{s} * 2}};
        }
        if (min == 0 && max == -1) return emit_star(child);

        Fragment acc{0, {}};
        bool have = false;
        auto append = [&](Fragment f) {
            if (!have) {
                acc = std::move(f);
                have = true;
            } else {
                patch(acc.outs, f.start);
                acc.outs = std::move(f.outs);
            }
        };
        for (int i = 0; i < min; ++i) append(emit(child));
        if (max == -1) {
            append(emit_star(child));
        } else {
            for (int i = min; i < max; ++i) append(emit_optional(child));
        }
        return acc;
    }

    Regex& re_;
};

Regex Regex::compile(std::string_view pattern, bool case_insensitive) {
    Regex re;
    re.source_ = std::string(pattern);
    Parser parser(pattern, case_insensitive);
    NodePtr root = parser.parse();
    Compiler(re).run(*root);
    return re;
}

bool Regex::search(std::string_view text) const {
    const std::size_t n_states = states_.size();
    std::vector<std::uint32_t> current;
    std::vector<std::uint32_t> next;
    std::vector<std::uint32_t> stack;
    std::vector<std::size_t> visited(n_states, static_cast<std::size_t>(-1));
    current.reserve(n_states);
    next.reserve(n_states);

    const std::size_t len = text.size();
    bool matched = false;

    auto at_line_start = [&](std::size_t pos) { return pos == 0 || text[pos - 1] == '\n'; };
    auto at_line_end = [&](std::size_t pos) { return pos == len || text[pos] == '\n'; };

    // Epsilon closure with position predicates; chars states land in `list`.
    auto add_thread = [&](std::vector<std::uint32_t>& list, std::uint32_t s0, std::size_t pos) {
        stack.clear();
        stack.push_back(s0);
        while (!stack.empty()) {
            const std::uint32_t s = stack.back();
            stack.pop_back();
            if (visited[s] == pos) continue;
            visited[s] = pos;
            const State& st = states_[s];
            switch (st.op) {
                case Op::accept:
                    matched = true;
                    return;
                case Op::chars:
                    list.push_back(s);
                    break;
                case Op::eps:
                    stack.push_back(st.next0);
                    break;
                case Op::split:
                    stack.push_back(st.next1);
                    stack.push_back(st.next0);
                    break;
                case Op::line_start:
                    if (at_line_start(pos)) stack.push_back(st.next0);
                    break;
                case Op::line_end:
                    if (at_line_end(pos)) stack.push_back(st.next0);
                    break;
            }
        }
    };

    for (std::size_t pos = 0; pos <= len; ++pos) {
        add_thread(current, start_, pos);  // new match attempt at every offset
        if (matched) return true;
        if (pos == len) break;
        const unsigned char c = static_cast<unsigned char>(text[pos]);
        next.clear();
        for (const std::uint32_t s : current) {
            if (masks_[states_[s].mask].test(c)) {
                add_thread(next, states_[s].next0, pos + 1);
                if (matched) return true;
            }
        }
        current.swap(next);
    }
    return false;
}

}  // namespace flakerank::rx
