#include "toml_lite.hpp"

#include <cctype>
#include <stdexcept>
#include <vector>

#include "uhcm/types.hpp"

namespace uhcm::detail {

namespace {

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;
    int line = 1;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char take() {
        const char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("domain error: TOML line " + std::to_string(line) + ": " + what);
    }
    void skip_inline_ws() {
        while (!done() && (peek() == ' ' || peek() == '\t')) take();
    }
    void skip_ws_comments_newlines() {
        for (;;) {
            skip_inline_ws();
            if (!done() && peek() == '#') {
                while (!done() && peek() != '\n') take();
            }
            if (!done() && (peek() == '\n' || peek() == '\r')) {
                take();
                continue;
            }
            return;
        }
    }
};

std::vector<std::string> parse_key_path(Cursor& c) {
    std::vector<std::string> path;
    for (;;) {
        c.skip_inline_ws();
        std::string part;
        if (!c.done() && c.peek() == '"') {
            c.take();
            while (!c.done() && c.peek() != '"') part += c.take();
            if (c.done()) c.fail("unterminated quoted key");
            c.take();
        } else {
            while (!c.done() && (std::isalnum(static_cast<unsigned char>(c.peek())) ||
                                 c.peek() == '_' || c.peek() == '-'))
                part += c.take();
        }
        if (part.empty()) c.fail("empty key");
        path.push_back(part);
        c.skip_inline_ws();
        if (!c.done() && c.peek() == '.') {
            c.take();
            continue;
        }
        return path;
    }
}

nlohmann::json parse_value(Cursor& c);

nlohmann::json parse_array(Cursor& c) {
    c.take();  // '['
    nlohmann::json arr = nlohmann::json::array();
    for (;;) {
        c.skip_ws_comments_newlines();
        if (c.done()) c.fail("unterminated array");
        if (c.peek() == ']') {
            c.take();
            return arr;
        }
        arr.push_back(parse_value(c));
        c.skip_ws_comments_newlines();
        if (!c.done() && c.peek() == ',') {
            c.take();
            continue;
        }
        if (!c.done() && c.peek() == ']') {
            c.take();
            return arr;
        }
        c.fail("expected ',' or ']' in array");
    }
}

nlohmann::json parse_value(Cursor& c) {
    c.skip_inline_ws();
    if (c.done()) c.fail("expected a value");
    const char first = c.peek();
    if (first == '[') return parse_array(c);
    if (first == '"') {
        c.take();
        std::string s;
        while (!c.done() && c.peek() != '"') {
            char ch = c.take();
            if (ch == '\\' && !c.done()) {
                const char esc = c.take();
                switch (esc) {
                    case 'n': ch = '\n'; break;
                    case 't': ch = '\t'; break;
                    case '"': ch = '"'; break;
                    case '\\': ch = '\\'; break;
                    default: c.fail("unsupported escape");
                }
            }
            s += ch;
        }
        if (c.done()) c.fail("unterminated string");
        c.take();
        return s;
    }
    std::string tok;
    while (!c.done() && c.peek() != ',' && c.peek() != ']' && c.peek() != '\n' &&
           c.peek() != '\r' && c.peek() != '#' && c.peek() != ' ' && c.peek() != '\t')
        tok += c.take();
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.empty()) c.fail("empty value");
    // Underscore separators are legal in TOML numbers.
    std::string digits;
    for (char ch : tok)
        if (ch != '_') digits += ch;
    try {
        std::size_t used = 0;
        if (digits.find_first_of(".eE") == std::string::npos) {
            const long long v = std::stoll(digits, &used);
            if (used == digits.size()) return v;
        }
        const double d = std::stod(digits, &used);
        if (used == digits.size()) return d;
    } catch (const std::exception&) {
    }
    c.fail("cannot parse value '" + tok + "'");
}

}  // namespace

nlohmann::json parse_toml(const std::string& text) {
    nlohmann::json root = nlohmann::json::object();
    Cursor c{text};
    nlohmann::json* table = &root;
    for (;;) {
        c.skip_ws_comments_newlines();
        if (c.done()) return root;
        if (c.peek() == '[') {
            c.take();
            const bool array_table = !c.done() && c.peek() == '[';
            if (array_table) c.take();
            const std::vector<std::string> path = parse_key_path(c);
            c.skip_inline_ws();
            if (c.done() || c.take() != ']') c.fail("expected ']' after table header");
            if (array_table && (c.done() || c.take() != ']'))
                c.fail("expected ']]' after array-of-tables header");
            nlohmann::json* node = &root;
            for (std::size_t i = 0; i < path.size(); ++i) {
                if (node->is_array()) node = &node->back();
                nlohmann::json& next = (*node)[path[i]];
                const bool last = i + 1 == path.size();
                if (last && array_table) {
                    if (next.is_null()) next = nlohmann::json::array();
                    if (!next.is_array()) c.fail("redefinition as array-of-tables");
                    next.push_back(nlohmann::json::object());
                    node = &next.back();
                } else {
                    if (next.is_null()) next = nlohmann::json::object();
                    node = &next;
                    if (node->is_array()) node = &node->back();
                }
            }
            table = node;
            continue;
        }
        const std::vector<std::string> path = parse_key_path(c);
        c.skip_inline_ws();
        if (c.done() || c.take() != '=') c.fail("expected '=' after key");
        nlohmann::json value = parse_value(c);
        c.skip_inline_ws();
        if (!c.done() && c.peek() == '#')
            while (!c.done() && c.peek() != '\n') c.take();
        if (!c.done() && c.peek() != '\n' && c.peek() != '\r') c.fail("trailing characters after value");

        nlohmann::json* node = table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            nlohmann::json& next = (*node)[path[i]];
            if (next.is_null()) next = nlohmann::json::object();
            if (!next.is_object()) c.fail("key path crosses a non-table");
            node = &next;
        }
        if (node->contains(path.back())) c.fail("duplicate key '" + path.back() + "'");
        (*node)[path.back()] = std::move(value);
    }
}

}  // namespace uhcm::detail
