#include <cctype>

#include "mddb/query.hpp"

namespace mddb::query {

std::string SemType::name() const {
    switch (base) {
        case Base::unknown: return "unknown";
        case Base::boolean: return "boolean";
        case Base::integer: return "integer";
        case Base::real: return "real";
        case Base::text: return "string";
        case Base::point: return "point";
        case Base::polyline: return "polyline";
        case Base::polygon: return "polygon";
        case Base::rect: return "rect";
        case Base::dna: return "dna";
        case Base::protein: return "protein";
        case Base::object: return "object(" + class_name + ")";
        case Base::obj_collection: return "collection(" + class_name + ")";
        case Base::scalar_collection:
            return std::string("collection(") + cat::scalar_name(elem_scalar) + ")";
    }
    return "?";
}

ExprPtr Expr::clone() const {
    auto out = std::make_unique<Expr>();
    out->kind = kind;
    out->op = op;
    out->value = value;
    out->name = name;
    out->var_index = var_index;
    out->type = type;
    if (base) out->base = base->clone();
    for (const auto& a : args) out->args.push_back(a->clone());
    if (lhs) out->lhs = lhs->clone();
    if (rhs) out->rhs = rhs->clone();
    return out;
}

int QueryAst::binding_index(const std::string& var) const {
    for (size_t i = 0; i < bindings.size(); ++i)
        if (bindings[i].var == var) return static_cast<int>(i);
    return -1;
}

std::string to_text(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::literal:
            if (e.value.kind() == store::ValueKind::text)
                return "'" + e.value.as_text() + "'";
            return store::to_display(e.value);
        case Expr::Kind::var: return e.name;
        case Expr::Kind::field: return to_text(*e.base) + "." + e.name;
        case Expr::Kind::method: {
            std::string out = e.base ? to_text(*e.base) + "." + e.name : e.name;
            out += "(";
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                out += to_text(*e.args[i]);
            }
            return out + ")";
        }
        case Expr::Kind::unary: return "not (" + to_text(*e.lhs) + ")";
        case Expr::Kind::binary: {
            const char* op = "?";
            switch (e.op) {
                case Expr::Op::eq: op = "="; break;
                case Expr::Op::ne: op = "!="; break;
                case Expr::Op::lt: op = "<"; break;
                case Expr::Op::le: op = "<="; break;
                case Expr::Op::gt: op = ">"; break;
                case Expr::Op::ge: op = ">="; break;
                case Expr::Op::and_: op = "and"; break;
                case Expr::Op::or_: op = "or"; break;
                case Expr::Op::overlaps: op = "overlaps"; break;
                case Expr::Op::inside: op = "inside"; break;
                case Expr::Op::in: op = "in"; break;
                default: break;
            }
            bool parens = e.op == Expr::Op::and_ || e.op == Expr::Op::or_;
            std::string l = to_text(*e.lhs);
            std::string r = to_text(*e.rhs);
            if (parens) return "(" + l + " " + op + " " + r + ")";
            return l + " " + op + " " + r;
        }
    }
    return "?";
}

namespace {

struct Token {
    enum class Kind : uint8_t { ident, keyword, integer, real, text, punct, end };
    Kind kind = Kind::end;
    std::string text;   // ident / punct / keyword (lowercased) / string body
    int64_t int_value = 0;
    double real_value = 0;
    int line = 1, column = 1;
};

const char* kKeywords[] = {"select", "distinct", "from",     "where",  "in",
                           "and",    "or",       "not",      "overlaps", "inside"};

bool is_keyword(const std::string& lower) {
    for (const char* k : kKeywords)
        if (lower == k) return true;
    return false;
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) { advance(); }

    const Token& peek() const { return tok_; }
    Token next() {
        Token t = tok_;
        advance();
        return t;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, tok_.line, tok_.column);
    }

private:
    void advance() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '\n') {
                ++line_;
                col_ = 1;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++col_;
                ++pos_;
            } else if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
        tok_ = Token{};
        tok_.line = line_;
        tok_.column = col_;
        if (pos_ >= text_.size()) return;
        size_t token_start = pos_;

        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '_'))
                ++pos_;
            tok_.text = std::string(text_.substr(start, pos_ - start));
            std::string lower = tok_.text;
            for (char& ch : lower)
                ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            if (is_keyword(lower)) {
                tok_.kind = Token::Kind::keyword;
                tok_.text = lower;
            } else {
                tok_.kind = Token::Kind::ident;
            }
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '-' && pos_ + 1 < text_.size() &&
                    std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            size_t start = pos_;
            if (c == '-') ++pos_;
            bool real = false;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '.')) {
                if (text_[pos_] == '.') {
                    if (pos_ + 1 >= text_.size() ||
                        !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))
                        break;  // attribute dot, not a decimal point
                    real = true;
                }
                ++pos_;
            }
            tok_.text = std::string(text_.substr(start, pos_ - start));
            if (real) {
                tok_.kind = Token::Kind::real;
                tok_.real_value = std::stod(tok_.text);
            } else {
                tok_.kind = Token::Kind::integer;
                tok_.int_value = std::stoll(tok_.text);
            }
        } else if (c == '\'') {
            ++pos_;
            size_t start = pos_;
            while (pos_ < text_.size() && text_[pos_] != '\'') ++pos_;
            if (pos_ >= text_.size())
                throw ParseError("unterminated string literal", line_, col_);
            tok_.kind = Token::Kind::text;
            tok_.text = std::string(text_.substr(start, pos_ - start));
            ++pos_;
        } else if ((c == '<' || c == '>' || c == '!') && pos_ + 1 < text_.size() &&
                   text_[pos_ + 1] == '=') {
            tok_.kind = Token::Kind::punct;
            tok_.text = std::string(text_.substr(pos_, 2));
            pos_ += 2;
        } else {
            tok_.kind = Token::Kind::punct;
            tok_.text = std::string(1, c);
            ++pos_;
        }
        col_ += static_cast<int>(pos_ - token_start);
    }

    std::string_view text_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

class Parser {
public:
    explicit Parser(std::string_view text) : lex_(text) {}

    QueryAst parse() {
        QueryAst ast;
        expect_keyword("select");
        if (accept_keyword("distinct")) ast.distinct = true;
        if (accept_punct("*")) {
            ast.select_star = true;
        } else {
            ast.select.push_back(parse_or());
            while (accept_punct(",")) ast.select.push_back(parse_or());
        }
        expect_keyword("from");
        do {
            Binding b;
            b.var = expect_ident();
            expect_keyword("in");
            b.source = parse_postfix();
            ast.bindings.push_back(std::move(b));
        } while (accept_punct(","));
        if (accept_keyword("where")) ast.where = parse_or();
        accept_punct(";");
        if (lex_.peek().kind != Token::Kind::end)
            lex_.fail("unexpected trailing input '" + lex_.peek().text + "'");
        return ast;
    }

private:
    ExprPtr parse_or() {
        ExprPtr e = parse_and();
        while (accept_keyword("or")) {
            auto node = std::make_unique<Expr>();
            node->kind = Expr::Kind::binary;
            node->op = Expr::Op::or_;
            node->lhs = std::move(e);
            node->rhs = parse_and();
            e = std::move(node);
        }
        return e;
    }

    ExprPtr parse_and() {
        ExprPtr e = parse_not();
        while (accept_keyword("and")) {
            auto node = std::make_unique<Expr>();
            node->kind = Expr::Kind::binary;
            node->op = Expr::Op::and_;
            node->lhs = std::move(e);
            node->rhs = parse_not();
            e = std::move(node);
        }
        return e;
    }

    ExprPtr parse_not() {
        if (accept_keyword("not")) {
            auto node = std::make_unique<Expr>();
            node->kind = Expr::Kind::unary;
            node->op = Expr::Op::not_;
            node->lhs = parse_not();
            return node;
        }
        return parse_rel();
    }

    ExprPtr parse_rel() {
        ExprPtr e = parse_postfix();
        Expr::Op op = Expr::Op::none;
        if (lex_.peek().kind == Token::Kind::punct) {
            const std::string& p = lex_.peek().text;
            if (p == "=") op = Expr::Op::eq;
            else if (p == "!=") op = Expr::Op::ne;
            else if (p == "<") op = Expr::Op::lt;
            else if (p == "<=") op = Expr::Op::le;
            else if (p == ">") op = Expr::Op::gt;
            else if (p == ">=") op = Expr::Op::ge;
        } else if (lex_.peek().kind == Token::Kind::keyword) {
            const std::string& k = lex_.peek().text;
            if (k == "overlaps") op = Expr::Op::overlaps;
            else if (k == "inside") op = Expr::Op::inside;
            else if (k == "in") op = Expr::Op::in;
        }
        if (op == Expr::Op::none) return e;
        lex_.next();
        auto node = std::make_unique<Expr>();
        node->kind = Expr::Kind::binary;
        node->op = op;
        node->lhs = std::move(e);
        node->rhs = parse_postfix();
        return node;
    }

    ExprPtr parse_postfix() {
        ExprPtr e = parse_primary();
        while (accept_punct(".")) {
            std::string member = expect_ident();
            auto node = std::make_unique<Expr>();
            node->name = std::move(member);
            node->base = std::move(e);
            if (accept_punct("(")) {
                node->kind = Expr::Kind::method;
                if (!accept_punct(")")) {
                    node->args.push_back(parse_or());
                    while (accept_punct(",")) node->args.push_back(parse_or());
                    expect_punct(")");
                }
            } else {
                node->kind = Expr::Kind::field;
            }
            e = std::move(node);
        }
        return e;
    }

    ExprPtr parse_primary() {
        const Token& t = lex_.peek();
        auto node = std::make_unique<Expr>();
        switch (t.kind) {
            case Token::Kind::integer:
                node->kind = Expr::Kind::literal;
                node->value = store::Value{lex_.next().int_value};
                return node;
            case Token::Kind::real:
                node->kind = Expr::Kind::literal;
                node->value = store::Value{lex_.next().real_value};
                return node;
            case Token::Kind::text:
                node->kind = Expr::Kind::literal;
                node->value = store::Value{lex_.next().text};
                return node;
            case Token::Kind::ident: {
                std::string name = lex_.next().text;
                if (accept_punct("(")) {
                    node->kind = Expr::Kind::method;  // free function
                    node->name = std::move(name);
                    if (!accept_punct(")")) {
                        node->args.push_back(parse_or());
                        while (accept_punct(",")) node->args.push_back(parse_or());
                        expect_punct(")");
                    }
                    return node;
                }
                node->kind = Expr::Kind::var;
                node->name = std::move(name);
                return node;
            }
            case Token::Kind::punct:
                if (t.text == "(") {
                    lex_.next();
                    ExprPtr inner = parse_or();
                    expect_punct(")");
                    return inner;
                }
                lex_.fail("unexpected '" + t.text + "'");
            default: lex_.fail("unexpected end of query");
        }
    }

    std::string expect_ident() {
        if (lex_.peek().kind != Token::Kind::ident)
            lex_.fail("expected identifier, got '" + lex_.peek().text + "'");
        return lex_.next().text;
    }
    void expect_keyword(const char* k) {
        if (lex_.peek().kind != Token::Kind::keyword || lex_.peek().text != k)
            lex_.fail(std::string("expected '") + k + "', got '" + lex_.peek().text +
                      "'");
        lex_.next();
    }
    bool accept_keyword(const char* k) {
        if (lex_.peek().kind == Token::Kind::keyword && lex_.peek().text == k) {
            lex_.next();
            return true;
        }
        return false;
    }
    void expect_punct(const char* p) {
        if (lex_.peek().kind != Token::Kind::punct || lex_.peek().text != p)
            lex_.fail(std::string("expected '") + p + "', got '" + lex_.peek().text +
                      "'");
        lex_.next();
    }
    bool accept_punct(const char* p) {
        if (lex_.peek().kind == Token::Kind::punct && lex_.peek().text == p) {
            lex_.next();
            return true;
        }
        return false;
    }

    Lexer lex_;
};

}  // namespace

QueryAst parse_query(std::string_view text) { return Parser(text).parse(); }

}  // namespace mddb::query
