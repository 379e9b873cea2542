#include "mddb/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace mddb::cat {

const char* scalar_name(ScalarType t) {
    switch (t) {
        case ScalarType::integer: return "integer";
        case ScalarType::real: return "real";
        case ScalarType::text: return "string";
        case ScalarType::polygon: return "polygon";
        case ScalarType::polyline: return "polyline";
        case ScalarType::point: return "point";
        case ScalarType::dna: return "dna";
        case ScalarType::protein: return "protein";
    }
    return "?";
}

std::string IndexDecl::name() const {
    std::string out;
    switch (kind) {
        case Kind::btree: out = "btree:"; break;
        case Kind::rtree: out = "rtree:"; break;
        case Kind::pathdict: out = "pathdict:"; break;
        case Kind::mt: out = "mt:"; break;
    }
    out += class_name;
    if (kind == Kind::pathdict) {
        for (const auto& step : path) out += "." + step;
    } else {
        out += "." + attr;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Catalog

void Catalog::add_class(ClassDef def) { classes_.push_back(std::move(def)); }

void Catalog::add_index(IndexDecl decl) { indexes_.push_back(std::move(decl)); }

void Catalog::register_cost(const std::string& class_name, const std::string& method,
                            int64_t cost, const std::string& equiv_group) {
    if (finalized_ && !has_class(class_name))
        throw Error("cost declared for unknown class " + class_name);
    for (auto& c : costs_) {
        if (c.class_name == class_name && c.method == method) {
            c.cost = cost;
            c.equiv_group = equiv_group;
            return;
        }
    }
    costs_.push_back({class_name, method, cost, equiv_group});
}

const ClassDef* Catalog::find_class(const std::string& name) const {
    auto it = index_by_name_.find(name);
    if (it == index_by_name_.end()) return nullptr;
    return &classes_[it->second];
}

void Catalog::finalize() {
    index_by_name_.clear();
    for (uint32_t i = 0; i < classes_.size(); ++i) {
        if (!index_by_name_.emplace(classes_[i].name, i).second)
            throw Error("duplicate class " + classes_[i].name);
    }

    for (const auto& def : classes_) {
        if (!def.super.empty() && !index_by_name_.count(def.super))
            throw Error("unknown superclass " + def.super + " of " + def.name);
        // Walk to a root; if the chain exceeds the class count it must cycle.
        size_t hops = 0;
        for (const ClassDef* cur = &def; !cur->super.empty();
             cur = &classes_[index_by_name_.at(cur->super)]) {
            if (++hops > classes_.size())
                throw Error("inheritance cycle involving " + def.name);
        }
    }

    // Attribute checks over the flattened (inherited + own) attribute sets.
    for (const auto& def : classes_) {
        auto attrs = all_attributes(def.name);
        for (size_t i = 0; i < attrs.size(); ++i)
            for (size_t j = i + 1; j < attrs.size(); ++j)
                if (attrs[i].name == attrs[j].name)
                    throw Error("duplicate attribute " + attrs[i].name + " in " +
                                def.name);
        for (const auto& attr : def.attributes) {
            const std::string& target = attr.type.target;
            if ((attr.type.kind == AttrType::Kind::reference ||
                 (attr.type.kind == AttrType::Kind::collection &&
                  attr.type.element_is_reference)) &&
                !index_by_name_.count(target))
                throw Error("attribute " + def.name + "." + attr.name +
                            " references unknown class " + target);
        }
    }

    // Preorder numbering over the declaration-ordered forest.
    std::map<std::string, std::vector<std::string>> children;
    std::vector<std::string> roots;
    for (const auto& def : classes_) {
        if (def.super.empty())
            roots.push_back(def.name);
        else
            children[def.super].push_back(def.name);
    }
    intervals_.clear();
    class_by_code_.assign(classes_.size(), "");
    uint32_t next = 0;
    auto number = [&](auto&& self, const std::string& name) -> uint32_t {
        uint32_t lo = next++;
        class_by_code_[lo] = name;
        uint32_t hi = lo;
        auto it = children.find(name);
        if (it != children.end())
            for (const auto& child : it->second) hi = self(self, child);
        intervals_[name] = {lo, hi};
        return hi;
    };
    for (const auto& root : roots) number(number, root);

    finalized_ = true;

    std::set<std::string> index_names;
    for (const auto& idx : indexes_) {
        if (!index_names.insert(idx.name()).second)
            throw Error("duplicate index declaration " + idx.name());
        if (!has_class(idx.class_name))
            throw Error("index on unknown class " + idx.class_name);
        if (idx.kind == IndexDecl::Kind::pathdict) {
            std::string cur = idx.class_name;
            for (size_t s = 0; s < idx.path.size(); ++s) {
                const Attribute* attr = find_attribute(cur, idx.path[s]);
                if (!attr)
                    throw Error("path step " + cur + "." + idx.path[s] +
                                " does not exist");
                bool is_ref = attr->type.kind == AttrType::Kind::reference ||
                              (attr->type.kind == AttrType::Kind::collection &&
                               attr->type.element_is_reference);
                if (is_ref) {
                    cur = attr->type.target;
                } else if (attr->type.kind == AttrType::Kind::collection) {
                    if (s + 1 != idx.path.size())
                        throw Error("value collection " + cur + "." + idx.path[s] +
                                    " only allowed as the final path step");
                } else {
                    throw Error("path step " + cur + "." + idx.path[s] +
                                " is not a reference or collection");
                }
            }
        } else {
            if (!find_attribute(idx.class_name, idx.attr))
                throw Error("index on unknown attribute " + idx.class_name + "." +
                            idx.attr);
        }
    }
    for (const auto& c : costs_)
        if (!has_class(c.class_name))
            throw Error("cost declared for unknown class " + c.class_name);
}

bool Catalog::has_class(const std::string& name) const {
    return index_by_name_.count(name) > 0;
}

const ClassDef& Catalog::cls(const std::string& name) const {
    const ClassDef* def = find_class(name);
    if (!def) throw Error("unknown class " + name);
    return *def;
}

std::vector<Attribute> Catalog::all_attributes(const std::string& name) const {
    std::vector<const ClassDef*> chain;
    for (const ClassDef* cur = &cls(name);; cur = &cls(cur->super)) {
        chain.push_back(cur);
        if (cur->super.empty()) break;
    }
    std::vector<Attribute> out;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
        for (const auto& attr : (*it)->attributes) out.push_back(attr);
    return out;
}

const Attribute* Catalog::find_attribute(const std::string& class_name,
                                         const std::string& attr) const {
    for (const ClassDef* cur = &cls(class_name);; cur = &cls(cur->super)) {
        for (const auto& a : cur->attributes)
            if (a.name == attr) return &a;
        if (cur->super.empty()) return nullptr;
    }
}

std::optional<std::string> Catalog::attribute_owner(const std::string& class_name,
                                                    const std::string& attr) const {
    for (const ClassDef* cur = &cls(class_name);; cur = &cls(cur->super)) {
        for (const auto& a : cur->attributes)
            if (a.name == attr) return cur->name;
        if (cur->super.empty()) return std::nullopt;
    }
}

uint32_t Catalog::typecode(const std::string& name) const { return interval(name).lo; }

TypeInterval Catalog::interval(const std::string& name) const {
    auto it = intervals_.find(name);
    if (it == intervals_.end()) throw Error("unknown class " + name);
    return it->second;
}

const std::string& Catalog::class_of_code(uint32_t code) const {
    if (code >= class_by_code_.size()) throw Error("typecode out of range");
    return class_by_code_[code];
}

bool Catalog::is_subclass(const std::string& sub, const std::string& super) const {
    return interval(super).contains(interval(sub));
}

std::vector<std::string> Catalog::subtree_classes(const std::string& name) const {
    TypeInterval iv = interval(name);
    std::vector<std::string> out;
    for (uint32_t code = iv.lo; code <= iv.hi; ++code)
        out.push_back(class_by_code_[code]);
    return out;
}

int64_t Catalog::method_cost(const std::string& class_name,
                             const std::string& method) const {
    for (const auto& c : costs_)
        if (c.class_name == class_name && c.method == method) return c.cost;
    return kDefaultMethodCost;
}

std::string Catalog::cheapest_equivalent(const std::string& class_name,
                                         const std::string& method) const {
    const CostDecl* own = nullptr;
    for (const auto& c : costs_)
        if (c.class_name == class_name && c.method == method) own = &c;
    if (!own || own->equiv_group.empty()) return method;
    const CostDecl* best = own;
    for (const auto& c : costs_)
        if (c.class_name == class_name && c.equiv_group == own->equiv_group &&
            c.cost < best->cost)
            best = &c;
    return best->method;
}

std::string Catalog::print() const {
    std::ostringstream out;
    for (const auto& def : classes_) {
        out << "class " << def.name;
        if (!def.super.empty()) out << " extends " << def.super;
        out << " {\n";
        for (const auto& attr : def.attributes) {
            out << "  " << attr.name << ": ";
            const AttrType& t = attr.type;
            switch (t.kind) {
                case AttrType::Kind::scalar: out << scalar_name(t.scalar); break;
                case AttrType::Kind::reference:
                    out << "reference(" << t.target << ")";
                    break;
                case AttrType::Kind::collection:
                    out << "collection(";
                    if (t.element_is_reference)
                        out << "reference(" << t.target << ")";
                    else
                        out << scalar_name(t.scalar);
                    if (t.cardinality == Cardinality::n_to_m) out << ", N:M";
                    out << ")";
                    break;
            }
            out << ";\n";
        }
        out << "}\n";
    }
    for (const auto& idx : indexes_) {
        out << "index ";
        switch (idx.kind) {
            case IndexDecl::Kind::btree:
                out << "btree(" << idx.class_name << "." << idx.attr << ")";
                break;
            case IndexDecl::Kind::rtree:
                out << "rtree(" << idx.class_name << "." << idx.attr << ")";
                break;
            case IndexDecl::Kind::mt:
                out << "mt(" << idx.class_name << ", " << idx.attr << ")";
                break;
            case IndexDecl::Kind::pathdict:
                out << "pathdict(" << idx.class_name;
                for (const auto& step : idx.path) out << "." << step;
                out << ")";
                break;
        }
        out << "\n";
    }
    for (const auto& c : costs_) {
        out << "cost " << c.class_name << "." << c.method << " = " << c.cost;
        if (!c.equiv_group.empty()) out << " equiv " << c.equiv_group;
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// DSL parser

namespace {

struct Token {
    enum class Kind { ident, number, punct, end };
    Kind kind = Kind::end;
    std::string text;
    int64_t number = 0;
    int line = 1;
    int column = 1;
};

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
            } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
        tok_ = Token{};
        tok_.line = line_;
        tok_.column = col_;
        if (pos_ >= text_.size()) {
            tok_.kind = Token::Kind::end;
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '_' || text_[pos_] == '-'))
                ++pos_;
            tok_.kind = Token::Kind::ident;
            tok_.text = std::string(text_.substr(start, pos_ - start));
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            tok_.kind = Token::Kind::number;
            tok_.text = std::string(text_.substr(start, pos_ - start));
            tok_.number = std::stoll(tok_.text);
        } else {
            tok_.kind = Token::Kind::punct;
            tok_.text = std::string(1, c);
            ++pos_;
        }
        col_ += static_cast<int>(tok_.text.size());
    }

    std::string_view text_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token tok_;
};

class SchemaParser {
public:
    explicit SchemaParser(std::string_view text) : lex_(text) {}

    Catalog parse() {
        Catalog catalog;
        while (lex_.peek().kind != Token::Kind::end) {
            std::string word = expect_ident();
            if (word == "class")
                catalog.add_class(parse_class());
            else if (word == "index")
                catalog.add_index(parse_index());
            else if (word == "cost")
                parse_cost(catalog);
            else
                lex_.fail("expected 'class', 'index' or 'cost', got '" + word + "'");
        }
        catalog.finalize();
        return catalog;
    }

private:
    std::string expect_ident() {
        if (lex_.peek().kind != Token::Kind::ident)
            lex_.fail("expected identifier, got '" + lex_.peek().text + "'");
        return lex_.next().text;
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

    std::optional<ScalarType> scalar_of(const std::string& word) {
        if (word == "integer") return ScalarType::integer;
        if (word == "real") return ScalarType::real;
        if (word == "string") return ScalarType::text;
        if (word == "polygon") return ScalarType::polygon;
        if (word == "polyline") return ScalarType::polyline;
        if (word == "point") return ScalarType::point;
        if (word == "dna") return ScalarType::dna;
        if (word == "protein") return ScalarType::protein;
        return std::nullopt;
    }

    AttrType parse_type() {
        std::string word = expect_ident();
        AttrType t;
        if (auto s = scalar_of(word)) {
            t.kind = AttrType::Kind::scalar;
            t.scalar = *s;
            return t;
        }
        if (word == "reference") {
            expect_punct("(");
            t.kind = AttrType::Kind::reference;
            t.target = expect_ident();
            expect_punct(")");
            return t;
        }
        if (word == "collection") {
            expect_punct("(");
            t.kind = AttrType::Kind::collection;
            std::string elem = expect_ident();
            if (auto s = scalar_of(elem)) {
                t.scalar = *s;
                t.element_is_reference = false;
            } else if (elem == "reference") {
                expect_punct("(");
                t.target = expect_ident();
                expect_punct(")");
                t.element_is_reference = true;
            } else {
                lex_.fail("unknown collection element type '" + elem + "'");
            }
            if (accept_punct(",")) t.cardinality = parse_cardinality();
            expect_punct(")");
            return t;
        }
        lex_.fail("unknown type '" + word + "'");
    }

    Cardinality parse_cardinality() {
        // Either 1:N or N:M.
        if (lex_.peek().kind == Token::Kind::number) {
            if (lex_.next().number != 1) lex_.fail("expected cardinality 1:N or N:M");
            expect_punct(":");
            if (expect_ident() != "N") lex_.fail("expected cardinality 1:N");
            return Cardinality::one_to_n;
        }
        if (expect_ident() != "N") lex_.fail("expected cardinality 1:N or N:M");
        expect_punct(":");
        if (expect_ident() != "M") lex_.fail("expected cardinality N:M");
        return Cardinality::n_to_m;
    }

    ClassDef parse_class() {
        ClassDef def;
        def.name = expect_ident();
        if (lex_.peek().kind == Token::Kind::ident && lex_.peek().text == "extends") {
            lex_.next();
            def.super = expect_ident();
        }
        expect_punct("{");
        while (!accept_punct("}")) {
            Attribute attr;
            attr.name = expect_ident();
            expect_punct(":");
            attr.type = parse_type();
            expect_punct(";");
            def.attributes.push_back(std::move(attr));
        }
        return def;
    }

    IndexDecl parse_index() {
        IndexDecl decl;
        std::string kind = expect_ident();
        if (kind == "btree")
            decl.kind = IndexDecl::Kind::btree;
        else if (kind == "rtree")
            decl.kind = IndexDecl::Kind::rtree;
        else if (kind == "pathdict")
            decl.kind = IndexDecl::Kind::pathdict;
        else if (kind == "mt")
            decl.kind = IndexDecl::Kind::mt;
        else
            lex_.fail("unknown index kind '" + kind + "'");
        expect_punct("(");
        decl.class_name = expect_ident();
        if (decl.kind == IndexDecl::Kind::mt) {
            expect_punct(",");
            decl.attr = expect_ident();
        } else if (decl.kind == IndexDecl::Kind::pathdict) {
            expect_punct(".");
            decl.path.push_back(expect_ident());
            while (accept_punct(".")) decl.path.push_back(expect_ident());
        } else {
            expect_punct(".");
            decl.attr = expect_ident();
        }
        expect_punct(")");
        return decl;
    }

    void parse_cost(Catalog& catalog) {
        std::string class_name = expect_ident();
        expect_punct(".");
        std::string method = expect_ident();
        expect_punct("=");
        if (lex_.peek().kind != Token::Kind::number) lex_.fail("expected cost constant");
        int64_t cost = lex_.next().number;
        std::string group;
        if (lex_.peek().kind == Token::Kind::ident && lex_.peek().text == "equiv") {
            lex_.next();
            group = expect_ident();
        }
        catalog.register_cost(class_name, method, cost, group);
    }

    Lexer lex_;
};

}  // namespace

Catalog parse_schema(std::string_view text) { return SchemaParser(text).parse(); }

}  // namespace mddb::cat
