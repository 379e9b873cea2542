#include <algorithm>
#include <sstream>

#include "mddb/exec.hpp"
#include "mddb/pathdict.hpp"

namespace mddb::query {

using cat::IndexDecl;
using mddb::Oid;

namespace {

void collect_deps(const Expr& e, std::set<int>& out) {
    if (e.kind == Expr::Kind::var) out.insert(e.var_index);
    if (e.base) collect_deps(*e.base, out);
    for (const auto& a : e.args) collect_deps(*a, out);
    if (e.lhs) collect_deps(*e.lhs, out);
    if (e.rhs) collect_deps(*e.rhs, out);
}

struct Conjunct {
    const Expr* e = nullptr;
    std::set<int> deps;
    bool applied = false;
};

void flatten_conjuncts(const Expr* e, std::vector<Conjunct>& out) {
    if (!e) return;
    if (e->kind == Expr::Kind::binary && e->op == Expr::Op::and_) {
        flatten_conjuncts(e->lhs.get(), out);
        flatten_conjuncts(e->rhs.get(), out);
        return;
    }
    Conjunct c;
    c.e = e;
    collect_deps(*e, c.deps);
    out.push_back(std::move(c));
}

// e as a simple attribute access on binding `var` (var.attr).
const Expr* simple_field(const Expr& e, int var) {
    if (e.kind != Expr::Kind::field) return nullptr;
    if (e.base->kind != Expr::Kind::var || e.base->var_index != var) return nullptr;
    return &e;
}

// e as a pure reference chain var.a1.a2...ak; returns the attribute names.
bool reference_chain(const Expr& e, int var, std::vector<std::string>& chain) {
    if (e.kind == Expr::Kind::var)
        return e.var_index == var;
    if (e.kind != Expr::Kind::field) return false;
    if (!reference_chain(*e.base, var, chain)) return false;
    chain.push_back(e.name);
    return true;
}

Expr::Op flip(Expr::Op op) {
    switch (op) {
        case Expr::Op::lt: return Expr::Op::gt;
        case Expr::Op::le: return Expr::Op::ge;
        case Expr::Op::gt: return Expr::Op::lt;
        case Expr::Op::ge: return Expr::Op::le;
        default: return op;
    }
}

bool is_cmp(Expr::Op op) {
    return op == Expr::Op::eq || op == Expr::Op::lt || op == Expr::Op::le ||
           op == Expr::Op::gt || op == Expr::Op::ge;
}

// Rewrites catalog-declared method aliases to the cheapest member of their
// equivalence group.
void substitute_methods(Expr& e, const cat::Catalog& catalog) {
    if (e.base) substitute_methods(*e.base, catalog);
    for (auto& a : e.args) substitute_methods(*a, catalog);
    if (e.lhs) substitute_methods(*e.lhs, catalog);
    if (e.rhs) substitute_methods(*e.rhs, catalog);
    if (e.kind != Expr::Kind::method || !e.base) return;
    if (e.name == "blast") return;
    const Expr* owner =
        e.base->kind == Expr::Kind::field ? e.base->base.get() : e.base.get();
    if (owner && owner->type.base == SemType::Base::object)
        e.name = catalog.cheapest_equivalent(owner->type.class_name, e.name);
}

struct Planner {
    const QueryAst& ast;
    const store::Database& db;
    const PlannerConfig& config;
    const cat::Catalog& catalog;

    std::vector<Conjunct> conjuncts;
    std::vector<double> base_card;

    Planner(const QueryAst& ast, const store::Database& db, const PlannerConfig& config)
        : ast(ast), db(db), config(config), catalog(db.catalog()) {
        flatten_conjuncts(ast.where.get(), conjuncts);
        base_card.resize(ast.bindings.size());
        for (size_t i = 0; i < ast.bindings.size(); ++i) {
            const Binding& b = ast.bindings[i];
            base_card[i] = b.is_extent
                               ? std::max<double>(
                                     1, double(db.extent_size(b.extent_class, true)))
                               : config.collection_fanout;
        }
    }

    // ---- index availability --------------------------------------------

    const IndexDecl* find_index(IndexDecl::Kind kind, const std::string& class_name,
                                const std::string& attr) const {
        for (const auto& decl : catalog.indexes()) {
            if (decl.kind != kind || decl.attr != attr) continue;
            if (!catalog.is_subclass(class_name, decl.class_name)) continue;
            if (!config.index_allowed(decl.name())) continue;
            return &decl;
        }
        return nullptr;
    }

    const IndexDecl* find_pathdict(const std::string& class_name,
                                   const std::vector<std::string>& path) const {
        for (const auto& decl : catalog.indexes()) {
            if (decl.kind != IndexDecl::Kind::pathdict) continue;
            if (decl.path != path) continue;
            if (!catalog.is_subclass(class_name, decl.class_name)) continue;
            if (!config.index_allowed(decl.name())) continue;
            return &decl;
        }
        return nullptr;
    }

    double eq_distinct(const std::string& class_name, const std::string& attr) const {
        if (const store::BTree* tree = [&]() -> const store::BTree* {
                for (const auto& decl : catalog.indexes())
                    if (decl.kind == IndexDecl::Kind::btree && decl.attr == attr &&
                        catalog.is_subclass(class_name, decl.class_name))
                        return db.btree(decl.class_name, decl.attr);
                return nullptr;
            }())
            return std::max<double>(1, double(tree->distinct_keys()));
        return config.default_distinct;
    }

    double conj_selectivity(const Conjunct& c, int var) const {
        const Expr& e = *c.e;
        if (e.kind == Expr::Kind::binary) {
            if (e.op == Expr::Op::eq) {
                const Binding& b = ast.bindings[var];
                if (const Expr* f = simple_field(*e.lhs, var))
                    return 1.0 / eq_distinct(b.extent_class, f->name);
                if (const Expr* f = simple_field(*e.rhs, var))
                    return 1.0 / eq_distinct(b.extent_class, f->name);
                return 1.0 / config.default_distinct;
            }
            if (is_cmp(e.op)) return config.range_selectivity;
            if (e.op == Expr::Op::overlaps || e.op == Expr::Op::inside)
                return config.spatial_selectivity;
            if (e.op == Expr::Op::in) {
                if (e.rhs->kind == Expr::Kind::method && e.rhs->name == "blast")
                    return config.blast_selectivity;
                return 0.5;
            }
        }
        return 0.5;
    }

    // ---- access path options --------------------------------------------

    struct LeafPlan {
        PhysOpPtr op;
        double rows = 0;
        double cost_rank = 0;  // rows examined before refinement
        std::vector<size_t> consumed;
    };

    cat::ScalarType attr_scalar(const std::string& class_name,
                                const std::string& attr) const {
        const cat::Attribute* a = catalog.find_attribute(class_name, attr);
        return a ? a->type.scalar : cat::ScalarType::integer;
    }

    // Best way to produce binding `var` with no outer bindings available
    // beyond constants: an index scan when a constant conjunct allows it,
    // otherwise a full extent scan.
    LeafPlan build_leaf(int var) const {
        const Binding& b = ast.bindings[var];
        LeafPlan best;
        best.op = PhysOp::make(PhysOp::Kind::extent_scan);
        best.op->out_var = var;
        best.op->class_name = b.extent_class;
        best.rows = base_card[var];
        best.cost_rank = base_card[var];
        best.op->est_rows = best.rows;

        for (size_t ci = 0; ci < conjuncts.size(); ++ci) {
            const Conjunct& c = conjuncts[ci];
            if (c.applied || c.deps != std::set<int>{var}) continue;
            const Expr& e = *c.e;
            if (e.kind != Expr::Kind::binary) continue;

            // var.attr CMP constant
            if (is_cmp(e.op)) {
                const Expr* field = simple_field(*e.lhs, var);
                const Expr* constant = e.rhs.get();
                Expr::Op op = e.op;
                if (!field) {
                    field = simple_field(*e.rhs, var);
                    constant = e.lhs.get();
                    op = flip(e.op);
                }
                std::set<int> cdeps;
                if (field) collect_deps(*constant, cdeps);
                if (field && cdeps.empty()) {
                    const IndexDecl* btree =
                        find_index(IndexDecl::Kind::btree, b.extent_class, field->name);
                    const IndexDecl* mt =
                        btree ? nullptr
                              : find_index(IndexDecl::Kind::mt, b.extent_class,
                                           field->name);
                    if (btree || mt) {
                        double sel = op == Expr::Op::eq
                                         ? 1.0 / eq_distinct(b.extent_class, field->name)
                                         : config.range_selectivity;
                        double rows = base_card[var] * sel;
                        if (rows < best.cost_rank) {
                            LeafPlan lp;
                            lp.op = PhysOp::make(btree ? PhysOp::Kind::btree_scan
                                                       : PhysOp::Kind::mt_scan);
                            lp.op->out_var = var;
                            lp.op->class_name = b.extent_class;
                            lp.op->index_name = (btree ? btree : mt)->name();
                            lp.op->attr = field->name;
                            lp.op->attr_scalar =
                                attr_scalar(b.extent_class, field->name);
                            if (op == Expr::Op::eq) {
                                lp.op->lo = constant->clone();
                                lp.op->hi = constant->clone();
                            } else if (op == Expr::Op::lt || op == Expr::Op::le) {
                                lp.op->hi = constant->clone();
                                lp.op->hi_strict = op == Expr::Op::lt;
                            } else {
                                lp.op->lo = constant->clone();
                                lp.op->lo_strict = op == Expr::Op::gt;
                            }
                            lp.rows = rows;
                            lp.cost_rank = rows;
                            lp.op->est_rows = rows;
                            // Equality through either structure is exact;
                            // ranges keep the conjunct as a refinement filter.
                            if (op == Expr::Op::eq) lp.consumed = {ci};
                            best = std::move(lp);
                        }
                        continue;
                    }
                }
            }

            // var.attr overlaps/inside constant-geometry
            if (e.op == Expr::Op::overlaps || e.op == Expr::Op::inside) {
                for (bool lhs_side : {true, false}) {
                    const Expr& mine = lhs_side ? *e.lhs : *e.rhs;
                    const Expr& other = lhs_side ? *e.rhs : *e.lhs;
                    const Expr* field = simple_field(mine, var);
                    std::set<int> odeps;
                    collect_deps(other, odeps);
                    if (!field || !odeps.empty()) continue;
                    const IndexDecl* rtree =
                        find_index(IndexDecl::Kind::rtree, b.extent_class, field->name);
                    if (!rtree) continue;
                    double rows = base_card[var] * config.spatial_selectivity;
                    if (rows >= best.cost_rank) continue;
                    LeafPlan lp;
                    lp.op = PhysOp::make(PhysOp::Kind::rtree_window);
                    lp.op->out_var = var;
                    lp.op->class_name = b.extent_class;
                    lp.op->index_name = rtree->name();
                    lp.op->attr = field->name;
                    lp.op->probe = other.clone();
                    lp.rows = rows;
                    lp.cost_rank = rows;
                    lp.op->est_rows = rows;
                    // MBR filter only: the conjunct stays as refinement.
                    best = std::move(lp);
                }
                continue;
            }

            // var.path.attr CMP constant over a declared path dictionary
            if (is_cmp(e.op)) {
                const Expr* lhs = e.lhs.get();
                const Expr* constant = e.rhs.get();
                Expr::Op op = e.op;
                std::set<int> cdeps;
                collect_deps(*constant, cdeps);
                if (!cdeps.empty() || lhs->kind != Expr::Kind::field) continue;
                std::vector<std::string> chain;
                if (!reference_chain(*lhs->base, var, chain) || chain.empty()) continue;
                const IndexDecl* pd = find_pathdict(b.extent_class, chain);
                if (!pd) continue;
                const hidx::PathDictionary* dict = db.path_dict(pd->name());
                if (!dict || !dict->has_attr_index(lhs->name)) continue;
                double sel = op == Expr::Op::eq ? 1.0 / config.default_distinct
                                                : config.range_selectivity;
                double rows = base_card[var] * sel;
                if (rows >= best.cost_rank) continue;
                LeafPlan lp;
                lp.op = PhysOp::make(PhysOp::Kind::pd_scan);
                lp.op->out_var = var;
                lp.op->class_name = b.extent_class;
                lp.op->index_name = pd->name();
                lp.op->attr = lhs->name;
                lp.op->attr_scalar = attr_scalar(dict->terminal_class(), lhs->name);
                if (op == Expr::Op::eq) {
                    lp.op->lo = constant->clone();
                    lp.op->hi = constant->clone();
                    lp.consumed = {ci};
                } else if (op == Expr::Op::lt || op == Expr::Op::le) {
                    lp.op->hi = constant->clone();
                } else {
                    lp.op->lo = constant->clone();
                }
                lp.rows = rows;
                lp.cost_rank = rows;
                lp.op->est_rows = rows;
                best = std::move(lp);
            }
        }
        return best;
    }

    // ---- stepwise plan construction ---------------------------------------

    struct StepState {
        PhysOpPtr root;
        double rows = 1;
        double total = 0;  // accumulated intermediate cardinality
        std::set<int> bound;
        std::vector<bool> applied;
    };

    void apply_pushdowns(StepState& st) {
        for (size_t ci = 0; ci < conjuncts.size(); ++ci) {
            if (st.applied[ci]) continue;
            const Conjunct& c = conjuncts[ci];
            if (!std::includes(st.bound.begin(), st.bound.end(), c.deps.begin(),
                               c.deps.end()))
                continue;
            st.applied[ci] = true;
            const Expr& e = *c.e;

            // Path-equality through the dictionary when both sides are bound.
            if (e.kind == Expr::Kind::binary && e.op == Expr::Op::eq) {
                auto side_chain = [&](const Expr& side, int& var,
                                      std::vector<std::string>& chain) {
                    chain.clear();
                    if (side.kind != Expr::Kind::field) return false;
                    for (int v : c.deps) {
                        chain.clear();
                        if (reference_chain(side, v, chain)) {
                            var = v;
                            return true;
                        }
                    }
                    return false;
                };
                int lv = -1, rv = -1;
                std::vector<std::string> lchain, rchain;
                if (side_chain(*e.lhs, lv, lchain) && side_chain(*e.rhs, rv, rchain) &&
                    lchain == rchain && !lchain.empty()) {
                    const IndexDecl* pd =
                        find_pathdict(ast.bindings[lv].extent_class, lchain);
                    const IndexDecl* pd2 =
                        find_pathdict(ast.bindings[rv].extent_class, rchain);
                    if (pd && pd2 && pd == pd2) {
                        auto op = PhysOp::make(PhysOp::Kind::pd_scan);
                        op->index_name = pd->name();
                        op->member = std::make_unique<Expr>();
                        op->member->kind = Expr::Kind::var;
                        op->member->var_index = lv;
                        op->member->name = ast.bindings[lv].var;
                        op->member->type = ast.bindings[lv].element_type;
                        op->receiver = std::make_unique<Expr>();
                        op->receiver->kind = Expr::Kind::var;
                        op->receiver->var_index = rv;
                        op->receiver->name = ast.bindings[rv].var;
                        op->receiver->type = ast.bindings[rv].element_type;
                        op->probe = op->member->clone();
                        op->predicate = e.clone();
                        op->children.push_back(std::move(st.root));
                        st.rows *= conj_selectivity(c, lv);
                        op->est_rows = st.rows;
                        st.root = std::move(op);
                        st.total += st.rows;
                        continue;
                    }
                }
            }

            // Blast membership as an explicit probe (literal threshold).
            if (e.kind == Expr::Kind::binary && e.op == Expr::Op::in &&
                e.rhs->kind == Expr::Kind::method && e.rhs->name == "blast" &&
                e.rhs->args[0]->kind == Expr::Kind::literal) {
                auto op = PhysOp::make(PhysOp::Kind::blast_probe);
                op->member = e.lhs->clone();
                op->receiver = e.rhs->base->clone();
                op->class_name = e.rhs->base->base->type.class_name;
                op->attr = e.rhs->base->name;
                op->threshold = e.rhs->args[0]->value.as_int();
                op->children.push_back(std::move(st.root));
                st.rows *= config.blast_selectivity;
                op->est_rows = st.rows;
                st.root = std::move(op);
                st.total += st.rows;
                continue;
            }

            auto op = PhysOp::make(PhysOp::Kind::filter);
            op->predicate = e.clone();
            op->children.push_back(std::move(st.root));
            int any = c.deps.empty() ? -1 : *c.deps.begin();
            st.rows *= any >= 0 ? conj_selectivity(c, any) : 1.0;
            op->est_rows = st.rows;
            st.root = std::move(op);
            st.total += st.rows;
        }
    }

    // Adds binding `var` to the running plan, choosing the cheapest access.
    void add_binding(StepState& st, int var) {
        const Binding& b = ast.bindings[var];
        bool first = !st.root;

        if (!b.is_extent) {
            auto op = PhysOp::make(PhysOp::Kind::collection_bind);
            op->out_var = var;
            op->probe = b.source->clone();
            if (first) {
                // A dependent binding with no dependencies cannot exist; the
                // checker guarantees depends_on is bound first.
                throw Error("dependent binding ordered first");
            }
            op->children.push_back(std::move(st.root));
            st.rows *= config.collection_fanout;
            op->est_rows = st.rows;
            st.root = std::move(op);
            st.total += st.rows;
            st.bound.insert(var);
            apply_pushdowns(st);
            return;
        }

        struct Option {
            PhysOpPtr op;  // op consuming the child stream (nullptr = use leaf)
            LeafPlan leaf;
            double rows = 0;
            double cost = 0;
            std::vector<size_t> consumed;
            bool via_leaf = false;
        };
        std::optional<Option> best;
        auto consider = [&](Option opt) {
            if (!best || opt.rows < best->rows ||
                (opt.rows == best->rows && opt.cost < best->cost))
                best = std::move(opt);
        };

        // Leaf access (possibly under a nested-loop join).
        {
            Option opt;
            opt.leaf = build_leaf(var);
            opt.via_leaf = true;
            opt.rows = st.rows * opt.leaf.rows;
            opt.cost = st.rows * opt.leaf.cost_rank;
            opt.consumed = opt.leaf.consumed;
            consider(std::move(opt));
        }

        if (!first) {
            for (size_t ci = 0; ci < conjuncts.size(); ++ci) {
                const Conjunct& c = conjuncts[ci];
                if (c.applied) continue;
                const Expr& e = *c.e;
                // Remaining deps must be exactly {var}.
                std::set<int> rest;
                for (int d : c.deps)
                    if (!st.bound.count(d)) rest.insert(d);
                if (rest != std::set<int>{var}) continue;
                if (e.kind != Expr::Kind::binary) continue;

                // Spatial join: my side is var.attr with an rtree.
                if (e.op == Expr::Op::overlaps || e.op == Expr::Op::inside) {
                    for (bool mine_lhs : {true, false}) {
                        const Expr& mine = mine_lhs ? *e.lhs : *e.rhs;
                        const Expr& other = mine_lhs ? *e.rhs : *e.lhs;
                        const Expr* field = simple_field(mine, var);
                        if (!field) continue;
                        std::set<int> odeps;
                        collect_deps(other, odeps);
                        if (odeps.count(var)) continue;
                        const IndexDecl* rtree = find_index(
                            IndexDecl::Kind::rtree, b.extent_class, field->name);
                        if (!rtree) continue;
                        Option opt;
                        opt.op = PhysOp::make(PhysOp::Kind::spatial_join);
                        opt.op->out_var = var;
                        opt.op->class_name = b.extent_class;
                        opt.op->index_name = rtree->name();
                        opt.op->attr = field->name;
                        opt.op->probe = other.clone();
                        opt.op->spatial_pred = e.op;
                        opt.op->inner_is_lhs = mine_lhs;
                        opt.rows =
                            st.rows * base_card[var] * config.spatial_selectivity;
                        opt.cost = opt.rows;
                        opt.consumed = {ci};
                        consider(std::move(opt));
                    }
                }

                // Path-dictionary probe: var's full declared path equals a
                // bound object expression.
                if (e.op == Expr::Op::eq) {
                    for (bool mine_lhs : {true, false}) {
                        const Expr& mine = mine_lhs ? *e.lhs : *e.rhs;
                        const Expr& other = mine_lhs ? *e.rhs : *e.lhs;
                        std::vector<std::string> chain;
                        if (!reference_chain(mine, var, chain) || chain.empty())
                            continue;
                        std::set<int> odeps;
                        collect_deps(other, odeps);
                        if (odeps.count(var)) continue;
                        const IndexDecl* pd = find_pathdict(b.extent_class, chain);
                        if (!pd) continue;
                        const hidx::PathDictionary* dict = db.path_dict(pd->name());
                        if (!dict || dict->terminal_is_value()) continue;
                        double distinct = std::max<double>(
                            1, double(db.extent_size(dict->terminal_class(), true)));
                        Option opt;
                        opt.op = PhysOp::make(PhysOp::Kind::pd_scan);
                        opt.op->out_var = var;
                        opt.op->class_name = b.extent_class;
                        opt.op->index_name = pd->name();
                        opt.op->probe = other.clone();
                        opt.rows = st.rows * base_card[var] / distinct;
                        opt.cost = opt.rows;
                        opt.consumed = {ci};
                        consider(std::move(opt));
                    }
                }

                // Blast membership generating the member binding.
                if (e.op == Expr::Op::in && e.rhs->kind == Expr::Kind::method &&
                    e.rhs->name == "blast" &&
                    e.rhs->args[0]->kind == Expr::Kind::literal &&
                    e.lhs->kind == Expr::Kind::var && e.lhs->var_index == var) {
                    std::set<int> odeps;
                    collect_deps(*e.rhs, odeps);
                    if (odeps.count(var)) continue;
                    Option opt;
                    opt.op = PhysOp::make(PhysOp::Kind::blast_probe);
                    opt.op->out_var = var;
                    opt.op->class_name = e.rhs->base->base->type.class_name;
                    opt.op->attr = e.rhs->base->name;
                    // Hits come from the receiver's extent; the binding may
                    // cover a narrower subtree.
                    opt.op->index_name = b.extent_class;
                    opt.op->receiver = e.rhs->base->clone();
                    opt.op->threshold = e.rhs->args[0]->value.as_int();
                    opt.rows = st.rows * base_card[var] * config.blast_selectivity;
                    opt.cost = opt.rows;
                    opt.consumed = {ci};
                    consider(std::move(opt));
                }
            }
        }

        Option opt = std::move(*best);
        for (size_t ci : opt.consumed) st.applied[ci] = true;
        if (opt.via_leaf) {
            if (first) {
                st.root = std::move(opt.leaf.op);
            } else {
                auto join = PhysOp::make(PhysOp::Kind::nested_loop_join);
                join->children.push_back(std::move(st.root));
                join->children.push_back(std::move(opt.leaf.op));
                st.root = std::move(join);
            }
            st.rows = opt.rows;
            st.root->est_rows = st.rows;
        } else {
            opt.op->children.push_back(std::move(st.root));
            st.rows = opt.rows;
            opt.op->est_rows = st.rows;
            st.root = std::move(opt.op);
        }
        st.total += st.rows;
        st.bound.insert(var);
        apply_pushdowns(st);
    }

    StepState plan_order(const std::vector<int>& order) {
        StepState st;
        st.applied.assign(conjuncts.size(), false);
        for (int var : order) add_binding(st, var);
        return st;
    }

    bool order_valid(const std::vector<int>& order) const {
        std::set<int> bound;
        for (int var : order) {
            for (int dep : ast.bindings[var].depends_on)
                if (!bound.count(dep)) return false;
            bound.insert(var);
        }
        return true;
    }

    PhysicalPlan run() {
        size_t n = ast.bindings.size();
        std::vector<int> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);

        std::vector<int> best_order = order;
        double best_total = -1;
        if (n <= 7) {
            std::vector<int> perm = order;
            std::sort(perm.begin(), perm.end());
            do {
                if (!order_valid(perm)) continue;
                StepState st = plan_order(perm);
                if (best_total < 0 || st.total < best_total) {
                    best_total = st.total;
                    best_order = perm;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
        } else {
            // Too many bindings to enumerate; greedy ascending-cardinality.
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return base_card[a] < base_card[b];
            });
            if (!order_valid(order)) {
                // Fall back to declaration order, which is always valid.
                for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
            }
            best_order = order;
        }

        StepState st = plan_order(best_order);

        PhysicalPlan plan;
        plan.num_slots = n;
        plan.select_star = ast.select_star;

        auto project = PhysOp::make(PhysOp::Kind::project);
        if (ast.select_star) {
            for (size_t i = 0; i < n; ++i) {
                auto v = std::make_unique<Expr>();
                v->kind = Expr::Kind::var;
                v->var_index = static_cast<int>(i);
                v->name = ast.bindings[i].var;
                v->type = ast.bindings[i].element_type;
                plan.columns.push_back(ast.bindings[i].var);
                project->exprs.push_back(std::move(v));
            }
        } else {
            for (const auto& e : ast.select) {
                plan.columns.push_back(to_text(*e));
                project->exprs.push_back(e->clone());
            }
        }
        for (auto& e : project->exprs) substitute_methods(*e, catalog);
        std::function<void(PhysOp&)> subst_tree = [&](PhysOp& op) {
            for (auto& c : op.children) subst_tree(*c);
            for (ExprPtr* p : {&op.lo, &op.hi, &op.predicate, &op.probe, &op.member,
                               &op.receiver})
                if (*p) substitute_methods(**p, catalog);
        };
        if (st.root) subst_tree(*st.root);

        project->est_rows = st.rows;
        project->children.push_back(std::move(st.root));
        if (ast.distinct) {
            auto d = PhysOp::make(PhysOp::Kind::distinct);
            d->est_rows = project->est_rows;
            d->children.push_back(std::move(project));
            plan.root = std::move(d);
        } else {
            plan.root = std::move(project);
        }
        return plan;
    }
};

const char* op_name(PhysOp::Kind k) {
    switch (k) {
        case PhysOp::Kind::extent_scan: return "ExtentScan";
        case PhysOp::Kind::btree_scan: return "BtreeScan";
        case PhysOp::Kind::mt_scan: return "MtScan";
        case PhysOp::Kind::pd_scan: return "PdScan";
        case PhysOp::Kind::rtree_window: return "RtreeWindow";
        case PhysOp::Kind::spatial_join: return "SpatialJoin";
        case PhysOp::Kind::nested_loop_join: return "NestedLoopJoin";
        case PhysOp::Kind::collection_bind: return "CollectionBind";
        case PhysOp::Kind::filter: return "Filter";
        case PhysOp::Kind::blast_probe: return "BlastProbe";
        case PhysOp::Kind::project: return "Project";
        case PhysOp::Kind::distinct: return "Distinct";
        case PhysOp::Kind::minus: return "Minus";
    }
    return "?";
}

}  // namespace

PhysicalPlan optimize(const QueryAst& ast, const store::Database& db,
                      const PlannerConfig& config) {
    if (ast.bindings.empty()) throw Error("query needs at least one binding");
    return Planner(ast, db, config).run();
}

std::string explain(const PhysicalPlan& plan) {
    std::ostringstream out;
    std::function<void(const PhysOp&, int)> walk = [&](const PhysOp& op, int depth) {
        for (const auto& c : op.children) walk(*c, depth + 1);
        out << std::string(static_cast<size_t>(depth), ' ') << op_name(op.kind);
        switch (op.kind) {
            case PhysOp::Kind::extent_scan: out << " " << op.class_name; break;
            case PhysOp::Kind::btree_scan:
            case PhysOp::Kind::mt_scan: {
                out << " " << op.index_name;
                if (op.lo && op.hi && to_text(*op.lo) == to_text(*op.hi))
                    out << " " << op.attr << " = " << to_text(*op.lo);
                else {
                    if (op.lo) out << " " << op.attr << " >= " << to_text(*op.lo);
                    if (op.hi) out << " " << op.attr << " <= " << to_text(*op.hi);
                }
                break;
            }
            case PhysOp::Kind::pd_scan:
                out << " " << op.index_name;
                if (!op.children.empty() && op.probe && op.member)
                    out << " filter " << to_text(*op.member) << " ~ "
                        << to_text(*op.receiver);
                else if (!op.children.empty())
                    out << " probe " << to_text(*op.probe);
                else
                    out << " " << op.attr;
                break;
            case PhysOp::Kind::rtree_window:
                out << " " << op.index_name << " window " << to_text(*op.probe);
                break;
            case PhysOp::Kind::spatial_join:
                out << " "
                    << (op.spatial_pred == Expr::Op::overlaps ? "overlaps" : "inside")
                    << " " << op.index_name << " probe " << to_text(*op.probe);
                break;
            case PhysOp::Kind::collection_bind: out << " " << to_text(*op.probe); break;
            case PhysOp::Kind::filter: out << " " << to_text(*op.predicate); break;
            case PhysOp::Kind::blast_probe:
                out << " " << (op.member ? to_text(*op.member) : "$" + std::to_string(op.out_var))
                    << " in " << to_text(*op.receiver) << ".blast(" << op.threshold
                    << ")";
                break;
            case PhysOp::Kind::project: {
                out << " ";
                for (size_t i = 0; i < op.exprs.size(); ++i) {
                    if (i) out << ", ";
                    out << to_text(*op.exprs[i]);
                }
                break;
            }
            default: break;
        }
        if (op.out_var >= 0) out << " -> $" << op.out_var;
        out << "  (est " << static_cast<uint64_t>(std::max(0.0, op.est_rows) + 0.5)
            << ")\n";
    };
    walk(*plan.root, 0);
    return out.str();
}

}  // namespace mddb::query
