#include "mddb/rtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mddb::sidx {

using geom::Rect;

namespace {

double intersection_area(const Rect& a, const Rect& b) {
    double w = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
    double h = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
    if (w <= 0 || h <= 0) return 0.0;
    return w * h;
}

double margin(const Rect& r) { return 2 * (r.width() + r.height()); }

double center_dist2(const Rect& a, const Rect& b) {
    auto ca = a.center();
    auto cb = b.center();
    double dx = ca.x - cb.x, dy = ca.y - cb.y;
    return dx * dx + dy * dy;
}

}  // namespace

Rect RTree::Node::mbr() const {
    Rect r = entries.front().rect;
    for (const Entry& e : entries) r = r.united(e.rect);
    return r;
}

uint64_t RTree::Node::lhv() const {
    uint64_t v = 0;
    for (const Entry& e : entries) v = std::max(v, e.hv);
    return v;
}

RTree::RTree(RTreeVariant variant, Params params)
    : variant_(variant), params_(params), root_(std::make_unique<Node>()) {
    if (params_.max_entries < 4) throw Error("rtree max fanout must be at least 4");
}

int RTree::min_entries() const {
    int m = static_cast<int>(params_.min_fill * params_.max_entries);
    return std::clamp(m, 1, (params_.max_entries + 1) / 2);
}

uint64_t RTree::hilbert_key(const Rect& r) const {
    return hilbert_key_clamped(r, params_.hilbert_order, params_.world);
}

int RTree::height() const {
    int h = 1;
    for (const Node* n = root_.get(); !n->leaf; n = n->entries.front().child.get()) ++h;
    return h;
}

// ---------------------------------------------------------------------------
// Shared path maintenance

namespace {

// Recomputes the parent entry rect (and LHV) for every node along the path,
// bottom-up. path[0] is the root.
void refresh_path(std::vector<RTree::Node*>& path) {
    for (size_t i = path.size(); i-- > 1;) {
        RTree::Node* parent = path[i - 1];
        for (auto& e : parent->entries) {
            if (e.child.get() == path[i]) {
                e.rect = path[i]->mbr();
                e.hv = path[i]->lhv();
                break;
            }
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Insertion

void RTree::insert(const SpatialEntry& e) {
    geom::validate(e.key);
    Entry entry{e.key, e.oid, nullptr, 0};
    if (variant_ == RTreeVariant::hilbert) {
        entry.hv = hilbert_key(e.key);
        hilbert_insert(std::move(entry));
    } else {
        rstar_insert(std::move(entry), 0, false);
    }
    ++count_;
}

RTree::Node* RTree::choose_subtree(const Rect& rect, int target_level,
                                   std::vector<Node*>& path) const {
    Node* node = root_.get();
    int level = height() - 1;
    path.push_back(node);
    while (level > target_level) {
        size_t best = 0;
        if (level == 1) {
            // Children are leaves: minimize overlap enlargement.
            double best_overlap = std::numeric_limits<double>::infinity();
            double best_growth = std::numeric_limits<double>::infinity();
            double best_area = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < node->entries.size(); ++i) {
                Rect enlarged = node->entries[i].rect.united(rect);
                double overlap = 0;
                for (size_t j = 0; j < node->entries.size(); ++j) {
                    if (j == i) continue;
                    overlap += intersection_area(enlarged, node->entries[j].rect) -
                               intersection_area(node->entries[i].rect,
                                                 node->entries[j].rect);
                }
                double growth = enlarged.area() - node->entries[i].rect.area();
                double area = node->entries[i].rect.area();
                if (std::tie(overlap, growth, area) <
                    std::tie(best_overlap, best_growth, best_area)) {
                    best_overlap = overlap;
                    best_growth = growth;
                    best_area = area;
                    best = i;
                }
            }
        } else {
            double best_growth = std::numeric_limits<double>::infinity();
            double best_area = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < node->entries.size(); ++i) {
                double growth =
                    node->entries[i].rect.united(rect).area() - node->entries[i].rect.area();
                double area = node->entries[i].rect.area();
                if (std::tie(growth, area) < std::tie(best_growth, best_area)) {
                    best_growth = growth;
                    best_area = area;
                    best = i;
                }
            }
        }
        node = node->entries[best].child.get();
        path.push_back(node);
        --level;
    }
    return node;
}

void RTree::rstar_insert(Entry entry, int target_level, bool forbid_reinsert) {
    std::vector<bool> reinserted(static_cast<size_t>(height()), forbid_reinsert);
    std::vector<Node*> path;
    Node* node = choose_subtree(entry.rect, target_level, path);
    node->entries.push_back(std::move(entry));
    refresh_path(path);
    if (node->entries.size() > static_cast<size_t>(max_entries()))
        rstar_overflow(node, target_level, path, reinserted);
}

void RTree::rstar_overflow(Node* node, int level, std::vector<Node*>& path,
                           std::vector<bool>& reinserted_at_level) {
    bool is_root = path.size() == 1;
    if (!is_root && level < static_cast<int>(reinserted_at_level.size()) &&
        !reinserted_at_level[level]) {
        reinserted_at_level[level] = true;
        // Forced reinsertion: strip the entries farthest from the node center
        // and insert them afresh, closest first.
        size_t p = std::max<size_t>(
            1, static_cast<size_t>(params_.reinsert_fraction * max_entries()));
        Rect node_mbr = node->mbr();
        std::stable_sort(node->entries.begin(), node->entries.end(),
                         [&](const Entry& a, const Entry& b) {
                             return center_dist2(a.rect, node_mbr) >
                                    center_dist2(b.rect, node_mbr);
                         });
        std::vector<Entry> removed;
        removed.reserve(p);
        for (size_t i = 0; i < p; ++i) removed.push_back(std::move(node->entries[i]));
        node->entries.erase(node->entries.begin(), node->entries.begin() + p);
        refresh_path(path);
        for (size_t i = removed.size(); i-- > 0;) {
            std::vector<Node*> fresh_path;
            Node* target = choose_subtree(removed[i].rect, level, fresh_path);
            target->entries.push_back(std::move(removed[i]));
            refresh_path(fresh_path);
            if (target->entries.size() > static_cast<size_t>(max_entries()))
                rstar_overflow(target, level, fresh_path, reinserted_at_level);
        }
        return;
    }

    std::unique_ptr<Node> sibling = rstar_split(node);
    if (is_root) {
        auto new_root = std::make_unique<Node>();
        new_root->leaf = false;
        Entry left{root_->mbr(), {}, std::move(root_), 0};
        left.hv = left.child->lhv();
        Entry right{sibling->mbr(), {}, std::move(sibling), 0};
        right.hv = right.child->lhv();
        new_root->entries.push_back(std::move(left));
        new_root->entries.push_back(std::move(right));
        root_ = std::move(new_root);
        return;
    }
    Node* parent = path[path.size() - 2];
    for (auto& e : parent->entries) {
        if (e.child.get() == node) {
            e.rect = node->mbr();
            e.hv = node->lhv();
            break;
        }
    }
    Entry extra{sibling->mbr(), {}, std::move(sibling), 0};
    extra.hv = extra.child->lhv();
    parent->entries.push_back(std::move(extra));
    path.pop_back();
    refresh_path(path);
    if (parent->entries.size() > static_cast<size_t>(max_entries()))
        rstar_overflow(parent, level + 1, path, reinserted_at_level);
}

std::unique_ptr<RTree::Node> RTree::rstar_split(Node* node) {
    const int m = min_entries();
    const int total = static_cast<int>(node->entries.size());

    // Axis selection by minimum margin sum over all candidate distributions.
    auto key_low = [](const Entry& e, int axis) {
        return axis == 0 ? e.rect.xmin : e.rect.ymin;
    };
    auto key_high = [](const Entry& e, int axis) {
        return axis == 0 ? e.rect.xmax : e.rect.ymax;
    };

    int best_axis = 0;
    bool best_by_lower = true;
    double best_margin = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 2; ++axis) {
        for (int by_lower = 0; by_lower < 2; ++by_lower) {
            std::vector<int> order(total);
            for (int i = 0; i < total; ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                const Entry& ea = node->entries[a];
                const Entry& eb = node->entries[b];
                double ka = by_lower ? key_low(ea, axis) : key_high(ea, axis);
                double kb = by_lower ? key_low(eb, axis) : key_high(eb, axis);
                if (ka != kb) return ka < kb;
                double sa = by_lower ? key_high(ea, axis) : key_low(ea, axis);
                double sb = by_lower ? key_high(eb, axis) : key_low(eb, axis);
                return sa < sb;
            });
            double margin_sum = 0;
            for (int k = m; k <= total - m; ++k) {
                Rect r1 = node->entries[order[0]].rect;
                for (int i = 1; i < k; ++i) r1 = r1.united(node->entries[order[i]].rect);
                Rect r2 = node->entries[order[k]].rect;
                for (int i = k + 1; i < total; ++i)
                    r2 = r2.united(node->entries[order[i]].rect);
                margin_sum += margin(r1) + margin(r2);
            }
            if (margin_sum < best_margin) {
                best_margin = margin_sum;
                best_axis = axis;
                best_by_lower = by_lower;
            }
        }
    }

    // Distribution selection on the chosen axis: minimum overlap, then area.
    std::vector<int> order(total);
    for (int i = 0; i < total; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const Entry& ea = node->entries[a];
        const Entry& eb = node->entries[b];
        double ka = best_by_lower ? key_low(ea, best_axis) : key_high(ea, best_axis);
        double kb = best_by_lower ? key_low(eb, best_axis) : key_high(eb, best_axis);
        if (ka != kb) return ka < kb;
        double sa = best_by_lower ? key_high(ea, best_axis) : key_low(ea, best_axis);
        double sb = best_by_lower ? key_high(eb, best_axis) : key_low(eb, best_axis);
        return sa < sb;
    });
    int best_k = m;
    double best_overlap = std::numeric_limits<double>::infinity();
    double best_area = std::numeric_limits<double>::infinity();
    for (int k = m; k <= total - m; ++k) {
        Rect r1 = node->entries[order[0]].rect;
        for (int i = 1; i < k; ++i) r1 = r1.united(node->entries[order[i]].rect);
        Rect r2 = node->entries[order[k]].rect;
        for (int i = k + 1; i < total; ++i) r2 = r2.united(node->entries[order[i]].rect);
        double overlap = intersection_area(r1, r2);
        double area = r1.area() + r2.area();
        if (std::tie(overlap, area) < std::tie(best_overlap, best_area)) {
            best_overlap = overlap;
            best_area = area;
            best_k = k;
        }
    }

    auto sibling = std::make_unique<Node>();
    sibling->leaf = node->leaf;
    std::vector<Entry> group1;
    group1.reserve(best_k);
    for (int i = 0; i < best_k; ++i) group1.push_back(std::move(node->entries[order[i]]));
    for (int i = best_k; i < total; ++i)
        sibling->entries.push_back(std::move(node->entries[order[i]]));
    node->entries = std::move(group1);
    return sibling;
}

// ---------------------------------------------------------------------------
// Hilbert variant

void RTree::hilbert_insert(Entry entry) {
    std::vector<Node*> path;
    Node* node = root_.get();
    path.push_back(node);
    while (!node->leaf) {
        size_t pick = node->entries.size() - 1;
        for (size_t i = 0; i < node->entries.size(); ++i) {
            if (node->entries[i].hv >= entry.hv) {
                pick = i;
                break;
            }
        }
        node = node->entries[pick].child.get();
        path.push_back(node);
    }
    auto pos = std::upper_bound(
        node->entries.begin(), node->entries.end(), entry.hv,
        [](uint64_t h, const Entry& e) { return h < e.hv; });
    node->entries.insert(pos, std::move(entry));
    refresh_path(path);
    if (node->entries.size() > static_cast<size_t>(max_entries()))
        hilbert_overflow(path, path.size() - 1);
}

// Resolves an overflow at path[depth] with a 2-to-3 policy: redistribute into
// one cooperating sibling when it has room, otherwise split the pair into
// three nodes. A root overflow splits the root in two under a new root.
void RTree::hilbert_overflow(std::vector<Node*>& path, size_t depth) {
    Node* node = path[depth];
    if (node->entries.size() <= static_cast<size_t>(max_entries())) return;

    if (depth == 0) {
        auto left = std::make_unique<Node>();
        left->leaf = node->leaf;
        size_t half = node->entries.size() / 2;
        for (size_t i = 0; i < half; ++i)
            left->entries.push_back(std::move(node->entries[i]));
        auto right = std::make_unique<Node>();
        right->leaf = node->leaf;
        for (size_t i = half; i < node->entries.size(); ++i)
            right->entries.push_back(std::move(node->entries[i]));
        node->leaf = false;
        node->entries.clear();
        Entry le{left->mbr(), {}, nullptr, left->lhv()};
        le.child = std::move(left);
        Entry re{right->mbr(), {}, nullptr, right->lhv()};
        re.child = std::move(right);
        node->entries.push_back(std::move(le));
        node->entries.push_back(std::move(re));
        return;
    }

    Node* parent = path[depth - 1];
    size_t idx = 0;
    while (parent->entries[idx].child.get() != node) ++idx;
    size_t first = idx;
    if (idx + 1 >= parent->entries.size()) first = idx - 1;
    Node* left_node = parent->entries[first].child.get();
    Node* right_node = parent->entries[first + 1].child.get();

    std::vector<Entry> merged;
    merged.reserve(left_node->entries.size() + right_node->entries.size());
    for (auto& e : left_node->entries) merged.push_back(std::move(e));
    for (auto& e : right_node->entries) merged.push_back(std::move(e));
    left_node->entries.clear();
    right_node->entries.clear();

    size_t groups =
        merged.size() <= 2 * static_cast<size_t>(max_entries()) ? 2 : 3;
    std::vector<Node*> targets{left_node, right_node};
    if (groups == 3) {
        auto fresh = std::make_unique<Node>();
        fresh->leaf = node->leaf;
        Entry extra{{}, {}, nullptr, 0};
        extra.child = std::move(fresh);
        parent->entries.insert(parent->entries.begin() + first + 2, std::move(extra));
        targets.push_back(parent->entries[first + 2].child.get());
    }

    size_t base = merged.size() / groups;
    size_t rem = merged.size() % groups;
    size_t at = 0;
    for (size_t g = 0; g < groups; ++g) {
        size_t take = base + (g < rem ? 1 : 0);
        for (size_t i = 0; i < take; ++i)
            targets[g]->entries.push_back(std::move(merged[at++]));
    }
    for (size_t g = 0; g < groups; ++g) {
        for (auto& e : parent->entries) {
            if (e.child.get() == targets[g]) {
                e.rect = targets[g]->mbr();
                e.hv = targets[g]->lhv();
            }
        }
    }
    path.resize(depth);
    refresh_path(path);
    if (parent->entries.size() > static_cast<size_t>(max_entries()))
        hilbert_overflow(path, depth - 1);
}

// ---------------------------------------------------------------------------
// Deletion

bool RTree::erase(const SpatialEntry& e) {
    // Locate the leaf holding an exact (key, oid) match.
    std::vector<Node*> path{root_.get()};
    std::vector<Node*> found;
    std::function<bool(Node*)> descend = [&](Node* node) -> bool {
        if (node->leaf) {
            for (const Entry& ent : node->entries)
                if (ent.rect == e.key && ent.oid == e.oid) {
                    found = path;
                    return true;
                }
            return false;
        }
        for (Entry& ent : node->entries) {
            if (!ent.rect.contains(e.key)) continue;
            path.push_back(ent.child.get());
            if (descend(ent.child.get())) return true;
            path.pop_back();
        }
        return false;
    };
    if (!descend(root_.get())) return false;

    Node* leaf = found.back();
    for (auto it = leaf->entries.begin(); it != leaf->entries.end(); ++it) {
        if (it->rect == e.key && it->oid == e.oid) {
            leaf->entries.erase(it);
            break;
        }
    }
    --count_;

    // Condense: dissolve underflowing nodes bottom-up, collecting orphans.
    std::vector<std::pair<Entry, int>> orphans;
    int level = 0;
    for (size_t d = found.size(); d-- > 1;) {
        Node* n = found[d];
        Node* parent = found[d - 1];
        if (n->entries.size() < static_cast<size_t>(min_entries())) {
            for (auto& ent : n->entries) orphans.emplace_back(std::move(ent), level);
            for (auto it = parent->entries.begin(); it != parent->entries.end(); ++it) {
                if (it->child.get() == n) {
                    parent->entries.erase(it);
                    break;
                }
            }
            found.erase(found.begin() + d);
        }
        ++level;
    }
    refresh_path(found);

    // Collapse a single-child root chain.
    while (!root_->leaf && root_->entries.size() == 1)
        root_ = std::move(root_->entries.front().child);
    if (!root_->leaf && root_->entries.empty()) {
        root_ = std::make_unique<Node>();
    }

    // Reinsert orphans at their original levels (leaf entries for hilbert).
    for (auto& [entry, lvl] : orphans) {
        if (variant_ == RTreeVariant::hilbert) {
            if (!entry.child) {
                hilbert_insert(std::move(entry));
            } else {
                std::vector<Entry> stack;
                stack.push_back(std::move(entry));
                while (!stack.empty()) {
                    Entry cur = std::move(stack.back());
                    stack.pop_back();
                    if (!cur.child) {
                        hilbert_insert(std::move(cur));
                    } else {
                        for (auto& sub : cur.child->entries)
                            stack.push_back(std::move(sub));
                    }
                }
            }
        } else {
            int target = entry.child ? lvl : 0;
            if (entry.child && height() - 1 < target) {
                // Tree shrank below the orphan's level: dissolve one step.
                std::vector<Entry> subs = std::move(entry.child->entries);
                bool sub_leaf = entry.child->leaf;
                for (auto& sub : subs)
                    rstar_insert(std::move(sub), sub_leaf ? 0 : target - 1, true);
            } else {
                rstar_insert(std::move(entry), target, true);
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Queries

void RTree::window_query(const Rect& r, const std::function<void(Oid)>& emit) const {
    geom::validate(r);
    std::function<void(const Node*)> walk = [&](const Node* node) {
        for (const Entry& e : node->entries) {
            if (!e.rect.intersects(r)) continue;
            if (node->leaf)
                emit(e.oid);
            else
                walk(e.child.get());
        }
    };
    walk(root_.get());
}

std::vector<Oid> RTree::window_query(const Rect& r) const {
    std::vector<Oid> out;
    window_query(r, [&](Oid oid) { out.push_back(oid); });
    return out;
}

void RTree::for_each_entry(const std::function<void(const SpatialEntry&)>& fn) const {
    std::function<void(const Node*)> walk = [&](const Node* node) {
        for (const Entry& e : node->entries) {
            if (node->leaf)
                fn({e.rect, e.oid});
            else
                walk(e.child.get());
        }
    };
    walk(root_.get());
}

RTree RTree::bulk_load_hilbert(std::vector<SpatialEntry> entries, Params params,
                               double fill_factor) {
    if (entries.empty()) throw Error("bulk load requires at least one entry");
    RTree tree(RTreeVariant::hilbert, params);

    struct Keyed {
        SpatialEntry entry;
        uint64_t hv;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(entries.size());
    for (auto& e : entries) keyed.push_back({e, tree.hilbert_key(e.key)});
    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (a.hv != b.hv) return a.hv < b.hv;
        return a.entry.oid < b.entry.oid;
    });

    size_t cap = std::max<size_t>(
        1, static_cast<size_t>(fill_factor * params.max_entries));
    cap = std::min(cap, static_cast<size_t>(params.max_entries));

    std::vector<std::unique_ptr<Node>> level;
    for (size_t at = 0; at < keyed.size();) {
        auto node = std::make_unique<Node>();
        node->leaf = true;
        for (size_t i = 0; i < cap && at < keyed.size(); ++i, ++at)
            node->entries.push_back(
                Entry{keyed[at].entry.key, keyed[at].entry.oid, nullptr, keyed[at].hv});
        level.push_back(std::move(node));
    }
    while (level.size() > 1) {
        std::vector<std::unique_ptr<Node>> next;
        for (size_t at = 0; at < level.size();) {
            auto node = std::make_unique<Node>();
            node->leaf = false;
            for (size_t i = 0; i < static_cast<size_t>(params.max_entries) &&
                               at < level.size();
                 ++i, ++at) {
                Entry e{level[at]->mbr(), {}, nullptr, level[at]->lhv()};
                e.child = std::move(level[at]);
                node->entries.push_back(std::move(e));
            }
            next.push_back(std::move(node));
        }
        level = std::move(next);
    }
    tree.root_ = std::move(level.front());
    tree.count_ = keyed.size();
    return tree;
}

Oid RTree::closest(const geom::Point& p,
                   const std::function<geom::Geometry(Oid)>& resolve) const {
    if (empty()) throw Error("closest on empty tree");

    double world_area = std::max(params_.world.area(), 0.0);
    double half = std::sqrt(world_area / static_cast<double>(count_));
    if (!(half > 0)) half = 1.0;

    Rect root_mbr = root_->mbr();
    std::vector<Oid> candidates;
    for (;;) {
        Rect box{p.x - half, p.y - half, p.x + half, p.y + half};
        candidates = window_query(box);
        if (!candidates.empty()) break;
        if (box.contains(root_mbr)) break;  // box covers everything
        half *= 2;
    }

    auto better = [&](double d, Oid oid, double best_d, Oid best_oid) {
        return d < best_d || (d == best_d && oid < best_oid);
    };
    double best_d = std::numeric_limits<double>::infinity();
    Oid best_oid{};
    for (Oid oid : candidates) {
        double d = geom::distance(p, resolve(oid));
        if (better(d, oid, best_d, best_oid)) {
            best_d = d;
            best_oid = oid;
        }
    }

    // Guard re-query: the first non-empty box can miss a nearer entry whose
    // rect lies just outside it.
    Rect guard{p.x - best_d, p.y - best_d, p.x + best_d, p.y + best_d};
    for (Oid oid : window_query(guard)) {
        double d = geom::distance(p, resolve(oid));
        if (better(d, oid, best_d, best_oid)) {
            best_d = d;
            best_oid = oid;
        }
    }
    return best_oid;
}

double RTree::utilization() const {
    if (empty()) throw Error("utilization on empty tree");
    size_t nodes = 0;
    size_t entries = 0;
    std::function<void(const Node*)> walk = [&](const Node* node) {
        ++nodes;
        entries += node->entries.size();
        if (!node->leaf)
            for (const Entry& e : node->entries) walk(e.child.get());
    };
    walk(root_.get());
    return static_cast<double>(entries) /
           (static_cast<double>(nodes) * max_entries());
}

// ---------------------------------------------------------------------------
// Validation / debug

void RTree::validate_structure() const {
    size_t leaf_entries = 0;
    int leaf_depth = -1;
    uint64_t prev_hv = 0;
    bool have_prev = false;

    std::function<void(const Node*, int, bool)> walk = [&](const Node* node,
                                                           int depth, bool is_root) {
        size_t n = node->entries.size();
        if (!is_root && n < static_cast<size_t>(min_entries()))
            throw Error("node underfull");
        if (n > static_cast<size_t>(max_entries())) throw Error("node overfull");
        if (is_root && !node->leaf && n < 2) throw Error("internal root underfull");

        if (node->leaf) {
            if (leaf_depth == -1)
                leaf_depth = depth;
            else if (leaf_depth != depth)
                throw Error("leaves at unequal depth");
            leaf_entries += n;
            for (const Entry& e : node->entries) {
                if (variant_ == RTreeVariant::hilbert) {
                    if (have_prev && e.hv < prev_hv)
                        throw Error("hilbert leaf order violated");
                    prev_hv = e.hv;
                    have_prev = true;
                }
            }
            return;
        }
        uint64_t prev_child_hv = 0;
        bool have_child = false;
        for (const Entry& e : node->entries) {
            if (!e.child) throw Error("internal entry without child");
            Rect actual = e.child->mbr();
            if (!(e.rect == actual)) throw Error("stale child mbr");
            if (variant_ == RTreeVariant::hilbert) {
                if (e.hv != e.child->lhv()) throw Error("stale child lhv");
                if (have_child && e.hv < prev_child_hv)
                    throw Error("hilbert sibling order violated");
                prev_child_hv = e.hv;
                have_child = true;
            }
            walk(e.child.get(), depth + 1, false);
        }
    };
    walk(root_.get(), 0, true);
    if (leaf_entries != count_) throw Error("entry count mismatch");
}

std::string RTree::dump() const {
    std::ostringstream out;
    std::function<void(const Node*, int)> walk = [&](const Node* node, int depth) {
        Rect r = node->entries.empty() ? Rect{} : node->mbr();
        out << "depth=" << depth << (node->leaf ? " leaf" : " node")
            << " count=" << node->entries.size() << " mbr=(" << r.xmin << ","
            << r.ymin << "," << r.xmax << "," << r.ymax << ")"
            << " lhv=" << node->lhv() << "\n";
        if (!node->leaf)
            for (const Entry& e : node->entries) walk(e.child.get(), depth + 1);
    };
    walk(root_.get(), 0);
    return out.str();
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void write_rect(ByteWriter& w, const Rect& r) {
    w.f64(r.xmin);
    w.f64(r.ymin);
    w.f64(r.xmax);
    w.f64(r.ymax);
}

Rect read_rect(ByteReader& r) {
    Rect out;
    out.xmin = r.f64();
    out.ymin = r.f64();
    out.xmax = r.f64();
    out.ymax = r.f64();
    return out;
}

}  // namespace

void RTree::serialize(ByteWriter& w) const {
    w.u8(static_cast<uint8_t>(variant_));
    w.u32(static_cast<uint32_t>(params_.max_entries));
    w.f64(params_.min_fill);
    w.f64(params_.reinsert_fraction);
    w.u32(static_cast<uint32_t>(params_.hilbert_order));
    write_rect(w, params_.world);
    w.u64(count_);
    std::function<void(const Node*)> walk = [&](const Node* node) {
        w.u8(node->leaf ? 1 : 0);
        w.u32(static_cast<uint32_t>(node->entries.size()));
        for (const Entry& e : node->entries) {
            write_rect(w, e.rect);
            w.u64(e.hv);
            if (node->leaf) {
                w.u32(e.oid.extent);
                w.u64(e.oid.slot);
            } else {
                walk(e.child.get());
            }
        }
    };
    walk(root_.get());
}

RTree RTree::deserialize(ByteReader& r) {
    auto variant = static_cast<RTreeVariant>(r.u8());
    Params params;
    params.max_entries = static_cast<int>(r.u32());
    params.min_fill = r.f64();
    params.reinsert_fraction = r.f64();
    params.hilbert_order = static_cast<int>(r.u32());
    params.world = read_rect(r);
    RTree tree(variant, params);
    tree.count_ = r.u64();
    std::function<std::unique_ptr<Node>()> walk = [&]() -> std::unique_ptr<Node> {
        auto node = std::make_unique<Node>();
        node->leaf = r.u8() != 0;
        uint32_t n = r.u32();
        node->entries.reserve(n);
        for (uint32_t i = 0; i < n; ++i) {
            Entry e;
            e.rect = read_rect(r);
            e.hv = r.u64();
            if (node->leaf) {
                e.oid.extent = r.u32();
                e.oid.slot = r.u64();
            } else {
                e.child = walk();
            }
            node->entries.push_back(std::move(e));
        }
        return node;
    };
    tree.root_ = walk();
    return tree;
}

// ---------------------------------------------------------------------------
// Spatial join

void spatial_join(const RTree& a, const RTree& b, JoinPredicate pred,
                  const std::function<geom::Geometry(Oid)>& resolve_a,
                  const std::function<geom::Geometry(Oid)>& resolve_b,
                  const std::function<void(Oid, Oid)>& emit) {
    const bool self = &a == &b;
    if (a.empty() || b.empty()) return;

    auto exact = [&](Oid oa, Oid ob) {
        geom::Geometry ga = resolve_a(oa);
        geom::Geometry gb = resolve_b(ob);
        if (pred == JoinPredicate::overlaps) return geom::overlaps(ga, gb);
        auto* pt = std::get_if<geom::Point>(&ga.shape);
        auto* poly = std::get_if<geom::Polygon>(&gb.shape);
        if (!pt || !poly) throw Error("inside join requires point and polygon operands");
        return geom::inside(*pt, *poly);
    };

    using Node = RTree::Node;
    std::function<void(const Node*, const Node*)> walk = [&](const Node* na,
                                                             const Node* nb) {
        bool same = self && na == nb;
        for (size_t i = 0; i < na->entries.size(); ++i) {
            size_t jstart = same ? i : 0;
            for (size_t j = jstart; j < nb->entries.size(); ++j) {
                const auto& ea = na->entries[i];
                const auto& eb = nb->entries[j];
                if (!ea.rect.intersects(eb.rect)) continue;
                if (na->leaf && nb->leaf) {
                    if (self && ea.oid == eb.oid) continue;
                    if (self && ea.oid > eb.oid) {
                        if (exact(eb.oid, ea.oid)) emit(eb.oid, ea.oid);
                    } else if (exact(ea.oid, eb.oid)) {
                        emit(ea.oid, eb.oid);
                    }
                } else if (na->leaf) {
                    // descend b only
                    std::function<void(const Node*)> down = [&](const Node* n) {
                        for (const auto& e : n->entries) {
                            if (!e.rect.intersects(ea.rect)) continue;
                            if (n->leaf) {
                                if (self && ea.oid == e.oid) continue;
                                if (self && ea.oid > e.oid) {
                                    if (exact(e.oid, ea.oid)) emit(e.oid, ea.oid);
                                } else if (exact(ea.oid, e.oid)) {
                                    emit(ea.oid, e.oid);
                                }
                            } else {
                                down(e.child.get());
                            }
                        }
                    };
                    down(eb.child.get());
                } else if (nb->leaf) {
                    std::function<void(const Node*)> down = [&](const Node* n) {
                        for (const auto& e : n->entries) {
                            if (!e.rect.intersects(eb.rect)) continue;
                            if (n->leaf) {
                                if (self && e.oid == eb.oid) continue;
                                if (self && e.oid > eb.oid) {
                                    if (exact(eb.oid, e.oid)) emit(eb.oid, e.oid);
                                } else if (exact(e.oid, eb.oid)) {
                                    emit(e.oid, eb.oid);
                                }
                            } else {
                                down(e.child.get());
                            }
                        }
                    };
                    down(ea.child.get());
                } else {
                    walk(ea.child.get(), eb.child.get());
                }
            }
        }
    };
    walk(&a.root(), &b.root());
}

}  // namespace mddb::sidx
