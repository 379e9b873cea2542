#include "mddb/btree.hpp"

#include <algorithm>

namespace mddb::store {

BTree::BTree(int fanout) : fanout_(fanout), root_(std::make_unique<Node>()) {
    if (fanout < 4) throw Error("btree fanout must be at least 4");
}

bool BTree::pair_less(const TypedKey& ka, Oid oa, const TypedKey& kb, Oid ob) {
    if (ka != kb) return std::lexicographical_compare(ka.begin(), ka.end(), kb.begin(),
                                                      kb.end());
    return oa < ob;
}

void BTree::insert(const TypedKey& key, Oid oid) {
    distinct_valid_ = false;
    auto split = insert_rec(root_.get(), key, oid);
    if (split) {
        auto new_root = std::make_unique<Node>();
        new_root->leaf = false;
        new_root->keys.push_back(std::move(split->sep_key));
        new_root->child_min_oid.push_back(split->sep_oid);
        new_root->children.push_back(std::move(root_));
        new_root->children.push_back(std::move(split->right));
        root_ = std::move(new_root);
    }
    ++size_;
}

std::optional<BTree::SplitResult> BTree::insert_rec(Node* node, const TypedKey& key,
                                                    Oid oid) {
    if (node->leaf) {
        size_t at = 0;
        while (at < node->keys.size() &&
               pair_less(node->keys[at], node->oids[at], key, oid))
            ++at;
        node->keys.insert(node->keys.begin() + at, key);
        node->oids.insert(node->oids.begin() + at, oid);
        if (node->keys.size() <= static_cast<size_t>(fanout_)) return std::nullopt;

        auto right = std::make_unique<Node>();
        size_t half = node->keys.size() / 2;
        right->keys.assign(std::make_move_iterator(node->keys.begin() + half),
                           std::make_move_iterator(node->keys.end()));
        right->oids.assign(node->oids.begin() + half, node->oids.end());
        node->keys.resize(half);
        node->oids.resize(half);
        SplitResult r{right->keys.front(), right->oids.front(), std::move(right)};
        return r;
    }

    size_t child = 0;
    while (child < node->keys.size() &&
           !pair_less(key, oid, node->keys[child], node->child_min_oid[child]))
        ++child;
    auto split = insert_rec(node->children[child].get(), key, oid);
    if (!split) return std::nullopt;
    node->keys.insert(node->keys.begin() + child, std::move(split->sep_key));
    node->child_min_oid.insert(node->child_min_oid.begin() + child, split->sep_oid);
    node->children.insert(node->children.begin() + child + 1, std::move(split->right));
    if (node->children.size() <= static_cast<size_t>(fanout_)) return std::nullopt;

    auto right = std::make_unique<Node>();
    right->leaf = false;
    size_t half = node->children.size() / 2;  // children going right
    size_t sep = node->keys.size() - half;    // separator moving up
    SplitResult r;
    r.sep_key = std::move(node->keys[sep]);
    r.sep_oid = node->child_min_oid[sep];
    right->keys.assign(std::make_move_iterator(node->keys.begin() + sep + 1),
                       std::make_move_iterator(node->keys.end()));
    right->child_min_oid.assign(node->child_min_oid.begin() + sep + 1,
                                node->child_min_oid.end());
    right->children.assign(std::make_move_iterator(node->children.begin() + sep + 1),
                           std::make_move_iterator(node->children.end()));
    node->keys.resize(sep);
    node->child_min_oid.resize(sep);
    node->children.resize(sep + 1);
    r.right = std::move(right);
    return r;
}

bool BTree::erase(const TypedKey& key, Oid oid) {
    distinct_valid_ = false;
    if (erase_rec(root_.get(), key, oid)) {
        --size_;
        if (!root_->leaf && root_->children.size() == 1)
            root_ = std::move(root_->children.front());
        return true;
    }
    return false;
}

bool BTree::erase_rec(Node* node, const TypedKey& key, Oid oid) {
    if (node->leaf) {
        for (size_t i = 0; i < node->keys.size(); ++i) {
            if (node->keys[i] == key && node->oids[i] == oid) {
                node->keys.erase(node->keys.begin() + i);
                node->oids.erase(node->oids.begin() + i);
                return true;
            }
        }
        return false;
    }
    // Duplicates may straddle separators; try every candidate child.
    size_t child = 0;
    while (child < node->keys.size() &&
           !pair_less(key, oid, node->keys[child], node->child_min_oid[child]))
        ++child;
    for (size_t c = child;; --c) {
        if (erase_rec(node->children[c].get(), key, oid)) return true;
        if (c == 0) break;
    }
    return false;
}

std::vector<Oid> BTree::lookup(const TypedKey& key) const {
    std::vector<Oid> out;
    range(key, key, [&](const TypedKey&, Oid oid) { out.push_back(oid); });
    return out;
}

void BTree::range(const std::optional<TypedKey>& lo, const std::optional<TypedKey>& hi,
                  const std::function<void(const TypedKey&, Oid)>& emit) const {
    if (lo && hi && *hi < *lo) return;
    range_rec(root_.get(), lo, hi, emit);
}

void BTree::range_rec(const Node* node, const std::optional<TypedKey>& lo,
                      const std::optional<TypedKey>& hi,
                      const std::function<void(const TypedKey&, Oid)>& emit) const {
    if (node->leaf) {
        for (size_t i = 0; i < node->keys.size(); ++i) {
            if (lo && node->keys[i] < *lo) continue;
            if (hi && *hi < node->keys[i]) break;
            emit(node->keys[i], node->oids[i]);
        }
        return;
    }
    for (size_t c = 0; c < node->children.size(); ++c) {
        // Child c spans [sep[c-1], sep[c]); prune with the bounds.
        if (c > 0 && hi && *hi < node->keys[c - 1]) break;
        if (c < node->keys.size() && lo && node->keys[c] < *lo) {
            // Entire child below the lower bound only when its upper separator
            // is still below lo; key equality needs the child visited.
            if (node->keys[c] != *lo) continue;
        }
        range_rec(node->children[c].get(), lo, hi, emit);
    }
}

size_t BTree::distinct_keys() const {
    if (!distinct_valid_) {
        size_t n = 0;
        const TypedKey* prev = nullptr;
        TypedKey prev_copy;
        range(std::nullopt, std::nullopt, [&](const TypedKey& key, Oid) {
            if (!prev || key != prev_copy) {
                ++n;
                prev_copy = key;
                prev = &prev_copy;
            }
        });
        distinct_cache_ = n;
        distinct_valid_ = true;
    }
    return distinct_cache_;
}

size_t BTree::node_count() const {
    size_t n = 0;
    std::function<void(const Node*)> walk = [&](const Node* node) {
        ++n;
        for (const auto& c : node->children) walk(c.get());
    };
    walk(root_.get());
    return n;
}

int BTree::height() const {
    int h = 1;
    for (const Node* n = root_.get(); !n->leaf; n = n->children.front().get()) ++h;
    return h;
}

void BTree::serialize(ByteWriter& w) const {
    w.u64(size_);
    range(std::nullopt, std::nullopt, [&](const TypedKey& key, Oid oid) {
        w.bytes(key);
        w.u32(oid.extent);
        w.u64(oid.slot);
    });
}

BTree BTree::deserialize(ByteReader& r, int fanout) {
    BTree tree(fanout);
    uint64_t n = r.u64();
    // Bulk-pack leaves, then stack internal levels.
    std::vector<std::unique_ptr<Node>> level;
    auto leaf = std::make_unique<Node>();
    for (uint64_t i = 0; i < n; ++i) {
        TypedKey key = r.bytes();
        Oid oid{r.u32(), r.u64()};
        if (leaf->keys.size() == static_cast<size_t>(fanout)) {
            level.push_back(std::move(leaf));
            leaf = std::make_unique<Node>();
        }
        leaf->keys.push_back(std::move(key));
        leaf->oids.push_back(oid);
    }
    level.push_back(std::move(leaf));
    while (level.size() > 1) {
        std::vector<std::unique_ptr<Node>> next;
        size_t at = 0;
        while (at < level.size()) {
            auto node = std::make_unique<Node>();
            node->leaf = false;
            size_t take = std::min(level.size() - at, static_cast<size_t>(fanout));
            for (size_t i = 0; i < take; ++i) {
                Node* child = level[at].get();
                if (i > 0) {
                    const Node* first = child;
                    while (!first->leaf) first = first->children.front().get();
                    node->keys.push_back(first->keys.front());
                    node->child_min_oid.push_back(first->oids.front());
                }
                node->children.push_back(std::move(level[at]));
                ++at;
            }
            next.push_back(std::move(node));
        }
        level = std::move(next);
    }
    tree.root_ = std::move(level.front());
    tree.size_ = n;
    return tree;
}

}  // namespace mddb::store
