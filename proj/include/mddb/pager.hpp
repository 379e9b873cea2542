#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mddb/common.hpp"

namespace mddb::store {

// Single-file page store: fixed 8 KiB pages, a free-list allocator, and a
// named-blob layer on top (each blob is a chain of pages). Dirty pages live
// in memory until flush; durability is flush-on-close plus explicit flush.
class PagedFile {
public:
    static constexpr size_t kPageSize = 8192;

    PagedFile(const std::string& path, bool create);
    ~PagedFile();

    PagedFile(const PagedFile&) = delete;
    PagedFile& operator=(const PagedFile&) = delete;
    PagedFile(PagedFile&&) noexcept = default;
    PagedFile& operator=(PagedFile&&) noexcept = default;

    bool has_blob(const std::string& name) const;
    std::vector<uint8_t> read_blob(const std::string& name) const;
    void write_blob(const std::string& name, const std::vector<uint8_t>& data);
    void remove_blob(const std::string& name);
    std::vector<std::string> blob_names() const;

    // Pages occupied by one blob's chain.
    uint64_t blob_page_count(const std::string& name) const;
    uint64_t page_count() const { return page_count_; }
    uint64_t free_page_count() const;

    void flush();
    const std::string& path() const { return path_; }

    // Read-cache budget in pages; clean pages beyond it are evicted.
    void set_cache_limit(uint64_t pages) { cache_limit_ = pages; }

private:
    struct BlobInfo {
        uint64_t first_page = 0;  // 0 = empty blob
        uint64_t length = 0;
    };

    uint64_t allocate_page();
    void free_chain(uint64_t first);
    std::vector<uint8_t>& page(uint64_t id);
    const std::vector<uint8_t>& page(uint64_t id) const;
    void mark_dirty(uint64_t id);
    uint64_t write_chain(const std::vector<uint8_t>& data);
    std::vector<uint8_t> read_chain(uint64_t first, uint64_t length) const;
    void load_header();

    std::string path_;
    mutable std::map<uint64_t, std::vector<uint8_t>> cache_;
    std::map<uint64_t, bool> dirty_;
    std::map<std::string, BlobInfo> directory_;
    uint64_t page_count_ = 1;  // page 0 is the header
    uint64_t free_head_ = 0;   // 0 = none
    uint64_t directory_page_ = 0;
    uint64_t directory_length_ = 0;
    bool directory_dirty_ = false;
    uint64_t cache_limit_ = 0;  // 0 = unlimited
};

}  // namespace mddb::store
