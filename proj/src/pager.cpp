#include "mddb/pager.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "mddb/bytes.hpp"

namespace mddb::store {

namespace {

constexpr uint32_t kMagic = 0x4d444231;  // "MDB1"
constexpr uint32_t kVersion = 1;
constexpr size_t kChainPayload = PagedFile::kPageSize - 8;  // after next-pointer

uint64_t read_u64(const uint8_t* p) {
    uint64_t v;
    std::memcpy(&v, p, 8);
    return v;
}

void write_u64(uint8_t* p, uint64_t v) { std::memcpy(p, &v, 8); }

}  // namespace

PagedFile::PagedFile(const std::string& path, bool create) : path_(path) {
    namespace fs = std::filesystem;
    if (create) {
        if (fs::exists(path) && fs::file_size(path) > 0)
            throw Error("refusing to create over existing database: " + path);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot create database file: " + path);
        cache_[0] = std::vector<uint8_t>(kPageSize, 0);
        dirty_[0] = true;
        directory_dirty_ = true;
        flush();
    } else {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open database file: " + path);
        load_header();
    }
}

PagedFile::~PagedFile() {
    try {
        flush();
    } catch (...) {
        // Destructor flush is best-effort; explicit flush reports errors.
    }
}

void PagedFile::load_header() {
    std::ifstream in(path_, std::ios::binary);
    in.seekg(0, std::ios::end);
    auto size = static_cast<uint64_t>(in.tellg());
    if (size < kPageSize || size % kPageSize != 0)
        throw Error("corrupt database header: " + path_);
    in.seekg(0);
    std::vector<uint8_t> header(kPageSize);
    in.read(reinterpret_cast<char*>(header.data()), kPageSize);

    ByteReader r(header.data(), header.size());
    if (r.u32() != kMagic) throw Error("not a database file: " + path_);
    uint32_t version = r.u32();
    if (version != kVersion)
        throw Error("unsupported database version " + std::to_string(version));
    page_count_ = r.u64();
    free_head_ = r.u64();
    directory_page_ = r.u64();
    directory_length_ = r.u64();
    if (page_count_ * kPageSize != size) throw Error("corrupt database size: " + path_);

    if (directory_length_ > 0) {
        auto dir = read_chain(directory_page_, directory_length_);
        ByteReader dr(dir.data(), dir.size());
        uint32_t n = dr.u32();
        for (uint32_t i = 0; i < n; ++i) {
            std::string name = dr.str();
            BlobInfo info;
            info.first_page = dr.u64();
            info.length = dr.u64();
            directory_[name] = info;
        }
    }
}

std::vector<uint8_t>& PagedFile::page(uint64_t id) {
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw Error("cannot reopen database file: " + path_);
    in.seekg(static_cast<std::streamoff>(id * kPageSize));
    std::vector<uint8_t> buf(kPageSize, 0);
    in.read(reinterpret_cast<char*>(buf.data()), kPageSize);
    if (static_cast<size_t>(in.gcount()) != kPageSize)
        throw Error("short page read in " + path_);
    auto& slot = cache_.emplace(id, std::move(buf)).first->second;
    if (cache_limit_ > 0 && cache_.size() > cache_limit_) {
        for (auto it = cache_.begin();
             it != cache_.end() && cache_.size() > cache_limit_;) {
            bool dirty = dirty_.count(it->first) && dirty_.at(it->first);
            if (!dirty && it->first != id && it->first != 0)
                it = cache_.erase(it);
            else
                ++it;
        }
    }
    return slot;
}

const std::vector<uint8_t>& PagedFile::page(uint64_t id) const {
    return const_cast<PagedFile*>(this)->page(id);
}

void PagedFile::mark_dirty(uint64_t id) { dirty_[id] = true; }

uint64_t PagedFile::allocate_page() {
    if (free_head_ != 0) {
        uint64_t id = free_head_;
        free_head_ = read_u64(page(id).data());
        std::fill(page(id).begin(), page(id).end(), 0);
        mark_dirty(id);
        return id;
    }
    uint64_t id = page_count_++;
    cache_[id] = std::vector<uint8_t>(kPageSize, 0);
    mark_dirty(id);
    return id;
}

void PagedFile::free_chain(uint64_t first) {
    uint64_t cur = first;
    while (cur != 0) {
        uint64_t next = read_u64(page(cur).data());
        write_u64(page(cur).data(), free_head_);
        mark_dirty(cur);
        free_head_ = cur;
        cur = next;
    }
}

uint64_t PagedFile::write_chain(const std::vector<uint8_t>& data) {
    if (data.empty()) return 0;
    uint64_t first = 0;
    uint64_t prev = 0;
    size_t at = 0;
    while (at < data.size()) {
        uint64_t id = allocate_page();
        if (prev == 0)
            first = id;
        else {
            write_u64(page(prev).data(), id);
            mark_dirty(prev);
        }
        auto& buf = page(id);
        std::fill(buf.begin(), buf.end(), 0);
        size_t take = std::min(kChainPayload, data.size() - at);
        std::memcpy(buf.data() + 8, data.data() + at, take);
        mark_dirty(id);
        at += take;
        prev = id;
    }
    return first;
}

std::vector<uint8_t> PagedFile::read_chain(uint64_t first, uint64_t length) const {
    std::vector<uint8_t> out;
    out.reserve(length);
    uint64_t cur = first;
    while (out.size() < length) {
        if (cur == 0) throw Error("truncated blob chain in " + path_);
        const auto& buf = page(cur);
        size_t take = std::min(kChainPayload, length - out.size());
        out.insert(out.end(), buf.data() + 8, buf.data() + 8 + take);
        cur = read_u64(buf.data());
    }
    return out;
}

bool PagedFile::has_blob(const std::string& name) const {
    return directory_.count(name) > 0;
}

std::vector<uint8_t> PagedFile::read_blob(const std::string& name) const {
    auto it = directory_.find(name);
    if (it == directory_.end()) throw Error("unknown blob: " + name);
    return read_chain(it->second.first_page, it->second.length);
}

void PagedFile::write_blob(const std::string& name, const std::vector<uint8_t>& data) {
    auto it = directory_.find(name);
    if (it != directory_.end()) {
        // Skipping identical rewrites keeps the page layout stable across
        // open/flush cycles.
        if (it->second.length == data.size() &&
            read_chain(it->second.first_page, it->second.length) == data)
            return;
        free_chain(it->second.first_page);
    }
    BlobInfo info;
    info.length = data.size();
    info.first_page = write_chain(data);
    directory_[name] = info;
    directory_dirty_ = true;
}

void PagedFile::remove_blob(const std::string& name) {
    auto it = directory_.find(name);
    if (it == directory_.end()) return;
    free_chain(it->second.first_page);
    directory_.erase(it);
    directory_dirty_ = true;
}

std::vector<std::string> PagedFile::blob_names() const {
    std::vector<std::string> names;
    names.reserve(directory_.size());
    for (const auto& [name, info] : directory_) names.push_back(name);
    return names;
}

uint64_t PagedFile::blob_page_count(const std::string& name) const {
    auto it = directory_.find(name);
    if (it == directory_.end()) return 0;
    return (it->second.length + kChainPayload - 1) / kChainPayload;
}

uint64_t PagedFile::free_page_count() const {
    uint64_t n = 0;
    for (uint64_t cur = free_head_; cur != 0; cur = read_u64(page(cur).data())) ++n;
    return n;
}

void PagedFile::flush() {
    if (directory_dirty_) {
        if (directory_page_ != 0) free_chain(directory_page_);
        std::vector<uint8_t> dir;
        ByteWriter w(dir);
        w.u32(static_cast<uint32_t>(directory_.size()));
        for (const auto& [name, info] : directory_) {
            w.str(name);
            w.u64(info.first_page);
            w.u64(info.length);
        }
        directory_page_ = write_chain(dir);
        directory_length_ = dir.size();
        directory_dirty_ = false;

        auto& header = page(0);
        std::fill(header.begin(), header.end(), 0);
        std::vector<uint8_t> head;
        ByteWriter hw(head);
        hw.u32(kMagic);
        hw.u32(kVersion);
        hw.u64(page_count_);
        hw.u64(free_head_);
        hw.u64(directory_page_);
        hw.u64(directory_length_);
        std::memcpy(header.data(), head.data(), head.size());
        mark_dirty(0);
    }

    std::fstream out(path_, std::ios::binary | std::ios::in | std::ios::out);
    if (!out) throw Error("cannot write database file: " + path_);
    out.seekp(0, std::ios::end);
    auto file_pages = static_cast<uint64_t>(out.tellp()) / kPageSize;
    for (auto& [id, is_dirty] : dirty_) {
        if (!is_dirty) continue;
        while (file_pages <= id) {
            // Extend with zero pages so seeks stay in bounds.
            std::vector<char> zero(kPageSize, 0);
            out.seekp(0, std::ios::end);
            out.write(zero.data(), kPageSize);
            ++file_pages;
        }
        out.seekp(static_cast<std::streamoff>(id * kPageSize));
        out.write(reinterpret_cast<const char*>(page(id).data()), kPageSize);
        is_dirty = false;
    }
    out.flush();
    if (!out) throw Error("write failure on " + path_);
    dirty_.clear();
}

}  // namespace mddb::store
