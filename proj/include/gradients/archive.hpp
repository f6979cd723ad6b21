#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "gradients/corpus.hpp"
#include "gradients/error.hpp"

namespace gradients {

/// Parsed corpus ready for analysis: the category roster, the ingestion
/// preset that produced it, and the canonical event log.
struct Archive {
    Category category;
    std::string preset;  // "" or "wikipedia"
    EventLog log;
};

// Layout (little endian):
//   "GRADARC1" u32 version
//   str category.name, u32 n, n x str community
//   str preset
//   u64 n_users, n_users x str (sorted)
//   u64 n_events, per event:
//     str event_id, u32 user, u32 community, i64 ts, u8 kind, u8 has_text,
//     [str text], u32 n_urls, n_urls x str
// where str is u32 byte length followed by bytes.
inline constexpr std::string_view kArchiveMagic = "GRADARC1";
inline constexpr std::uint32_t kArchiveVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

class ArchiveWriter {
public:
    template <class T>
    void pod(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void str(std::string_view s) {
        pod(static_cast<std::uint32_t>(s.size()));
        out_.append(s);
    }
    void raw(std::string_view s) { out_.append(s); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class ArchiveReader {
public:
    explicit ArchiveReader(std::string_view in) : in_(in) {}

    template <class T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string str() {
        auto n = pod<std::uint32_t>();
        need(n);
        std::string s(in_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    std::string_view raw(std::size_t n) {
        need(n);
        auto s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw data_error("archive is truncated");
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_archive(const Archive& a) {
    detail::ArchiveWriter w;
    w.raw(kArchiveMagic);
    w.pod(kArchiveVersion);
    w.str(a.category.name);
    w.pod(static_cast<std::uint32_t>(a.category.communities.size()));
    for (const auto& c : a.category.communities) w.str(c);
    w.str(a.preset);

    std::map<std::string_view, std::uint32_t> user_ids;
    for (const auto& [u, _] : a.log.user_index()) user_ids.emplace(u, 0);
    std::uint32_t next = 0;
    for (auto& [_, id] : user_ids) id = next++;
    w.pod(static_cast<std::uint64_t>(user_ids.size()));
    for (const auto& [u, _] : user_ids) w.str(u);

    w.pod(static_cast<std::uint64_t>(a.log.size()));
    for (const auto& e : a.log.events()) {
        auto ci = a.category.index_of(e.community);
        if (!ci) throw data_error(fmt::format("event {} names community '{}' outside the category", e.event_id, e.community));
        w.str(e.event_id);
        w.pod(user_ids.at(e.user));
        w.pod(static_cast<std::uint32_t>(*ci));
        w.pod(static_cast<std::int64_t>(e.ts));
        w.pod(static_cast<std::uint8_t>(e.kind));
        w.pod(static_cast<std::uint8_t>(e.text ? 1 : 0));
        if (e.text) w.str(*e.text);
        w.pod(static_cast<std::uint32_t>(e.urls.size()));
        for (const auto& u : e.urls) w.str(u);
    }
    return w.take();
}

inline Archive parse_archive(std::string_view bytes) {
    detail::ArchiveReader r(bytes);
    if (r.raw(kArchiveMagic.size()) != kArchiveMagic) throw data_error("not a corpus archive");
    if (auto v = r.pod<std::uint32_t>(); v != kArchiveVersion)
        throw data_error(fmt::format("unsupported archive version {}", v));

    Archive a;
    a.category.name = r.str();
    auto n_comm = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_comm; ++i) a.category.communities.push_back(r.str());
    a.category.validate();
    a.preset = r.str();

    auto n_users = r.pod<std::uint64_t>();
    std::vector<std::string> users;
    for (std::uint64_t i = 0; i < n_users; ++i) users.push_back(r.str());

    auto n_events = r.pod<std::uint64_t>();
    std::vector<Event> events;
    for (std::uint64_t i = 0; i < n_events; ++i) {
        Event e;
        e.event_id = r.str();
        auto u = r.pod<std::uint32_t>();
        auto c = r.pod<std::uint32_t>();
        if (u >= users.size() || c >= a.category.communities.size()) throw data_error("archive index out of range");
        e.user = users[u];
        e.community = a.category.communities[c];
        e.ts = r.pod<std::int64_t>();
        auto kind = r.pod<std::uint8_t>();
        if (kind > static_cast<std::uint8_t>(EventKind::edit)) throw data_error("archive has an invalid event kind");
        e.kind = static_cast<EventKind>(kind);
        if (r.pod<std::uint8_t>()) e.text = r.str();
        auto n_urls = r.pod<std::uint32_t>();
        for (std::uint32_t k = 0; k < n_urls; ++k) e.urls.push_back(r.str());
        events.push_back(std::move(e));
    }
    if (!r.done()) throw data_error("trailing bytes after archive");
    a.log = EventLog(std::move(events));
    return a;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error(fmt::format("cannot read {}", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error(fmt::format("cannot write {}", path.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw data_error(fmt::format("failed writing {}", path.string()));
}

inline void write_archive(const std::filesystem::path& path, const Archive& a) { write_file(path, serialize_archive(a)); }

inline Archive read_archive(const std::filesystem::path& path) { return parse_archive(read_file(path)); }

}  // namespace gradients
