#include "hermes/memory.hpp"

#include "hermes/errors.hpp"
#include "hermes/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace hermes {

using nlohmann::json;

std::string MemoryStore::record(MemoryEntry entry) {
    if (entry.formal_proposition.empty()) {
        throw Error("memory entry needs a formal proposition");
    }
    if (entry.embedding.empty()) {
        throw EmbeddingUnavailable("memory entry has no embedding");
    }
    entry.embedding = normalize(std::move(entry.embedding));

    std::lock_guard<std::mutex> lk(mu_);
    for (const auto& existing : entries_) {
        if (existing.episode_id == entry.episode_id &&
            existing.step_text == entry.step_text) {
            return existing.entry_id;
        }
    }
    if (dimension_ == 0) {
        dimension_ = static_cast<int>(entry.embedding.size());
    } else if (static_cast<int>(entry.embedding.size()) != dimension_) {
        throw ConfigError("embedding dimension " +
                          std::to_string(entry.embedding.size()) +
                          " does not match the store's dimension " +
                          std::to_string(dimension_));
    }
    entry.created_at = ++next_ordinal_;
    if (entry.entry_id.empty()) {
        entry.entry_id = "m" + std::to_string(entry.created_at);
    }
    entries_.push_back(std::move(entry));
    return entries_.back().entry_id;
}

std::string MemoryStore::record(const BackendSet& backends, CallContext& ctx,
                                const std::string& episode_id,
                                const std::string& step_text,
                                const std::string& proposition,
                                const std::vector<std::string>& binders) {
    MemoryEntry entry;
    entry.episode_id = episode_id;
    entry.step_text = step_text;
    entry.formal_proposition = proposition;
    entry.binders = binders;
    entry.embedding = traced_embed(backends, step_text, ctx);
    return record(std::move(entry));
}

std::vector<MemoryEntry> MemoryStore::retrieve(
    const RetrievalRequest& request, const std::vector<double>& query_embedding) const {
    if (request.k <= 0) return {};

    std::vector<MemoryEntry> candidates;
    {
        std::lock_guard<std::mutex> lk(mu_);
        for (const auto& e : entries_) {
            if (!request.episode_id.empty() && e.episode_id != request.episode_id) {
                continue;
            }
            candidates.push_back(e);
        }
    }
    std::vector<std::pair<double, size_t>> ranked;
    ranked.reserve(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        ranked.emplace_back(cosine_similarity(query_embedding, candidates[i].embedding), i);
    }
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return candidates[a.second].created_at < candidates[b.second].created_at;
    });

    size_t take = std::min(static_cast<size_t>(request.k), ranked.size());
    std::vector<MemoryEntry> out;
    out.reserve(take);
    for (size_t i = 0; i < take; ++i) out.push_back(candidates[ranked[i].second]);
    return out;
}

std::vector<MemoryEntry> MemoryStore::retrieve(const BackendSet& backends,
                                               CallContext& ctx,
                                               const RetrievalRequest& request) const {
    if (request.k <= 0 || size(request.episode_id) == 0) return {};
    std::vector<double> query = traced_embed(backends, request.query_text, ctx);
    return retrieve(request, query);
}

size_t MemoryStore::size() const {
    std::lock_guard<std::mutex> lk(mu_);
    return entries_.size();
}

size_t MemoryStore::size(const std::string& episode_id) const {
    if (episode_id.empty()) return size();
    std::lock_guard<std::mutex> lk(mu_);
    size_t n = 0;
    for (const auto& e : entries_) {
        if (e.episode_id == episode_id) ++n;
    }
    return n;
}

int MemoryStore::dimension() const {
    std::lock_guard<std::mutex> lk(mu_);
    return dimension_;
}

std::vector<MemoryEntry> MemoryStore::entries() const {
    std::lock_guard<std::mutex> lk(mu_);
    return entries_;
}

void MemoryStore::save_snapshot(const std::string& path) const {
    std::lock_guard<std::mutex> lk(mu_);
    std::string out = json{{"kind", "memory_snapshot"}, {"dimension", dimension_}}.dump();
    out += "\n";
    for (const auto& e : entries_) {
        out += json{{"entry_id", e.entry_id},
                    {"episode_id", e.episode_id},
                    {"step_text", e.step_text},
                    {"formal_proposition", e.formal_proposition},
                    {"binders", e.binders},
                    {"embedding", e.embedding},
                    {"created_at", e.created_at}}
                   .dump();
        out += "\n";
    }
    write_text_file(path, out);
}

void MemoryStore::load_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open memory snapshot: " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("memory snapshot is empty: " + path);
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("kind", "") != "memory_snapshot") {
        throw Error("not a memory snapshot: " + path);
    }
    std::vector<MemoryEntry> loaded;
    long long top = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw Error("memory snapshot line " + std::to_string(line_no) +
                        " is not a record");
        }
        MemoryEntry e;
        e.entry_id = j.value("entry_id", "");
        e.episode_id = j.value("episode_id", "");
        e.step_text = j.value("step_text", "");
        e.formal_proposition = j.value("formal_proposition", "");
        e.binders = j.value("binders", std::vector<std::string>{});
        e.embedding = j.value("embedding", std::vector<double>{});
        e.created_at = j.value("created_at", 0LL);
        top = std::max(top, e.created_at);
        loaded.push_back(std::move(e));
    }
    std::lock_guard<std::mutex> lk(mu_);
    entries_ = std::move(loaded);
    dimension_ = header.value("dimension", 0);
    next_ordinal_ = top;
}

} // namespace hermes
