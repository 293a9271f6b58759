#pragma once

#include "hermes/backends.hpp"

#include <mutex>
#include <string>
#include <vector>

namespace hermes {

struct MemoryEntry {
    std::string entry_id;
    std::string episode_id;
    std::string step_text;
    std::string formal_proposition; // standalone (binder-closed) rendering
    std::vector<std::string> binders;
    std::vector<double> embedding; // unit length after record
    long long created_at = 0;      // store-assigned ordinal
};

struct RetrievalRequest {
    std::string query_text;
    int k = 3;
    std::string episode_id; // empty: no filter
};

// In-memory vector store over validated proof steps. Entries are immutable
// once recorded; reads and writes are mutex-serialized.
class MemoryStore {
public:
    MemoryStore() = default;

    // Normalizes the embedding, pins the store's dimension on first use,
    // and dedupes on (episode_id, step_text): recording a duplicate
    // returns the existing id and leaves the store unchanged.
    std::string record(MemoryEntry entry);

    // Embeds step_text via the backend set, then records.
    std::string record(const BackendSet& backends, CallContext& ctx,
                       const std::string& episode_id, const std::string& step_text,
                       const std::string& proposition,
                       const std::vector<std::string>& binders);

    // Top-k by descending cosine similarity; ties broken by older
    // created_at first; at most min(k, matching entries) results.
    std::vector<MemoryEntry> retrieve(const RetrievalRequest& request,
                                      const std::vector<double>& query_embedding) const;

    // Embeds the query via the backend set first. An empty store (under
    // the episode filter) short-circuits without an embedding call.
    std::vector<MemoryEntry> retrieve(const BackendSet& backends, CallContext& ctx,
                                      const RetrievalRequest& request) const;

    size_t size() const;
    size_t size(const std::string& episode_id) const;
    int dimension() const;
    std::vector<MemoryEntry> entries() const;

    // One JSON record per line after a header line carrying the dimension.
    void save_snapshot(const std::string& path) const;
    void load_snapshot(const std::string& path); // replaces current contents

private:
    mutable std::mutex mu_;
    std::vector<MemoryEntry> entries_;
    long long next_ordinal_ = 0;
    int dimension_ = 0; // 0 until the first entry
};

} // namespace hermes
