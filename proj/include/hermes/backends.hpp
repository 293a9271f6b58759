#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace hermes {

enum class Role { reasoner, autoformalizer, prover, judge, embedder };

const char* role_name(Role role);
Role role_from_name(const std::string& name);

struct SamplingParams {
    double temperature = 0.7;
    long long seed = -1; // < 0: unseeded
    int max_tokens = 0;  // 0: provider default
};

struct RetryPolicy {
    int count = 2; // retries after the first attempt
    double backoff_seconds = 0.25;
};

struct BackendProfile {
    Role role = Role::reasoner;
    std::string endpoint; // empty for scripted doubles
    std::string model;
    std::string api_key_env; // name of the env var holding the key
    SamplingParams sampling;
    RetryPolicy retry;
};

struct TokenCount {
    long long prompt = 0;
    long long completion = 0;
    bool estimated = false; // true when filled by the whitespace estimator
};

struct RoleUsage {
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    long long calls = 0;
    bool estimated = false; // any contribution was estimated
};

// Additive across merges; zero-initialized is the identity.
struct UsageRecord {
    std::map<std::string, RoleUsage> roles; // keyed by role_name
    double checker_seconds = 0.0;
    long long checker_requests = 0;

    void add_call(Role role, const TokenCount& tokens);
    void merge(const UsageRecord& other);
    long long total_tokens(Role role) const; // prompt + completion
    long long total_tokens() const;          // across all roles
    long long total_calls() const;
};

struct ToolDeclaration {
    std::string name;
    std::string description;
    std::string parameter_name;
    std::string parameter_description;
};

struct ToolCallRequest {
    std::string id;
    std::string name;
    std::string arguments_json;
};

struct ChatMessage {
    std::string role; // "system" | "user" | "assistant" | "tool"
    std::string content;
    std::string tool_call_id;                // set on "tool" messages
    std::optional<ToolCallRequest> tool_call; // set on assistant tool turns
};

struct ChatReply {
    std::string content;
    std::optional<ToolCallRequest> tool_call;
    TokenCount usage; // zeroes mean "not reported"; estimator fills in
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatReply chat(const std::vector<ChatMessage>& messages,
                           const std::vector<ToolDeclaration>& tools,
                           const SamplingParams& sampling) = 0;
    virtual const BackendProfile& profile() const = 0;
};

struct EmbedResult {
    std::vector<double> vector;
    TokenCount usage;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual EmbedResult embed(const std::string& text) = 0;
    virtual int dimension() const = 0;
    virtual const BackendProfile& profile() const = 0;
};

// One scripted turn. An empty matcher accepts anything; otherwise the last
// message's content must contain it, else ScriptMismatch.
struct ScriptItem {
    std::string expect_contains;
    ChatReply reply;
};

ScriptItem content_item(std::string content, std::string expect = "");
ScriptItem tool_item(std::string proof_step, std::string expect = "");

// Serializes internally so script order is preserved; intended for
// single-episode tests and replay.
class ScriptedChatBackend : public ChatBackend {
public:
    ScriptedChatBackend(BackendProfile profile, std::vector<ScriptItem> script);

    ChatReply chat(const std::vector<ChatMessage>& messages,
                   const std::vector<ToolDeclaration>& tools,
                   const SamplingParams& sampling) override;
    const BackendProfile& profile() const override { return profile_; }

    long long calls() const;
    size_t remaining() const;

private:
    BackendProfile profile_;
    std::vector<ScriptItem> script_;
    size_t next_ = 0;
    long long calls_ = 0;
    mutable std::mutex mu_;
};

// Plays back a fixed queue of vectors in call order.
class ScriptedEmbedder : public EmbeddingBackend {
public:
    ScriptedEmbedder(BackendProfile profile, int dimension,
                     std::vector<std::vector<double>> playback);

    EmbedResult embed(const std::string& text) override;
    int dimension() const override { return dimension_; }
    const BackendProfile& profile() const override { return profile_; }
    long long calls() const;

private:
    BackendProfile profile_;
    int dimension_;
    std::vector<std::vector<double>> playback_;
    size_t next_ = 0;
    long long calls_ = 0;
    mutable std::mutex mu_;
};

// Deterministic text-keyed embedder: same text, same unit vector. Default
// embedder for offline runs.
class HashEmbedder : public EmbeddingBackend {
public:
    explicit HashEmbedder(BackendProfile profile, int dimension = 32);

    EmbedResult embed(const std::string& text) override;
    int dimension() const override { return dimension_; }
    const BackendProfile& profile() const override { return profile_; }

private:
    BackendProfile profile_;
    int dimension_;
};

// OpenAI-compatible chat completions over HTTP with retry/backoff.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(BackendProfile profile);

    ChatReply chat(const std::vector<ChatMessage>& messages,
                   const std::vector<ToolDeclaration>& tools,
                   const SamplingParams& sampling) override;
    const BackendProfile& profile() const override { return profile_; }

private:
    BackendProfile profile_;
};

class HttpEmbedder : public EmbeddingBackend {
public:
    // expected_dimension <= 0: adopt the first reply's dimension.
    HttpEmbedder(BackendProfile profile, int expected_dimension);

    EmbedResult embed(const std::string& text) override;
    int dimension() const override { return dimension_; }
    const BackendProfile& profile() const override { return profile_; }

private:
    BackendProfile profile_;
    int dimension_;
    std::mutex mu_;
};

// One backend per role. Chat roles resolve through for_role; missing role
// throws ConfigError at lookup.
struct BackendSet {
    std::shared_ptr<ChatBackend> reasoner;
    std::shared_ptr<ChatBackend> autoformalizer;
    std::shared_ptr<ChatBackend> prover;
    std::shared_ptr<ChatBackend> judge;
    std::shared_ptr<EmbeddingBackend> embedder;

    ChatBackend& for_role(Role role) const;
};

class TraceRecorder;
class Deadline;

// Shared per-call context threaded through the pipeline: where to record
// events, where to accumulate usage, and how much wall clock remains.
struct CallContext {
    TraceRecorder* trace = nullptr;
    UsageRecord* usage = nullptr;
    const Deadline* deadline = nullptr;
};

// The single chokepoint for model calls: resolves the role's backend,
// fills unreported usage with the whitespace estimator, accumulates into
// ctx.usage, and emits a backend_reply trace event.
ChatReply traced_chat(const BackendSet& backends, Role role,
                      const std::vector<ChatMessage>& messages,
                      const std::vector<ToolDeclaration>& tools,
                      CallContext& ctx,
                      std::optional<long long> seed = std::nullopt);

// Embedding counterpart; emits an embedding trace event carrying the
// vector so traces replay without a live embedder.
std::vector<double> traced_embed(const BackendSet& backends,
                                 const std::string& text, CallContext& ctx);

// Cosine of two equal-length vectors; 0 when either has zero norm.
double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b);

// Scales to unit length; a zero vector is returned unchanged.
std::vector<double> normalize(std::vector<double> v);

} // namespace hermes
