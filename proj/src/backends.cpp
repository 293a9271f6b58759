#include "hermes/backends.hpp"

#include "hermes/errors.hpp"
#include "hermes/prompts.hpp"
#include "hermes/trace.hpp"
#include "hermes/util.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

namespace hermes {

using nlohmann::json;

const char* role_name(Role role) {
    switch (role) {
        case Role::reasoner: return "reasoner";
        case Role::autoformalizer: return "autoformalizer";
        case Role::prover: return "prover";
        case Role::judge: return "judge";
        case Role::embedder: return "embedder";
    }
    return "reasoner";
}

Role role_from_name(const std::string& name) {
    if (name == "reasoner") return Role::reasoner;
    if (name == "autoformalizer") return Role::autoformalizer;
    if (name == "prover") return Role::prover;
    if (name == "judge") return Role::judge;
    if (name == "embedder") return Role::embedder;
    throw ConfigError("unknown backend role: " + name);
}

void UsageRecord::add_call(Role role, const TokenCount& tokens) {
    RoleUsage& u = roles[role_name(role)];
    u.prompt_tokens += tokens.prompt;
    u.completion_tokens += tokens.completion;
    u.calls += 1;
    u.estimated = u.estimated || tokens.estimated;
}

void UsageRecord::merge(const UsageRecord& other) {
    for (const auto& [name, u] : other.roles) {
        RoleUsage& mine = roles[name];
        mine.prompt_tokens += u.prompt_tokens;
        mine.completion_tokens += u.completion_tokens;
        mine.calls += u.calls;
        mine.estimated = mine.estimated || u.estimated;
    }
    checker_seconds += other.checker_seconds;
    checker_requests += other.checker_requests;
}

long long UsageRecord::total_tokens(Role role) const {
    auto it = roles.find(role_name(role));
    if (it == roles.end()) return 0;
    return it->second.prompt_tokens + it->second.completion_tokens;
}

long long UsageRecord::total_tokens() const {
    long long sum = 0;
    for (const auto& [name, u] : roles) sum += u.prompt_tokens + u.completion_tokens;
    return sum;
}

long long UsageRecord::total_calls() const {
    long long sum = 0;
    for (const auto& [name, u] : roles) sum += u.calls;
    return sum;
}

ScriptItem content_item(std::string content, std::string expect) {
    ScriptItem item;
    item.expect_contains = std::move(expect);
    item.reply.content = std::move(content);
    return item;
}

ScriptItem tool_item(std::string proof_step, std::string expect) {
    ScriptItem item;
    item.expect_contains = std::move(expect);
    ToolCallRequest call;
    call.name = kVerifyToolName;
    call.arguments_json = json{{"proof_step", std::move(proof_step)}}.dump();
    item.reply.tool_call = std::move(call);
    return item;
}

ScriptedChatBackend::ScriptedChatBackend(BackendProfile profile,
                                         std::vector<ScriptItem> script)
    : profile_(std::move(profile)), script_(std::move(script)) {}

ChatReply ScriptedChatBackend::chat(const std::vector<ChatMessage>& messages,
                                    const std::vector<ToolDeclaration>&,
                                    const SamplingParams&) {
    std::lock_guard<std::mutex> lk(mu_);
    ++calls_;
    if (next_ >= script_.size()) {
        throw ScriptExhausted("scripted " + std::string(role_name(profile_.role)) +
                              " backend exhausted after " +
                              std::to_string(script_.size()) + " replies");
    }
    const ScriptItem& item = script_[next_];
    if (!item.expect_contains.empty()) {
        const std::string& last = messages.empty() ? std::string() : messages.back().content;
        if (last.find(item.expect_contains) == std::string::npos) {
            throw ScriptMismatch(
                "scripted " + std::string(role_name(profile_.role)) + " item " +
                std::to_string(next_ + 1) + ": expected message containing \"" +
                item.expect_contains + "\", got \"" + last.substr(0, 120) + "\"");
        }
    }
    ++next_;
    ChatReply reply = item.reply;
    if (reply.tool_call && reply.tool_call->id.empty()) {
        reply.tool_call->id = "call" + std::to_string(calls_);
    }
    return reply;
}

long long ScriptedChatBackend::calls() const {
    std::lock_guard<std::mutex> lk(mu_);
    return calls_;
}

size_t ScriptedChatBackend::remaining() const {
    std::lock_guard<std::mutex> lk(mu_);
    return script_.size() - next_;
}

ScriptedEmbedder::ScriptedEmbedder(BackendProfile profile, int dimension,
                                   std::vector<std::vector<double>> playback)
    : profile_(std::move(profile)), dimension_(dimension),
      playback_(std::move(playback)) {}

EmbedResult ScriptedEmbedder::embed(const std::string&) {
    std::lock_guard<std::mutex> lk(mu_);
    ++calls_;
    if (next_ >= playback_.size()) {
        throw ScriptExhausted("scripted embedder exhausted after " +
                              std::to_string(playback_.size()) + " vectors");
    }
    const auto& v = playback_[next_++];
    if (static_cast<int>(v.size()) != dimension_) {
        throw ConfigError("scripted embedding has dimension " +
                          std::to_string(v.size()) + ", expected " +
                          std::to_string(dimension_));
    }
    EmbedResult out;
    out.vector = v;
    return out;
}

long long ScriptedEmbedder::calls() const {
    std::lock_guard<std::mutex> lk(mu_);
    return calls_;
}

HashEmbedder::HashEmbedder(BackendProfile profile, int dimension)
    : profile_(std::move(profile)), dimension_(dimension) {
    if (dimension_ < 1) throw ConfigError("embedding dimension must be positive");
}

EmbedResult HashEmbedder::embed(const std::string& text) {
    std::mt19937_64 rng(fnv1a(text));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(static_cast<size_t>(dimension_));
    for (double& x : v) x = normal(rng);
    EmbedResult out;
    out.vector = normalize(std::move(v));
    if (out.vector.size() == 1 && out.vector[0] == 0.0) out.vector[0] = 1.0;
    return out;
}

namespace {

struct SplitUrl {
    std::string base; // scheme://host[:port]
    std::string prefix;
};

SplitUrl split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("backend endpoint must include a scheme: " + endpoint);
    }
    if (endpoint.compare(0, scheme_end, "https") == 0) {
        throw ConfigError("https endpoints are not supported in this build: " + endpoint);
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    SplitUrl out;
    if (path_start == std::string::npos) {
        out.base = endpoint;
    } else {
        out.base = endpoint.substr(0, path_start);
        out.prefix = endpoint.substr(path_start);
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    }
    return out;
}

httplib::Headers auth_headers(const BackendProfile& profile) {
    httplib::Headers headers;
    if (!profile.api_key_env.empty()) {
        const char* key = std::getenv(profile.api_key_env.c_str());
        if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    return headers;
}

// POST with retry/backoff on transport errors, 429, and 5xx. Other
// non-200 statuses abort immediately.
std::string post_with_retries(const BackendProfile& profile, const std::string& path,
                              const std::string& body, const char* what) {
    SplitUrl url = split_endpoint(profile.endpoint);
    httplib::Client client(url.base);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(300, 0);

    std::string last_error;
    int attempts = 1 + std::max(0, profile.retry.count);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0 && profile.retry.backoff_seconds > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(
                profile.retry.backoff_seconds * attempt));
        }
        auto res = client.Post(url.prefix + path, auth_headers(profile), body,
                               "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendUnavailable(std::string(what) + " endpoint returned HTTP " +
                                     std::to_string(res->status) + ": " +
                                     res->body.substr(0, 300));
        }
        return res->body;
    }
    throw BackendUnavailable(std::string(what) + " backend unreachable after " +
                             std::to_string(attempts) + " attempts: " + last_error);
}

json message_to_wire(const ChatMessage& m) {
    json out{{"role", m.role}};
    if (m.tool_call) {
        out["content"] = nullptr;
        out["tool_calls"] = json::array({json{
            {"id", m.tool_call->id},
            {"type", "function"},
            {"function", json{{"name", m.tool_call->name},
                              {"arguments", m.tool_call->arguments_json}}}}});
    } else {
        out["content"] = m.content;
    }
    if (!m.tool_call_id.empty()) out["tool_call_id"] = m.tool_call_id;
    return out;
}

} // namespace

HttpChatBackend::HttpChatBackend(BackendProfile profile)
    : profile_(std::move(profile)) {
    split_endpoint(profile_.endpoint); // validate eagerly
}

ChatReply HttpChatBackend::chat(const std::vector<ChatMessage>& messages,
                                const std::vector<ToolDeclaration>& tools,
                                const SamplingParams& sampling) {
    json body{{"model", profile_.model}, {"messages", json::array()}};
    for (const auto& m : messages) body["messages"].push_back(message_to_wire(m));
    if (!tools.empty()) {
        body["tools"] = json::array();
        for (const auto& t : tools) {
            body["tools"].push_back(json{
                {"type", "function"},
                {"function",
                 json{{"name", t.name},
                      {"description", t.description},
                      {"parameters",
                       json{{"type", "object"},
                            {"properties",
                             json{{t.parameter_name,
                                   json{{"type", "string"},
                                        {"description", t.parameter_description}}}}},
                            {"required", json::array({t.parameter_name})}}}}}});
        }
    }
    body["temperature"] = sampling.temperature;
    if (sampling.max_tokens > 0) body["max_tokens"] = sampling.max_tokens;
    if (sampling.seed >= 0) body["seed"] = sampling.seed;

    std::string raw = post_with_retries(profile_, "/chat/completions", body.dump(), "chat");
    json reply_json = json::parse(raw, nullptr, false);
    if (reply_json.is_discarded() || !reply_json.contains("choices") ||
        !reply_json["choices"].is_array() || reply_json["choices"].empty()) {
        throw MalformedReply("chat reply has no choices: " + raw.substr(0, 300));
    }
    const json& message = reply_json["choices"][0].value("message", json::object());

    ChatReply reply;
    if (message.contains("content") && message["content"].is_string()) {
        reply.content = message["content"].get<std::string>();
    }
    if (message.contains("tool_calls") && message["tool_calls"].is_array() &&
        !message["tool_calls"].empty()) {
        const json& tc = message["tool_calls"][0];
        ToolCallRequest call;
        call.id = tc.value("id", "");
        call.name = tc.contains("function") ? tc["function"].value("name", "") : "";
        call.arguments_json =
            tc.contains("function") ? tc["function"].value("arguments", "") : "";
        if (call.name.empty()) {
            throw MalformedReply("tool call without a function name: " + tc.dump());
        }
        reply.tool_call = std::move(call);
    }
    if (reply_json.contains("usage") && reply_json["usage"].is_object()) {
        reply.usage.prompt = reply_json["usage"].value("prompt_tokens", 0LL);
        reply.usage.completion = reply_json["usage"].value("completion_tokens", 0LL);
    }
    return reply;
}

HttpEmbedder::HttpEmbedder(BackendProfile profile, int expected_dimension)
    : profile_(std::move(profile)), dimension_(expected_dimension) {
    split_endpoint(profile_.endpoint);
}

EmbedResult HttpEmbedder::embed(const std::string& text) {
    json body{{"model", profile_.model}, {"input", text}};
    std::string raw = post_with_retries(profile_, "/embeddings", body.dump(), "embedding");
    json reply = json::parse(raw, nullptr, false);
    if (reply.is_discarded() || !reply.contains("data") || !reply["data"].is_array() ||
        reply["data"].empty() || !reply["data"][0].contains("embedding")) {
        throw MalformedReply("embedding reply has no data: " + raw.substr(0, 300));
    }
    EmbedResult out;
    out.vector = reply["data"][0]["embedding"].get<std::vector<double>>();
    if (reply.contains("usage") && reply["usage"].is_object()) {
        out.usage.prompt = reply["usage"].value("prompt_tokens", 0LL);
    }
    {
        std::lock_guard<std::mutex> lk(mu_);
        if (dimension_ <= 0) {
            dimension_ = static_cast<int>(out.vector.size());
        } else if (static_cast<int>(out.vector.size()) != dimension_) {
            throw ConfigError("embedding dimension " +
                              std::to_string(out.vector.size()) +
                              " does not match the run's dimension " +
                              std::to_string(dimension_));
        }
    }
    return out;
}

ChatBackend& BackendSet::for_role(Role role) const {
    std::shared_ptr<ChatBackend> backend;
    switch (role) {
        case Role::reasoner: backend = reasoner; break;
        case Role::autoformalizer: backend = autoformalizer; break;
        case Role::prover: backend = prover; break;
        case Role::judge: backend = judge; break;
        case Role::embedder: backend = nullptr; break;
    }
    if (!backend) {
        throw ConfigError(std::string("no chat backend configured for role ") +
                          role_name(role));
    }
    return *backend;
}

ChatReply traced_chat(const BackendSet& backends, Role role,
                      const std::vector<ChatMessage>& messages,
                      const std::vector<ToolDeclaration>& tools, CallContext& ctx,
                      std::optional<long long> seed) {
    ChatBackend& backend = backends.for_role(role);
    SamplingParams sampling = backend.profile().sampling;
    if (seed) sampling.seed = *seed;

    std::string request_digest;
    for (const auto& m : messages) {
        request_digest += m.role;
        request_digest += '\x1f';
        request_digest += m.content;
        if (m.tool_call) request_digest += m.tool_call->arguments_json;
        request_digest += '\x1e';
    }

    ChatReply reply = backend.chat(messages, tools, sampling);
    if (reply.usage.prompt == 0 && reply.usage.completion == 0) {
        for (const auto& m : messages) reply.usage.prompt += estimate_tokens(m.content);
        reply.usage.completion = estimate_tokens(reply.content);
        if (reply.tool_call) {
            reply.usage.completion += estimate_tokens(reply.tool_call->arguments_json);
        }
        reply.usage.estimated = true;
    }
    if (ctx.usage) ctx.usage->add_call(role, reply.usage);
    if (ctx.trace) {
        json payload{{"id", ctx.trace->next_id("b")},
                     {"role", role_name(role)},
                     {"model", backend.profile().model},
                     {"request_hash", fnv1a_hex(request_digest)},
                     {"content", reply.content},
                     {"usage", json{{"prompt", reply.usage.prompt},
                                    {"completion", reply.usage.completion},
                                    {"estimated", reply.usage.estimated}}}};
        if (reply.tool_call) {
            payload["tool_call"] = json{{"id", reply.tool_call->id},
                                        {"name", reply.tool_call->name},
                                        {"arguments", reply.tool_call->arguments_json}};
        }
        ctx.trace->emit("backend_reply", std::move(payload));
    }
    return reply;
}

std::vector<double> traced_embed(const BackendSet& backends, const std::string& text,
                                 CallContext& ctx) {
    if (!backends.embedder) throw EmbeddingUnavailable("no embedder configured");
    EmbedResult result = backends.embedder->embed(text);
    if (result.usage.prompt == 0 && result.usage.completion == 0) {
        result.usage.prompt = estimate_tokens(text);
        result.usage.estimated = true;
    }
    if (ctx.usage) ctx.usage->add_call(Role::embedder, result.usage);
    if (ctx.trace) {
        ctx.trace->emit("embedding",
                        json{{"id", ctx.trace->next_id("e")},
                             {"text", text},
                             {"vector", result.vector},
                             {"usage", json{{"prompt", result.usage.prompt},
                                            {"completion", result.usage.completion},
                                            {"estimated", result.usage.estimated}}}});
    }
    return result.vector;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) return 0.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> normalize(std::vector<double> v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return v;
    for (double& x : v) x /= norm;
    return v;
}

} // namespace hermes
