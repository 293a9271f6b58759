#include "hermes/config.hpp"

#include "hermes/errors.hpp"
#include "hermes/prompts.hpp"
#include "hermes/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <thread>

namespace hermes {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw ConfigError(path + " " + why);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "must be an object");
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = std::any_of(allowed.begin(), allowed.end(),
                                 [&](const char* k) { return it.key() == k; });
        if (!known) fail(join(path, it.key()), "is not a recognized setting");
    }
}

std::string read_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "must be a string");
    return j.get<std::string>();
}

bool read_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "must be true or false");
    return j.get<bool>();
}

long long read_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "must be an integer");
    return j.get<long long>();
}

double read_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "must be a number");
    return j.get<double>();
}

void set_string(const json& obj, const std::string& path, const char* key,
                std::string& out) {
    if (const json* v = find(obj, key)) out = read_string(*v, join(path, key));
}

std::string require_string(const json& obj, const std::string& path,
                           const char* key) {
    const json* v = find(obj, key);
    if (!v) fail(join(path, key), "is required");
    std::string s = read_string(*v, join(path, key));
    if (trim(s).empty()) fail(join(path, key), "must not be empty");
    return s;
}

bool chat_role_name(const std::string& name) {
    return name == "reasoner" || name == "autoformalizer" ||
           name == "prover" || name == "judge";
}

RoleEndpoint parse_role(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path, {"endpoint", "model", "api_key_env", "sampling", "retry"});
    RoleEndpoint ep;
    ep.endpoint = require_string(j, path, "endpoint");
    ep.model = require_string(j, path, "model");
    set_string(j, path, "api_key_env", ep.api_key_env);
    if (const json* s = find(j, "sampling")) {
        const std::string spath = join(path, "sampling");
        expect_object(*s, spath);
        reject_unknown(*s, spath, {"temperature", "seed", "max_tokens"});
        if (const json* v = find(*s, "temperature")) {
            ep.sampling.temperature = read_number(*v, join(spath, "temperature"));
            if (ep.sampling.temperature < 0)
                fail(join(spath, "temperature"), "must be non-negative");
        }
        if (const json* v = find(*s, "seed"))
            ep.sampling.seed = read_int(*v, join(spath, "seed"));
        if (const json* v = find(*s, "max_tokens")) {
            ep.sampling.max_tokens =
                static_cast<int>(read_int(*v, join(spath, "max_tokens")));
            if (ep.sampling.max_tokens < 0)
                fail(join(spath, "max_tokens"), "must be non-negative");
        }
    }
    if (const json* r = find(j, "retry")) {
        const std::string rpath = join(path, "retry");
        expect_object(*r, rpath);
        reject_unknown(*r, rpath, {"count", "backoff_seconds"});
        if (const json* v = find(*r, "count")) {
            ep.retry.count = static_cast<int>(read_int(*v, join(rpath, "count")));
            if (ep.retry.count < 0) fail(join(rpath, "count"), "must be non-negative");
        }
        if (const json* v = find(*r, "backoff_seconds")) {
            ep.retry.backoff_seconds = read_number(*v, join(rpath, "backoff_seconds"));
            if (ep.retry.backoff_seconds < 0)
                fail(join(rpath, "backoff_seconds"), "must be non-negative");
        }
    }
    return ep;
}

EmbedderSetup parse_embedder(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path, {"kind", "endpoint", "model", "api_key_env", "dimension"});
    EmbedderSetup e;
    set_string(j, path, "kind", e.kind);
    if (e.kind != "hash" && e.kind != "http")
        fail(join(path, "kind"), "must be \"hash\" or \"http\"");
    set_string(j, path, "endpoint", e.endpoint);
    set_string(j, path, "model", e.model);
    set_string(j, path, "api_key_env", e.api_key_env);
    const json* dim = find(j, "dimension");
    if (dim) e.dimension = static_cast<int>(read_int(*dim, join(path, "dimension")));
    if (e.kind == "hash") {
        if (e.dimension < 1)
            fail(join(path, "dimension"), "must be at least 1 for the hash embedder");
    } else {
        if (!dim) e.dimension = 0; // adopt the provider's width
        if (e.dimension < 0) fail(join(path, "dimension"), "must be non-negative");
        if (trim(e.endpoint).empty())
            fail(join(path, "endpoint"), "is required for the http embedder");
    }
    return e;
}

CheckerConfig parse_checker(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path, {"executable_path", "args", "project_root", "default_timeout",
                             "startup_header", "env", "handshake_timeout"});
    CheckerConfig c;
    c.executable_path = require_string(j, path, "executable_path");
    if (const json* v = find(j, "args")) {
        const std::string apath = join(path, "args");
        if (!v->is_array()) fail(apath, "must be an array of strings");
        for (size_t i = 0; i < v->size(); ++i)
            c.args.push_back(read_string((*v)[i], apath + "[" + std::to_string(i) + "]"));
    }
    set_string(j, path, "project_root", c.project_root);
    if (const json* v = find(j, "default_timeout")) {
        c.default_timeout = read_number(*v, join(path, "default_timeout"));
        if (c.default_timeout <= 0) fail(join(path, "default_timeout"), "must be positive");
    }
    set_string(j, path, "startup_header", c.startup_header);
    if (const json* v = find(j, "env")) {
        const std::string epath = join(path, "env");
        expect_object(*v, epath);
        for (auto it = v->begin(); it != v->end(); ++it)
            c.env.emplace_back(it.key(), read_string(it.value(), join(epath, it.key())));
    }
    if (const json* v = find(j, "handshake_timeout")) {
        c.handshake_timeout = read_number(*v, join(path, "handshake_timeout"));
        if (c.handshake_timeout < 0)
            fail(join(path, "handshake_timeout"), "must be non-negative");
    }
    return c;
}

void parse_scheduler(const json& j, const std::string& path, RunConfig& c) {
    expect_object(j, path);
    reject_unknown(j, path, {"workers", "spawn_attempts"});
    if (const json* v = find(j, "workers"))
        c.scheduler_workers = static_cast<int>(read_int(*v, join(path, "workers")));
    if (const json* v = find(j, "spawn_attempts")) {
        c.spawn_attempts = static_cast<int>(read_int(*v, join(path, "spawn_attempts")));
        if (c.spawn_attempts < 1) fail(join(path, "spawn_attempts"), "must be at least 1");
    }
}

void parse_episode(const json& j, const std::string& path, EpisodeConfig& e) {
    expect_object(j, path);
    reject_unknown(j, path,
                   {"token_budget", "wall_clock_limit", "tool_enabled", "max_tool_calls"});
    if (const json* v = find(j, "token_budget")) {
        e.token_budget = read_int(*v, join(path, "token_budget"));
        if (e.token_budget < 1) fail(join(path, "token_budget"), "must be at least 1");
    }
    if (const json* v = find(j, "wall_clock_limit"))
        e.wall_clock_limit = read_number(*v, join(path, "wall_clock_limit"));
    if (const json* v = find(j, "tool_enabled"))
        e.tool_enabled = read_bool(*v, join(path, "tool_enabled"));
    if (const json* v = find(j, "max_tool_calls")) {
        e.max_tool_calls = static_cast<int>(read_int(*v, join(path, "max_tool_calls")));
        if (e.max_tool_calls < 0) fail(join(path, "max_tool_calls"), "must be non-negative");
    }
}

void parse_verify(const json& j, const std::string& path, VerifyConfig& v) {
    expect_object(j, path);
    reject_unknown(j, path, {"k_t", "k_p", "builtin_tactics", "memory_k", "use_memory",
                             "default_header"});
    if (const json* x = find(j, "k_t")) {
        v.translation.K_t = static_cast<int>(read_int(*x, join(path, "k_t")));
        if (v.translation.K_t < 1) fail(join(path, "k_t"), "must be at least 1");
    }
    if (const json* x = find(j, "k_p")) {
        v.prover.K_p = static_cast<int>(read_int(*x, join(path, "k_p")));
        if (v.prover.K_p < 1) fail(join(path, "k_p"), "must be at least 1");
    }
    if (const json* x = find(j, "builtin_tactics")) {
        const std::string tpath = join(path, "builtin_tactics");
        if (!x->is_array()) fail(tpath, "must be an array of strings");
        v.prover.builtin_tactics.clear();
        for (size_t i = 0; i < x->size(); ++i)
            v.prover.builtin_tactics.push_back(
                read_string((*x)[i], tpath + "[" + std::to_string(i) + "]"));
    }
    if (const json* x = find(j, "memory_k")) {
        v.memory_k = static_cast<int>(read_int(*x, join(path, "memory_k")));
        if (v.memory_k < 0) fail(join(path, "memory_k"), "must be non-negative");
    }
    if (const json* x = find(j, "use_memory"))
        v.use_memory = read_bool(*x, join(path, "use_memory"));
    if (const json* x = find(j, "default_header"))
        v.default_header = read_string(*x, join(path, "default_header"));
}

void parse_prover(const json& j, const std::string& path, ProverConfig& p) {
    expect_object(j, path);
    reject_unknown(j, path, {"use_prover_model", "proof_timeout"});
    if (const json* x = find(j, "use_prover_model"))
        p.use_prover_model = read_bool(*x, join(path, "use_prover_model"));
    if (const json* x = find(j, "proof_timeout"))
        p.proof_timeout = read_number(*x, join(path, "proof_timeout"));
}

ModelCostConfig parse_cost(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path, {"params", "n_layer", "d_attn", "n_ctx"});
    ModelCostConfig c;
    const json* params = find(j, "params");
    if (!params) fail(join(path, "params"), "is required");
    c.params = read_int(*params, join(path, "params"));
    if (c.params < 0) fail(join(path, "params"), "must be non-negative");
    if (const json* v = find(j, "n_layer")) {
        c.n_layer = read_int(*v, join(path, "n_layer"));
        if (c.n_layer < 0) fail(join(path, "n_layer"), "must be non-negative");
    }
    if (const json* v = find(j, "d_attn")) {
        c.d_attn = read_int(*v, join(path, "d_attn"));
        if (c.d_attn < 0) fail(join(path, "d_attn"), "must be non-negative");
    }
    if (const json* v = find(j, "n_ctx")) {
        c.n_ctx = read_int(*v, join(path, "n_ctx"));
        if (c.n_ctx < 1) fail(join(path, "n_ctx"), "must be at least 1");
    }
    return c;
}

} // namespace

RunConfig run_config_from_json(const nlohmann::json& j, const std::string& origin) {
    try {
        expect_object(j, "config");
        reject_unknown(j, "", {"roles", "embedder", "checker", "scheduler", "episode",
                               "verify", "prover", "costs", "prompts"});
        RunConfig c;
        if (const json* roles = find(j, "roles")) {
            expect_object(*roles, "roles");
            for (auto it = roles->begin(); it != roles->end(); ++it) {
                const std::string path = join("roles", it.key());
                if (!chat_role_name(it.key()))
                    fail(path, "is not a chat role (expected reasoner, autoformalizer, "
                               "prover, or judge)");
                c.roles[it.key()] = parse_role(it.value(), path);
            }
        }
        if (const json* e = find(j, "embedder")) c.embedder = parse_embedder(*e, "embedder");
        if (const json* ch = find(j, "checker")) c.checker = parse_checker(*ch, "checker");
        if (const json* s = find(j, "scheduler")) parse_scheduler(*s, "scheduler", c);
        if (const json* ep = find(j, "episode")) parse_episode(*ep, "episode", c.episode);
        if (const json* v = find(j, "verify")) parse_verify(*v, "verify", c.verify);
        if (const json* p = find(j, "prover")) parse_prover(*p, "prover", c.prover);
        if (const json* costs = find(j, "costs")) {
            expect_object(*costs, "costs");
            for (auto it = costs->begin(); it != costs->end(); ++it)
                c.costs[it.key()] = parse_cost(it.value(), join("costs", it.key()));
        }
        if (const json* pr = find(j, "prompts")) c.prompts_path = read_string(*pr, "prompts");
        return c;
    } catch (const ConfigError& e) {
        if (origin.empty()) throw;
        throw ConfigError(origin + ": " + e.what());
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return run_config_from_json(j, path);
}

BackendSet build_backends(const RunConfig& config) {
    auto endpoint_for = [&](const char* name) -> const RoleEndpoint* {
        auto it = config.roles.find(name);
        return it == config.roles.end() ? nullptr : &it->second;
    };
    const RoleEndpoint* reasoner = endpoint_for("reasoner");
    if (!reasoner) throw ConfigError("roles.reasoner is required to build backends");
    auto make_chat = [&](Role role) {
        const RoleEndpoint* ep = endpoint_for(role_name(role));
        if (!ep) ep = reasoner;
        BackendProfile p;
        p.role = role;
        p.endpoint = ep->endpoint;
        p.model = ep->model;
        p.api_key_env = ep->api_key_env;
        p.sampling = ep->sampling;
        p.retry = ep->retry;
        return std::make_shared<HttpChatBackend>(std::move(p));
    };
    BackendSet set;
    set.reasoner = make_chat(Role::reasoner);
    set.autoformalizer = make_chat(Role::autoformalizer);
    set.prover = make_chat(Role::prover);
    set.judge = make_chat(Role::judge);

    BackendProfile ep;
    ep.role = Role::embedder;
    ep.endpoint = config.embedder.endpoint;
    ep.model = config.embedder.model.empty() ? config.embedder.kind : config.embedder.model;
    ep.api_key_env = config.embedder.api_key_env;
    if (config.embedder.kind == "http")
        set.embedder = std::make_shared<HttpEmbedder>(std::move(ep), config.embedder.dimension);
    else
        set.embedder = std::make_shared<HashEmbedder>(std::move(ep), config.embedder.dimension);
    return set;
}

int resolve_workers(const RunConfig& config) {
    if (config.scheduler_workers > 0) return config.scheduler_workers;
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    return std::max(1, std::min(2 * config.verify.prover.K_p, hw));
}

PromptCatalog load_prompts(const RunConfig& config) {
    if (config.prompts_path.empty()) return PromptCatalog::defaults();
    return PromptCatalog::with_overrides(config.prompts_path);
}

} // namespace hermes
