#pragma once

#include <map>
#include <string>

namespace hermes {

inline constexpr const char* kVerifyToolName = "verify_one_mathematical_step";

// Template store with <placeholder> substitution. Ships the packaged
// defaults; a JSON file ({key: template}) overrides individual entries.
class PromptCatalog {
public:
    static PromptCatalog defaults();
    static PromptCatalog with_overrides(const std::string& path);

    const std::string& get(const std::string& key) const; // throws ConfigError
    bool has(const std::string& key) const;

    std::string render(const std::string& key,
                       const std::map<std::string, std::string>& vars) const;

    // The appendix ships per-model prompt variants; selection keys on the
    // configured model name.
    std::string autoformalize_key(const std::string& model_name) const;
    std::string prove_key(const std::string& model_name) const;

    std::map<std::string, std::string> templates;
};

} // namespace hermes
