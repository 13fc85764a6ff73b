#pragma once

// LLM access layer. One blocking Provider interface with two implementations:
// an HTTP chat-completion client and a deterministic replay table keyed by a
// digest of the exact prompt text. A recording wrapper captures live responses
// into the same table format so any run can be replayed bit for bit. The
// response-to-patch parser lives here too, next to the formats it understands.

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "httplib.h"

#include "flakyfix/errors.hpp"
#include "flakyfix/java/model.hpp"
#include "flakyfix/java/parser.hpp"
#include "flakyfix/java/patching.hpp"

namespace flakyfix {

enum class ProviderKind { HttpApi, Replay };

inline std::string_view to_string(ProviderKind k) {
    switch (k) {
        case ProviderKind::HttpApi: return "HTTP_API";
        case ProviderKind::Replay: return "REPLAY";
    }
    return "?";
}

inline ProviderKind provider_kind_from_string(std::string_view s) {
    if (s == "HTTP_API") return ProviderKind::HttpApi;
    if (s == "REPLAY") return ProviderKind::Replay;
    fail(ErrorCode::BadInput, "unknown provider kind '" + std::string(s) + "'");
}

/// `credentials` is a bearer token the caller loads from an environment
/// variable (the CLI reads FLAKYFIX_API_KEY). It is used on the wire and
/// nowhere else: no report, fixture file, or log may ever contain it.
struct ProviderConfig {
    ProviderKind kind = ProviderKind::Replay;

    // HTTP_API
    std::string endpoint;  // full URL, e.g. http://host:8080/v1/chat/completions
    std::string model;
    std::string credentials;

    // REPLAY
    std::string fixture_path;

    double temperature = 0.0;
    int max_output_tokens = 4096;
    int request_timeout_s = 60;

    // Where the interesting fields live in the HTTP response body, as JSON
    // pointers. Defaults match the common chat-completion shape; providers
    // with a different envelope override them.
    std::string text_path = "/choices/0/message/content";
    std::string tokens_in_path = "/usage/prompt_tokens";
    std::string tokens_out_path = "/usage/completion_tokens";

    void validate() const {
        if (kind == ProviderKind::Replay && fixture_path.empty())
            fail(ErrorCode::BadInput, "REPLAY provider requires fixture_path");
        if (kind == ProviderKind::HttpApi) {
            if (endpoint.empty()) fail(ErrorCode::BadInput, "HTTP_API provider requires endpoint");
            if (model.empty()) fail(ErrorCode::BadInput, "HTTP_API provider requires model");
        }
        if (temperature < 0.0) fail(ErrorCode::BadInput, "negative temperature");
        if (max_output_tokens < 1) fail(ErrorCode::BadInput, "max_output_tokens below 1");
        if (request_timeout_s < 1) fail(ErrorCode::BadInput, "request_timeout_s below 1");
    }
};

struct Completion {
    std::string text;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
    double latency_s = 0.0;

    bool operator==(const Completion&) const = default;

    void validate() const {
        if (tokens_in < 0 || tokens_out < 0) fail(ErrorCode::BadInput, "negative token count");
        if (latency_s < 0.0) fail(ErrorCode::BadInput, "negative latency");
    }
};

/// Replay-table key: FNV-1a (64 bit) over the exact prompt bytes, as sixteen
/// lowercase hex digits. The digest is a function of the rendered text alone,
/// so fixtures survive any refactor that leaves renderings unchanged and go
/// stale the moment a rendering drifts. Pinned by reference vectors in tests.
inline std::string prompt_digest(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xF];
        h >>= 4;
    }
    return out;
}

/// One completion per call, blocking. Implementations are safe to share
/// across worker threads; the orchestrator's job pool bounds concurrency.
class Provider {
  public:
    virtual ~Provider() = default;
    virtual Completion complete(const std::string& prompt_text) = 0;
};

namespace detail {

/// Fixture files are a single JSON object: prompt digest → response text.
inline std::map<std::string, std::string> load_fixture_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::BadInput, "cannot open fixture file " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        fail(ErrorCode::Decode, "fixture file " + path + " is not a JSON object");
    std::map<std::string, std::string> table;
    for (const auto& [digest, value] : doc.items()) {
        if (!value.is_string())
            fail(ErrorCode::Decode, "fixture entry " + digest + " in " + path + " is not a string");
        table.emplace(digest, value.get<std::string>());
    }
    return table;
}

inline void store_fixture_table(const std::string& path,
                                const std::map<std::string, std::string>& table) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [digest, text] : table) doc[digest] = text;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Infra, "cannot write fixture file " + path);
    out << doc.dump(2) << '\n';
}

/// Crude but deterministic byte→token ratio used where no real accounting
/// exists (replay). Four bytes per token, rounded up.
inline std::int64_t synthetic_tokens(std::string_view text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

}  // namespace detail

/// Deterministic provider backed by a digest→response table. Latency is
/// always zero and token counts are synthesized from byte lengths, so an
/// identical prompt yields an identical Completion in any process.
class ReplayProvider : public Provider {
  public:
    explicit ReplayProvider(const ProviderConfig& config) {
        config.validate();
        if (config.kind != ProviderKind::Replay)
            fail(ErrorCode::BadInput, "ReplayProvider built from a non-REPLAY config");
        path_ = config.fixture_path;
        table_ = detail::load_fixture_table(path_);
    }

    Completion complete(const std::string& prompt_text) override {
        std::string digest = prompt_digest(prompt_text);
        auto it = table_.find(digest);
        if (it == table_.end())
            fail(ErrorCode::FixtureMiss,
                 "no entry for prompt digest " + digest + " in " + path_);
        Completion c;
        c.text = it->second;
        c.tokens_in = detail::synthetic_tokens(prompt_text);
        c.tokens_out = detail::synthetic_tokens(c.text);
        c.latency_s = 0.0;
        return c;
    }

  private:
    std::string path_;
    std::map<std::string, std::string> table_;
};

/// Wraps any provider and persists (digest → response text) after every
/// successful call. Existing entries are kept; a re-recorded digest takes the
/// newest response. A later ReplayProvider on the same file reproduces the
/// recorded texts bit for bit.
class RecordingProvider : public Provider {
  public:
    RecordingProvider(std::unique_ptr<Provider> inner, std::string fixture_path)
        : inner_(std::move(inner)), path_(std::move(fixture_path)) {
        if (!inner_) fail(ErrorCode::BadInput, "recording wrapper needs an inner provider");
        if (path_.empty()) fail(ErrorCode::BadInput, "recording wrapper needs a fixture path");
        if (std::ifstream probe(path_); probe) table_ = detail::load_fixture_table(path_);
    }

    Completion complete(const std::string& prompt_text) override {
        Completion c = inner_->complete(prompt_text);
        std::lock_guard<std::mutex> lock(mutex_);
        table_[prompt_digest(prompt_text)] = c.text;
        detail::store_fixture_table(path_, table_);  // flushed per call; crashes lose nothing
        return c;
    }

  private:
    std::unique_ptr<Provider> inner_;
    std::string path_;
    std::map<std::string, std::string> table_;
    std::mutex mutex_;
};

namespace detail {

struct EndpointParts {
    std::string base;  // scheme://host[:port]
    std::string path;  // always begins with '/'
};

inline EndpointParts split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        fail(ErrorCode::BadInput, "endpoint '" + endpoint + "' has no scheme");
    auto path_begin = endpoint.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_begin), endpoint.substr(path_begin)};
}

}  // namespace detail

/// Single-turn chat over HTTP: the whole prompt is the first (and only) user
/// message, the reply is the first message of the response. Transport errors
/// and timeouts are retried once, then surface as PROVIDER_ERROR; an HTTP 4xx
/// is not retried (the request will not get better). Plain HTTP out of the
/// box; TLS needs httplib built with CPPHTTPLIB_OPENSSL_SUPPORT.
class HttpProvider : public Provider {
  public:
    explicit HttpProvider(const ProviderConfig& config) : config_(config) {
        config.validate();
        if (config.kind != ProviderKind::HttpApi)
            fail(ErrorCode::BadInput, "HttpProvider built from a non-HTTP_API config");
        parts_ = detail::split_endpoint(config.endpoint);
    }

    Completion complete(const std::string& prompt_text) override {
        nlohmann::json body = {
            {"model", config_.model},
            {"temperature", config_.temperature},
            {"max_tokens", config_.max_output_tokens},
            {"messages",
             nlohmann::json::array({{{"role", "user"}, {"content", prompt_text}}})},
        };
        std::string payload = body.dump();

        httplib::Headers headers;
        if (!config_.credentials.empty())
            headers.emplace("Authorization", "Bearer " + config_.credentials);

        std::string last_error;
        for (int attempt = 0; attempt < 2; ++attempt) {
            httplib::Client client(parts_.base);
            client.set_connection_timeout(config_.request_timeout_s, 0);
            client.set_read_timeout(config_.request_timeout_s, 0);
            client.set_write_timeout(config_.request_timeout_s, 0);

            auto started = std::chrono::steady_clock::now();
            httplib::Result res = client.Post(parts_.path, headers, payload, "application/json");
            double elapsed = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();

            if (!res) {
                last_error = "transport failure (" + httplib::to_string(res.error()) + ")";
                continue;  // transport/timeout: retry once
            }
            if (res->status >= 500) {
                last_error = "server status " + std::to_string(res->status);
                continue;
            }
            if (res->status >= 300)
                fail(ErrorCode::ProviderError,
                     "endpoint returned status " + std::to_string(res->status));
            return parse_response(res->body, prompt_text, elapsed);
        }
        fail(ErrorCode::ProviderError, "request failed after retry: " + last_error);
    }

  private:
    Completion parse_response(const std::string& body, const std::string& prompt_text,
                              double elapsed) const {
        nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
        if (doc.is_discarded())
            fail(ErrorCode::ProviderError, "response body is not JSON");
        nlohmann::json::json_pointer text_at(config_.text_path);
        if (!doc.contains(text_at) || !doc.at(text_at).is_string())
            fail(ErrorCode::ProviderError,
                 "response has no string at " + config_.text_path);
        Completion c;
        c.text = doc.at(text_at).get<std::string>();
        c.tokens_in = read_tokens(doc, config_.tokens_in_path, prompt_text);
        c.tokens_out = read_tokens(doc, config_.tokens_out_path, c.text);
        c.latency_s = elapsed;
        c.validate();
        return c;
    }

    // Providers that omit usage accounting get the synthetic byte estimate.
    static std::int64_t read_tokens(const nlohmann::json& doc, const std::string& path,
                                    std::string_view fallback_text) {
        nlohmann::json::json_pointer at(path);
        if (doc.contains(at) && doc.at(at).is_number_integer()) {
            auto n = doc.at(at).get<std::int64_t>();
            if (n >= 0) return n;
        }
        return detail::synthetic_tokens(fallback_text);
    }

    ProviderConfig config_;
    detail::EndpointParts parts_;
};

/// Builds the provider a config describes. `record_path`, when non-empty,
/// wraps the provider so every response is captured for later replay.
inline std::unique_ptr<Provider> make_provider(const ProviderConfig& config,
                                               const std::string& record_path = "") {
    config.validate();
    std::unique_ptr<Provider> p;
    if (config.kind == ProviderKind::Replay)
        p = std::make_unique<ReplayProvider>(config);
    else
        p = std::make_unique<HttpProvider>(config);
    if (!record_path.empty())
        p = std::make_unique<RecordingProvider>(std::move(p), record_path);
    return p;
}

namespace detail {

struct FencedBlock {
    std::string tag;    // first word after the backticks; "" for a bare fence
    std::string label;  // rest of the fence line, trimmed
    std::string body;   // lines between the fences, newline-joined
};

inline std::string trim_copy(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

/// Splits a response into fenced code blocks. A fence is a line whose first
/// non-blank characters are three backticks; an unclosed final fence runs to
/// the end of the text (models trail off, the content is still usable).
inline std::vector<FencedBlock> fenced_blocks(const std::string& text) {
    std::vector<FencedBlock> blocks;
    std::istringstream in(text);
    std::string line;
    bool open = false;
    FencedBlock current;
    bool first_body_line = true;
    while (std::getline(in, line)) {
        std::string stripped = trim_copy(line);
        if (stripped.rfind("```", 0) == 0) {
            if (!open) {
                current = FencedBlock{};
                std::string rest = trim_copy(stripped.substr(3));
                auto space = rest.find_first_of(" \t");
                current.tag = space == std::string::npos ? rest : rest.substr(0, space);
                current.label =
                    space == std::string::npos ? "" : trim_copy(rest.substr(space + 1));
                open = true;
                first_body_line = true;
            } else {
                blocks.push_back(std::move(current));
                open = false;
            }
            continue;
        }
        if (open) {
            if (!first_body_line) current.body += '\n';
            current.body += line;
            first_body_line = false;
        }
    }
    if (open) blocks.push_back(std::move(current));
    return blocks;
}

/// All method declarations in a block, each with its exact text. Empty when
/// the block is not parseable Java or contains anything besides methods.
inline std::vector<std::pair<std::string, std::string>> methods_in_block(
    const std::string& body) {
    std::string wrapped = "class __ResponseBlock {\n" + body + "\n}\n";
    java::ClassModel wrapper;
    try {
        wrapper = java::parse_test_class(wrapped);
    } catch (const Error&) {
        return {};
    }
    if (wrapper.methods.empty() || !wrapper.fields.empty() || !wrapper.opaque_members.empty())
        return {};
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& m : wrapper.methods)
        out.emplace_back(m.name, std::string(wrapper.slice(m.span)));
    return out;
}

inline bool plausible_import_name(std::string_view name) {
    if (name.empty() || name.front() == '.' || name.back() == '.') return false;
    for (char c : name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '$' ||
              c == '*'))
            return false;
    return true;
}

/// One IMPORTS line. Accepts `import a.b.C;`, bare `a.b.C`, static imports,
/// and a leading '-' meaning "drop this import". Lines that do not look like
/// an import are skipped: the compiler, not the parser, judges the patch.
inline void parse_import_line(const std::string& raw, java::PatchCandidate& patch) {
    std::string line = trim_copy(raw);
    if (line.empty()) return;
    bool remove = false;
    if (line.front() == '-') {
        remove = true;
        line = trim_copy(line.substr(1));
    }
    if (line.rfind("import ", 0) == 0) line = trim_copy(line.substr(7));
    if (!line.empty() && line.back() == ';') line = trim_copy(line.substr(0, line.size() - 1));
    bool is_static = false;
    if (line.rfind("static ", 0) == 0) {
        is_static = true;
        line = trim_copy(line.substr(7));
    }
    if (!plausible_import_name(line)) return;
    auto& bucket = remove ? patch.removed_imports : patch.new_imports;
    for (const auto& existing : bucket)
        if (existing.qualified_name == line && existing.is_static == is_static) return;
    bucket.push_back(java::make_import(line, is_static));
}

/// One BUILD_DEPS line: group:artifact:version. A leading "- " bullet is
/// tolerated; anything that does not split into three parts is skipped.
inline void parse_build_dep_line(const std::string& raw, java::PatchCandidate& patch) {
    std::string line = trim_copy(raw);
    if (line.rfind("- ", 0) == 0) line = trim_copy(line.substr(2));
    if (line.empty()) return;
    std::array<std::string, 3> parts;
    std::size_t begin = 0;
    for (int i = 0; i < 3; ++i) {
        auto colon = line.find(':', begin);
        if (i < 2) {
            if (colon == std::string::npos) return;
            parts[static_cast<std::size_t>(i)] = line.substr(begin, colon - begin);
            begin = colon + 1;
        } else {
            if (colon != std::string::npos) return;  // a fourth segment is not a coordinate
            parts[2] = line.substr(begin);
        }
    }
    for (const auto& p : parts)
        if (p.empty()) return;
    if (std::find(patch.build_dependencies.begin(), patch.build_dependencies.end(), parts) ==
        patch.build_dependencies.end())
        patch.build_dependencies.push_back(parts);
}

}  // namespace detail

/// Turns a completion into a PatchCandidate against `target`.
///
/// The happy path is the rule-6 contract: blocks tagged METHOD, IMPORTS, and
/// BUILD_DEPS. The declared method name inside a METHOD block is
/// authoritative (it is what the compiler will see); the fence label is only
/// the model's claim. When no METHOD block yields a method, untagged fenced
/// blocks are tried as whole method declarations — the lenient fallback for
/// models that ignore the formatting rule. Replacement keys are never
/// invented: every key is a method name parsed out of the response text.
/// An import listed both added and removed resolves to removed.
inline java::PatchCandidate extract_patch(const std::string& response_text,
                                          const java::ClassModel& target) {
    java::PatchCandidate patch;
    patch.raw_response = response_text;

    std::vector<detail::FencedBlock> blocks = detail::fenced_blocks(response_text);
    std::vector<const detail::FencedBlock*> untagged;
    bool saw_method_tag = false;
    for (const auto& block : blocks) {
        if (block.tag == "METHOD") {
            saw_method_tag = true;
            for (auto& [name, text] : detail::methods_in_block(block.body))
                patch.method_replacements[name] = text;
        } else if (block.tag == "IMPORTS") {
            std::istringstream lines(block.body);
            for (std::string line; std::getline(lines, line);)
                detail::parse_import_line(line, patch);
        } else if (block.tag == "BUILD_DEPS") {
            std::istringstream lines(block.body);
            for (std::string line; std::getline(lines, line);)
                detail::parse_build_dep_line(line, patch);
        } else {
            untagged.push_back(&block);
        }
    }

    if (patch.method_replacements.empty() && !saw_method_tag)
        for (const auto* block : untagged)
            for (auto& [name, text] : detail::methods_in_block(block->body))
                patch.method_replacements[name] = text;

    if (patch.method_replacements.empty() && patch.new_imports.empty() &&
        patch.removed_imports.empty() && patch.build_dependencies.empty())
        fail(ErrorCode::UnparseableResponse, "no parseable code block in response");

    // '-' wins over a contradictory add of the same import
    std::erase_if(patch.new_imports, [&](const java::ImportDecl& added) {
        for (const auto& removed : patch.removed_imports)
            if (removed.qualified_name == added.qualified_name &&
                removed.is_static == added.is_static)
                return true;
        return false;
    });

    for (const auto& [name, text] : patch.method_replacements)
        if (!target.find_method(name)) patch.added_methods.insert(name);

    patch.validate(target);
    return patch;
}

}  // namespace flakyfix
