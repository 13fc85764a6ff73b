#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "flakyfix/errors.hpp"
#include "flakyfix/model.hpp"

namespace flakyfix {

/// Session reports are versioned JSON. Bump the version only on breaking
/// schema changes; decode rejects any other version string.
inline constexpr std::string_view kReportSchemaVersion = "flakyfix.session/1";

namespace detail {

using nlohmann::json;

[[noreturn]] inline void decode_fail(const std::string& path, const std::string& what) {
    fail(ErrorCode::Decode, path + ": " + what);
}

inline const json& member(const json& j, const std::string& path, const char* name) {
    if (!j.is_object()) decode_fail(path, "expected object");
    auto it = j.find(name);
    if (it == j.end()) decode_fail(path + "." + name, "missing");
    return *it;
}

inline std::string get_string(const json& j, const std::string& path, const char* name) {
    const json& v = member(j, path, name);
    if (!v.is_string()) decode_fail(path + "." + name, "expected string");
    return v.get<std::string>();
}

inline std::int64_t get_int(const json& j, const std::string& path, const char* name) {
    const json& v = member(j, path, name);
    if (!v.is_number_integer()) decode_fail(path + "." + name, "expected integer");
    return v.get<std::int64_t>();
}

inline double get_number(const json& j, const std::string& path, const char* name) {
    const json& v = member(j, path, name);
    if (!v.is_number()) decode_fail(path + "." + name, "expected number");
    return v.get<double>();
}

inline const json& get_array(const json& j, const std::string& path, const char* name) {
    const json& v = member(j, path, name);
    if (!v.is_array()) decode_fail(path + "." + name, "expected array");
    return v;
}

inline json encode_test_id(const TestId& t) {
    return json{{"class_fqn", t.class_fqn}, {"method", t.method}, {"module_path", t.module_path}};
}

inline TestId decode_test_id(const json& j, const std::string& path) {
    TestId t;
    t.class_fqn = get_string(j, path, "class_fqn");
    t.method = get_string(j, path, "method");
    t.module_path = get_string(j, path, "module_path");
    return t;
}

inline json encode_diagnostic(const CompilationDiagnostic& d) {
    return json{{"file", d.file},
                {"line", d.line},
                {"kind", std::string(to_string(d.kind))},
                {"symbol", d.symbol},
                {"raw_message", d.raw_message}};
}

inline CompilationDiagnostic decode_diagnostic(const json& j, const std::string& path) {
    CompilationDiagnostic d;
    d.file = get_string(j, path, "file");
    d.line = static_cast<int>(get_int(j, path, "line"));
    try {
        d.kind = diagnostic_kind_from_string(get_string(j, path, "kind"));
    } catch (const Error& e) {
        decode_fail(path + ".kind", e.what());
    }
    d.symbol = get_string(j, path, "symbol");
    d.raw_message = get_string(j, path, "raw_message");
    return d;
}

inline json encode_stitch_action(const StitchAction& a) {
    json j{{"kind", std::string(to_string(a.kind))}, {"detail", a.detail}};
    if (a.resolved_diagnostic) j["resolved_diagnostic"] = encode_diagnostic(*a.resolved_diagnostic);
    return j;
}

inline StitchAction decode_stitch_action(const json& j, const std::string& path) {
    StitchAction a;
    try {
        a.kind = stitch_kind_from_string(get_string(j, path, "kind"));
    } catch (const Error& e) {
        decode_fail(path + ".kind", e.what());
    }
    a.detail = get_string(j, path, "detail");
    if (j.contains("resolved_diagnostic"))
        a.resolved_diagnostic = decode_diagnostic(j["resolved_diagnostic"], path + ".resolved_diagnostic");
    return a;
}

}  // namespace detail

inline std::string encode_report(const RepairSession& session) {
    using nlohmann::json;
    session.validate();

    json j;
    j["schema_version"] = std::string(kReportSchemaVersion);

    json jcase;
    jcase["test"] = detail::encode_test_id(session.test_case.test);
    jcase["category"] = std::string(to_string(session.test_case.category));
    jcase["polluters"] = json::array();
    for (const auto& p : session.test_case.polluters)
        jcase["polluters"].push_back(detail::encode_test_id(p));
    jcase["co_victims"] = json::array();
    for (const auto& c : session.test_case.co_victims)
        jcase["co_victims"].push_back(detail::encode_test_id(c));
    j["case"] = std::move(jcase);

    j["status"] = std::string(to_string(session.status));

    j["iterations"] = json::array();
    for (const auto& it : session.iterations) {
        json ji;
        ji["index"] = it.index;
        ji["prompt_text"] = it.prompt_text;
        ji["response_text"] = it.response_text;
        ji["stitch_actions"] = json::array();
        for (const auto& a : it.stitch_actions)
            ji["stitch_actions"].push_back(detail::encode_stitch_action(a));
        ji["outcome"] = std::string(to_string(it.outcome));
        if (it.diagnostic_key) ji["diagnostic_key"] = *it.diagnostic_key;
        j["iterations"].push_back(std::move(ji));
    }

    if (session.final_patch) j["final_patch"] = *session.final_patch;
    if (!session.note.empty()) j["note"] = session.note;
    j["wall_time_s"] = session.wall_time_s;
    j["llm_tokens_in"] = session.llm_tokens_in;
    j["llm_tokens_out"] = session.llm_tokens_out;

    return j.dump(2) + "\n";
}

inline RepairSession decode_report(const std::string& document) {
    using nlohmann::json;
    json j = json::parse(document, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) detail::decode_fail("$", "not valid JSON");

    std::string version = detail::get_string(j, "$", "schema_version");
    if (version != kReportSchemaVersion)
        detail::decode_fail("$.schema_version", "unsupported version '" + version + "'");

    RepairSession s;
    const json& jcase = detail::member(j, "$", "case");
    s.test_case.test = detail::decode_test_id(detail::member(jcase, "$.case", "test"), "$.case.test");
    try {
        s.test_case.category = category_from_string(detail::get_string(jcase, "$.case", "category"));
    } catch (const Error&) {
        detail::decode_fail("$.case.category", "unknown category");
    }
    {
        const json& arr = detail::get_array(jcase, "$.case", "polluters");
        for (std::size_t i = 0; i < arr.size(); ++i)
            s.test_case.polluters.push_back(
                detail::decode_test_id(arr[i], "$.case.polluters[" + std::to_string(i) + "]"));
    }
    {
        const json& arr = detail::get_array(jcase, "$.case", "co_victims");
        for (std::size_t i = 0; i < arr.size(); ++i)
            s.test_case.co_victims.push_back(
                detail::decode_test_id(arr[i], "$.case.co_victims[" + std::to_string(i) + "]"));
    }

    try {
        s.status = repair_status_from_string(detail::get_string(j, "$", "status"));
    } catch (const Error& e) {
        detail::decode_fail("$.status", e.what());
    }

    const json& iters = detail::get_array(j, "$", "iterations");
    for (std::size_t i = 0; i < iters.size(); ++i) {
        std::string path = "$.iterations[" + std::to_string(i) + "]";
        const json& ji = iters[i];
        IterationRecord rec;
        rec.index = static_cast<int>(detail::get_int(ji, path, "index"));
        rec.prompt_text = detail::get_string(ji, path, "prompt_text");
        rec.response_text = detail::get_string(ji, path, "response_text");
        const json& actions = detail::get_array(ji, path, "stitch_actions");
        for (std::size_t k = 0; k < actions.size(); ++k)
            rec.stitch_actions.push_back(detail::decode_stitch_action(
                actions[k], path + ".stitch_actions[" + std::to_string(k) + "]"));
        try {
            rec.outcome = outcome_from_string(detail::get_string(ji, path, "outcome"));
        } catch (const Error& e) {
            detail::decode_fail(path + ".outcome", e.what());
        }
        if (ji.contains("diagnostic_key")) {
            if (!ji["diagnostic_key"].is_string())
                detail::decode_fail(path + ".diagnostic_key", "expected string");
            rec.diagnostic_key = ji["diagnostic_key"].get<std::string>();
        }
        s.iterations.push_back(std::move(rec));
    }

    if (j.contains("final_patch")) {
        if (!j["final_patch"].is_string()) detail::decode_fail("$.final_patch", "expected string");
        s.final_patch = j["final_patch"].get<std::string>();
    }
    if (j.contains("note")) {
        if (!j["note"].is_string()) detail::decode_fail("$.note", "expected string");
        s.note = j["note"].get<std::string>();
    }
    s.wall_time_s = detail::get_number(j, "$", "wall_time_s");
    s.llm_tokens_in = detail::get_int(j, "$", "llm_tokens_in");
    s.llm_tokens_out = detail::get_int(j, "$", "llm_tokens_out");

    try {
        s.validate();
    } catch (const Error& e) {
        detail::decode_fail("$", std::string("invariant violation: ") + e.what());
    }
    return s;
}

}  // namespace flakyfix
