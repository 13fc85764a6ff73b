#pragma once

#include <stdexcept>
#include <string>

namespace flakyfix {

/// Stable machine-readable codes for everything the pipeline can refuse to do.
/// Each code maps to exactly one throw site family; tests match on the code,
/// never on message text.
enum class ErrorCode {
    Parse,                // Java source rejected; never yields a partial model
    NoEnclosingMethod,    // line is outside every method body
    TargetNotFound,       // patch names a method absent from the class
    UnknownTarget,        // suspect search asked for a method not in the model
    PatchSyntax,          // patch block cannot be parsed as a method declaration
    ManifestParse,        // pom.xml structurally unusable
    TestNotFound,         // runner asked for a test the backend does not know
    Infra,                // toolchain missing/timeout/crash; not a test verdict
    ProviderError,        // LLM endpoint failed after retry
    PromptOverflow,       // rendered prompt exceeds char budget after trimming
    UnparseableResponse,  // completion has no extractable patch
    FixtureMiss,          // replay table has no entry for the prompt digest
    Decode,               // report JSON malformed or fails an invariant
    BadInput,             // campaign CSV row or CLI argument invalid
};

std::string_view to_string(ErrorCode code);

/// Single exception type; `code()` is the contract, the message is for humans.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Parse: return "PARSE";
        case ErrorCode::NoEnclosingMethod: return "NO_ENCLOSING_METHOD";
        case ErrorCode::TargetNotFound: return "TARGET_NOT_FOUND";
        case ErrorCode::UnknownTarget: return "UNKNOWN_TARGET";
        case ErrorCode::PatchSyntax: return "PATCH_SYNTAX";
        case ErrorCode::ManifestParse: return "MANIFEST_PARSE";
        case ErrorCode::TestNotFound: return "TEST_NOT_FOUND";
        case ErrorCode::Infra: return "INFRA";
        case ErrorCode::ProviderError: return "PROVIDER_ERROR";
        case ErrorCode::PromptOverflow: return "PROMPT_OVERFLOW";
        case ErrorCode::UnparseableResponse: return "UNPARSEABLE_RESPONSE";
        case ErrorCode::FixtureMiss: return "FIXTURE_MISS";
        case ErrorCode::Decode: return "DECODE";
        case ErrorCode::BadInput: return "BAD_INPUT";
    }
    return "UNKNOWN";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace flakyfix
