#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "flakyfix/model.hpp"

namespace flakyfix::runner {

namespace detail {

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

/// Maven wraps every compiler line in a log-level tag; javac emits them bare.
/// Returns the payload, or nullopt for [INFO]/[WARNING]/[DEBUG] noise.
inline std::optional<std::string> error_payload(const std::string& line) {
    if (line.rfind("[ERROR] ", 0) == 0) return line.substr(8);
    if (line == "[ERROR]") return std::string();
    if (line.rfind("[INFO]", 0) == 0 || line.rfind("[WARNING]", 0) == 0 ||
        line.rfind("[DEBUG]", 0) == 0)
        return std::nullopt;
    return line;
}

inline std::string relativize(const std::string& file, const std::filesystem::path& root) {
    if (root.empty()) return file;
    std::string prefix = root.lexically_normal().string();
    if (!prefix.empty() && prefix.back() != '/') prefix += '/';
    if (file.rfind(prefix, 0) == 0) return file.substr(prefix.size());
    return file;
}

/// `symbol:   class LinkedHashMap` / `symbol: variable gson` /
/// `symbol: method of(String,String)` — the identifier is what matters;
/// the category word and any signature are presentation.
inline std::string symbol_from_detail(std::string detail) {
    auto trim = [](std::string& s) {
        std::size_t b = s.find_first_not_of(" \t");
        std::size_t e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    trim(detail);
    for (std::string_view category : {"class ", "interface ", "enum ", "variable ", "method ",
                                      "constructor ", "static "}) {
        if (detail.rfind(category, 0) == 0) detail = detail.substr(category.size());
    }
    trim(detail);
    std::size_t paren = detail.find('(');
    if (paren != std::string::npos) detail = detail.substr(0, paren);
    trim(detail);
    return detail;
}

}  // namespace detail

/// Parses javac output (plain or Maven-wrapped) into diagnostics.
///
/// Header shapes accepted:
///   path/File.java:12: error: cannot find symbol          (javac)
///   path/File.java:[12,9] cannot find symbol              (maven-compiler-plugin)
/// Continuation lines (`symbol:`, `location:`, source echo, caret) attach to
/// the preceding header and never become diagnostics of their own. Warnings
/// and notes are ignored. Absolute paths under `copy_root` are relativized so
/// diagnostic keys survive working-copy relocation.
inline std::vector<CompilationDiagnostic> parse_compiler_output(
    std::string_view output, const std::filesystem::path& copy_root = {}) {
    static const std::regex javac_header(R"(^(.+\.java):(\d+): (error|warning): (.*)$)");
    static const std::regex maven_header(R"(^(.+\.java):\[(\d+)(?:,\d+)?\] (.*)$)");
    static const std::regex symbol_line(R"(^\s*symbol:\s*(.+)$)");
    static const std::regex package_missing(R"(package ([\w.]+) does not exist)");
    static const std::regex ambiguous(R"(reference to (\S+) is ambiguous)");

    std::vector<CompilationDiagnostic> diagnostics;
    bool awaiting_symbol = false;  // last header was MISSING_SYMBOL without a symbol yet
    for (const auto& raw : detail::split_lines(output)) {
        // Maven's failure footer repeats every diagnostic without the symbol
        // detail lines; parsing past it would double-count.
        if (raw.find("BUILD FAILURE") != std::string::npos) break;
        auto payload = detail::error_payload(raw);
        if (!payload) continue;
        const std::string& line = *payload;

        std::smatch m;
        std::string file, message;
        int line_no = 0;
        if (std::regex_match(line, m, javac_header)) {
            if (m[3] == "warning") {
                awaiting_symbol = false;
                continue;
            }
            file = m[1];
            line_no = std::stoi(m[2]);
            message = m[4];
        } else if (std::regex_match(line, m, maven_header)) {
            file = m[1];
            line_no = std::stoi(m[2]);
            message = m[3];
        } else {
            if (awaiting_symbol && std::regex_match(line, m, symbol_line)) {
                diagnostics.back().symbol = detail::symbol_from_detail(m[1]);
                awaiting_symbol = false;
            }
            continue;  // source echo, caret, location, build-summary noise
        }

        CompilationDiagnostic d;
        d.file = detail::relativize(file, copy_root);
        d.line = line_no;
        d.raw_message = message;
        if (message.find("cannot find symbol") != std::string::npos) {
            d.kind = DiagnosticKind::MissingSymbol;
        } else if (std::regex_search(message, m, package_missing)) {
            d.kind = DiagnosticKind::PackageNotFound;
            d.symbol = m[1];
        } else if (std::regex_search(message, m, ambiguous)) {
            d.kind = DiagnosticKind::AmbiguousReference;
            d.symbol = m[1];
        } else {
            d.kind = DiagnosticKind::Other;
        }
        awaiting_symbol = d.kind == DiagnosticKind::MissingSymbol;
        diagnostics.push_back(std::move(d));
    }
    // A missing-symbol header with no symbol detail cannot satisfy the
    // diagnostic invariant; fall back to the message's own last token.
    for (auto& d : diagnostics) {
        if (d.kind == DiagnosticKind::MissingSymbol && d.symbol.empty()) {
            std::size_t cut = d.raw_message.find_last_of(' ');
            d.symbol = cut == std::string::npos ? d.raw_message : d.raw_message.substr(cut + 1);
        }
        d.validate();
    }
    return diagnostics;
}

}  // namespace flakyfix::runner
