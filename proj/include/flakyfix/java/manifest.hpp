#pragma once

// Maven build-manifest editing. A deliberately small XML scanner: enough to
// find the project's top-level <dependencies> section and the (groupId,
// artifactId, version) triples inside it, byte-accurately, so edits preserve
// the rest of the file exactly. Full XML generality is a non-goal.

#include <array>
#include <cctype>
#include <string>
#include <vector>

#include "flakyfix/errors.hpp"
#include "flakyfix/java/model.hpp"

namespace flakyfix::java {

namespace manifest_detail {

struct Element {
    std::string name;
    std::size_t open_begin = 0;   // '<' of the open tag
    std::size_t open_end = 0;     // past '>' of the open tag
    std::size_t close_begin = 0;  // '<' of the close tag
    std::size_t close_end = 0;    // past '>' of the close tag

    bool closed() const { return close_end != 0; }
};

/// Collects elements at the requested paths ("project/dependencies/...")
/// via a single linear scan. Throws MANIFEST_PARSE on tag imbalance.
class Scanner {
  public:
    explicit Scanner(std::string_view text) : text_(text) {}

    std::vector<Element> elements_at(const std::string& path) {
        scan();
        std::vector<Element> out;
        for (const auto& [p, e] : found_)
            if (p == path) out.push_back(e);
        return out;
    }

  private:
    void scan() {
        if (scanned_) return;
        scanned_ = true;
        std::vector<Element> stack;
        std::size_t i = 0;
        while (i < text_.size()) {
            if (text_[i] != '<') {
                ++i;
                continue;
            }
            if (text_.compare(i, 4, "<!--") == 0) {
                auto end = text_.find("-->", i);
                if (end == std::string_view::npos)
                    fail(ErrorCode::ManifestParse, "unterminated comment");
                i = end + 3;
                continue;
            }
            if (text_.compare(i, 2, "<?") == 0) {
                auto end = text_.find("?>", i);
                if (end == std::string_view::npos)
                    fail(ErrorCode::ManifestParse, "unterminated processing instruction");
                i = end + 2;
                continue;
            }
            if (text_.compare(i, 9, "<![CDATA[") == 0) {
                auto end = text_.find("]]>", i);
                if (end == std::string_view::npos) fail(ErrorCode::ManifestParse, "unterminated CDATA");
                i = end + 3;
                continue;
            }
            auto gt = text_.find('>', i);
            if (gt == std::string_view::npos) fail(ErrorCode::ManifestParse, "unterminated tag");
            bool closing = i + 1 < text_.size() && text_[i + 1] == '/';
            bool self_closing = gt > 0 && text_[gt - 1] == '/';
            std::size_t name_begin = i + (closing ? 2 : 1);
            std::size_t name_end = name_begin;
            while (name_end < gt && text_[name_end] != ' ' && text_[name_end] != '\t' &&
                   text_[name_end] != '\n' && text_[name_end] != '\r' && text_[name_end] != '/')
                ++name_end;
            std::string name(text_.substr(name_begin, name_end - name_begin));

            if (closing) {
                if (stack.empty() || stack.back().name != name)
                    fail(ErrorCode::ManifestParse, "mismatched </" + name + ">");
                Element e = stack.back();
                stack.pop_back();
                e.close_begin = i;
                e.close_end = gt + 1;
                record(stack, e);
            } else if (self_closing) {
                Element e;
                e.name = name;
                e.open_begin = i;
                e.open_end = gt + 1;
                e.close_begin = i;
                e.close_end = gt + 1;
                record(stack, e);
            } else {
                Element e;
                e.name = name;
                e.open_begin = i;
                e.open_end = gt + 1;
                stack.push_back(e);
            }
            i = gt + 1;
        }
        if (!stack.empty())
            fail(ErrorCode::ManifestParse, "unclosed <" + stack.back().name + ">");
    }

    void record(const std::vector<Element>& stack, const Element& e) {
        std::string path;
        for (const auto& s : stack) path += s.name + "/";
        path += e.name;
        found_.emplace_back(std::move(path), e);
    }

    std::string_view text_;
    bool scanned_ = false;
    std::vector<std::pair<std::string, Element>> found_;
};

inline std::string trimmed(std::string_view v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    return std::string(v);
}

inline std::string line_indent(std::string_view text, std::size_t offset) {
    std::size_t line_start = text.rfind('\n', offset);
    line_start = line_start == std::string_view::npos ? 0 : line_start + 1;
    std::string indent;
    for (std::size_t i = line_start; i < offset; ++i) {
        if (text[i] == ' ' || text[i] == '\t')
            indent += text[i];
        else
            return indent;  // non-blank prefix: fall back to what we have
    }
    return indent;
}

}  // namespace manifest_detail

/// Ensures the manifest's top-level dependency list contains exactly
/// (group, artifact, version): appends the dependency when absent, rewrites
/// the version when it differs, and returns the input unchanged when it
/// already matches. Operates only on project/dependencies, never on
/// dependencyManagement, build plugins, or profiles.
inline std::string edit_build_dependency(const std::string& manifest_text,
                                         const std::array<std::string, 3>& dep) {
    const auto& [group, artifact, version] = dep;
    manifest_detail::Scanner scanner(manifest_text);

    auto projects = scanner.elements_at("project");
    if (projects.empty()) fail(ErrorCode::ManifestParse, "no <project> element");
    const auto& project = projects.front();

    manifest_detail::Scanner rescanner(manifest_text);
    auto deps_sections = rescanner.elements_at("project/dependencies");
    if (deps_sections.empty()) {
        // no dependency section at all: create one before </project>
        std::string indent = manifest_detail::line_indent(manifest_text, project.close_begin);
        std::string unit = indent.empty() ? "  " : indent + indent;
        std::string block = unit + "<dependencies>\n" + unit + unit + "<dependency>\n" + unit +
                            unit + unit + "<groupId>" + group + "</groupId>\n" + unit + unit + unit +
                            "<artifactId>" + artifact + "</artifactId>\n" + unit + unit + unit +
                            "<version>" + version + "</version>\n" + unit + unit + "</dependency>\n" +
                            unit + "</dependencies>\n" + indent;
        std::string out = manifest_text;
        out.insert(project.close_begin, block);
        return out;
    }
    const auto& section = deps_sections.front();

    manifest_detail::Scanner depscan(manifest_text);
    auto entries = depscan.elements_at("project/dependencies/dependency");

    for (const auto& entry : entries) {
        std::string_view body(manifest_text);
        body = body.substr(entry.open_end, entry.close_begin - entry.open_end);
        auto text_of = [&](const char* tag) -> std::pair<std::string, manifest_detail::Element> {
            auto found = manifest_detail::Scanner(body).elements_at(tag);
            if (found.empty()) return {"", {}};
            const auto& e = found.front();
            return {manifest_detail::trimmed(body.substr(e.open_end, e.close_begin - e.open_end)), e};
        };
        auto [g, ge] = text_of("groupId");
        auto [a, ae] = text_of("artifactId");
        if (g != group || a != artifact) continue;

        auto [v, ve] = text_of("version");
        if (ve.open_end == 0) {  // no <version> element: version is managed elsewhere
            // managed version: pin it explicitly after <artifactId>
            std::string indent =
                manifest_detail::line_indent(body, ae.open_begin) ;
            std::string out = manifest_text;
            out.insert(entry.open_end + ae.close_end,
                       "\n" + indent + "<version>" + version + "</version>");
            return out;
        }
        if (v == version) return manifest_text;  // idempotent
        std::string out = manifest_text;
        out.replace(entry.open_end + ve.open_end, ve.close_begin - ve.open_end, version);
        return out;
    }

    // not present: append a new <dependency> before </dependencies>
    std::string entry_indent;
    if (!entries.empty())
        entry_indent = manifest_detail::line_indent(manifest_text, entries.front().open_begin);
    else
        entry_indent = manifest_detail::line_indent(manifest_text, section.open_begin) + "  ";
    std::string inner_indent = entry_indent + "  ";
    std::string close_indent = manifest_detail::line_indent(manifest_text, section.close_begin);
    std::string block = entry_indent + "<dependency>\n" + inner_indent + "<groupId>" + group +
                        "</groupId>\n" + inner_indent + "<artifactId>" + artifact +
                        "</artifactId>\n" + inner_indent + "<version>" + version + "</version>\n" +
                        entry_indent + "</dependency>\n" + close_indent;
    std::string out = manifest_text;
    // insert at the close tag, trimming the indentation we are about to re-add
    std::size_t insert_at = section.close_begin;
    std::size_t line_start = manifest_text.rfind('\n', insert_at);
    if (line_start != std::string::npos &&
        manifest_detail::trimmed(manifest_text.substr(line_start + 1, insert_at - line_start - 1)).empty())
        insert_at = line_start + 1;
    out.insert(insert_at, block);
    // the close tag's own indent is still in the file right after our block
    // when we rewound to line start; drop the duplicate indent
    if (insert_at != section.close_begin)
        out.erase(insert_at + block.size(), section.close_begin - insert_at);
    return out;
}

}  // namespace flakyfix::java
