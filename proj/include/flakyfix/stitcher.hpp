#pragma once

// Offline repair of LLM patches that fail to compile, without re-prompting.
// Four fixed-order passes over the patch: revert drifted declarations, import
// missing classes (probe-confirmed), add missing build dependencies from a
// local coordinate table, and drop imports that collide with the original
// file's. Best effort by design: whatever stays broken goes back to the
// feedback loop, so nothing here throws on an unresolvable diagnostic.

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "flakyfix/errors.hpp"
#include "flakyfix/java/manifest.hpp"
#include "flakyfix/java/model.hpp"
#include "flakyfix/java/parser.hpp"
#include "flakyfix/java/patching.hpp"
#include "flakyfix/model.hpp"

namespace flakyfix {

/// simple name → qualified names that end in it. Candidate source for import
/// resolution; the probe decides, the index only proposes.
struct ClassIndex {
    std::map<std::string, std::vector<std::string>> by_simple_name;

    void add(const std::string& qualified) {
        auto dot = qualified.rfind('.');
        if (dot == std::string::npos || dot + 1 == qualified.size())
            fail(ErrorCode::BadInput, "'" + qualified + "' is not a qualified class name");
        auto& bucket = by_simple_name[qualified.substr(dot + 1)];
        auto at = std::lower_bound(bucket.begin(), bucket.end(), qualified);
        if (at == bucket.end() || *at != qualified) bucket.insert(at, qualified);
    }

    std::vector<std::string> candidates(const std::string& simple_name) const {
        auto it = by_simple_name.find(simple_name);
        return it == by_simple_name.end() ? std::vector<std::string>{} : it->second;
    }

    void validate() const {
        for (const auto& [simple, names] : by_simple_name)
            for (const auto& q : names)
                if (q.size() <= simple.size() + 1 || q.substr(q.size() - simple.size()) != simple ||
                    q[q.size() - simple.size() - 1] != '.')
                    fail(ErrorCode::BadInput, "index entry '" + q + "' under key '" + simple + "'");
    }

    /// Merges one qualified name per line; '#' starts a comment. Feed it jar
    /// listings from the project classpath to extend the platform list.
    void merge_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) fail(ErrorCode::BadInput, "cannot open class list " + path);
        std::string line;
        while (std::getline(in, line)) {
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            auto e = line.find_last_not_of(" \t\r");
            add(line.substr(b, e - b + 1));
        }
    }

    /// The embedded platform list: the commonly imported classes of the JDKs
    /// the pipeline supports. java.lang is deliberately absent (never needs an
    /// import, so never a missing-symbol candidate). The deliberate ambiguity
    /// pairs are here too: java.util vs java.awt List, java.util vs java.sql
    /// Date, java.util vs javax.swing Timer.
    static ClassIndex builtin_jdk() {
        static const char* const kNames[] = {
            // java.util
            "java.util.ArrayDeque", "java.util.ArrayList", "java.util.Arrays",
            "java.util.BitSet", "java.util.Calendar", "java.util.Collection",
            "java.util.Collections", "java.util.Comparator", "java.util.Date",
            "java.util.Deque", "java.util.EnumMap", "java.util.EnumSet",
            "java.util.HashMap", "java.util.HashSet", "java.util.Hashtable",
            "java.util.IdentityHashMap", "java.util.Iterator", "java.util.LinkedHashMap",
            "java.util.LinkedHashSet", "java.util.LinkedList", "java.util.List",
            "java.util.Locale", "java.util.Map", "java.util.NavigableMap",
            "java.util.NavigableSet", "java.util.NoSuchElementException", "java.util.Objects",
            "java.util.Optional", "java.util.PriorityQueue", "java.util.Properties",
            "java.util.Queue", "java.util.Random", "java.util.Scanner", "java.util.Set",
            "java.util.SortedMap", "java.util.SortedSet", "java.util.Stack",
            "java.util.StringJoiner", "java.util.StringTokenizer", "java.util.Timer",
            "java.util.TimerTask", "java.util.TreeMap", "java.util.TreeSet",
            "java.util.UUID", "java.util.Vector", "java.util.WeakHashMap",
            // java.util.concurrent + atomics
            "java.util.concurrent.CompletableFuture", "java.util.concurrent.ConcurrentHashMap",
            "java.util.concurrent.ConcurrentMap", "java.util.concurrent.CopyOnWriteArrayList",
            "java.util.concurrent.CountDownLatch", "java.util.concurrent.CyclicBarrier",
            "java.util.concurrent.ExecutorService", "java.util.concurrent.Executors",
            "java.util.concurrent.Future", "java.util.concurrent.Semaphore",
            "java.util.concurrent.ThreadLocalRandom", "java.util.concurrent.TimeUnit",
            "java.util.concurrent.atomic.AtomicBoolean", "java.util.concurrent.atomic.AtomicInteger",
            "java.util.concurrent.atomic.AtomicLong", "java.util.concurrent.atomic.AtomicReference",
            // java.util.function / stream / regex
            "java.util.function.BiFunction", "java.util.function.Consumer",
            "java.util.function.Function", "java.util.function.Predicate",
            "java.util.function.Supplier", "java.util.regex.Matcher", "java.util.regex.Pattern",
            "java.util.stream.Collectors", "java.util.stream.IntStream",
            "java.util.stream.Stream",
            // java.io
            "java.io.BufferedReader", "java.io.BufferedWriter", "java.io.ByteArrayInputStream",
            "java.io.ByteArrayOutputStream", "java.io.File", "java.io.FileInputStream",
            "java.io.FileOutputStream", "java.io.FileReader", "java.io.FileWriter",
            "java.io.IOException", "java.io.InputStream", "java.io.InputStreamReader",
            "java.io.OutputStream", "java.io.OutputStreamWriter", "java.io.PrintStream",
            "java.io.PrintWriter", "java.io.Reader", "java.io.Serializable",
            "java.io.UncheckedIOException", "java.io.Writer",
            // java.nio
            "java.nio.charset.Charset", "java.nio.charset.StandardCharsets",
            "java.nio.file.Files", "java.nio.file.Path", "java.nio.file.Paths",
            "java.nio.file.StandardOpenOption",
            // java.time
            "java.time.Clock", "java.time.Duration", "java.time.Instant",
            "java.time.LocalDate", "java.time.LocalDateTime", "java.time.LocalTime",
            "java.time.OffsetDateTime", "java.time.Period", "java.time.ZoneId",
            "java.time.ZonedDateTime", "java.time.format.DateTimeFormatter",
            // java.math / text / net / security / reflect
            "java.math.BigDecimal", "java.math.BigInteger",
            "java.text.DateFormat", "java.text.DecimalFormat", "java.text.MessageFormat",
            "java.text.NumberFormat", "java.text.ParseException", "java.text.SimpleDateFormat",
            "java.net.HttpURLConnection", "java.net.InetAddress", "java.net.ServerSocket",
            "java.net.Socket", "java.net.URI", "java.net.URL", "java.net.URLConnection",
            "java.security.MessageDigest", "java.security.SecureRandom",
            "java.lang.reflect.Constructor", "java.lang.reflect.Field",
            "java.lang.reflect.InvocationTargetException", "java.lang.reflect.Method",
            "java.lang.reflect.Modifier",
            // java.sql
            "java.sql.Connection", "java.sql.Date", "java.sql.DriverManager",
            "java.sql.PreparedStatement", "java.sql.ResultSet", "java.sql.SQLException",
            "java.sql.Statement", "java.sql.Time", "java.sql.Timestamp",
            // java.awt / javax.swing
            "java.awt.Button", "java.awt.Color", "java.awt.Dimension", "java.awt.Font",
            "java.awt.Frame", "java.awt.Graphics", "java.awt.Label", "java.awt.List",
            "java.awt.Panel", "java.awt.Point", "java.awt.Rectangle", "java.awt.Window",
            "javax.swing.JButton", "javax.swing.JFrame", "javax.swing.JLabel",
            "javax.swing.JPanel", "javax.swing.Timer",
        };
        ClassIndex index;
        for (const char* name : kNames) index.add(name);
        return index;
    }
};

/// package prefix → Maven coordinate, longest prefix wins. The offline stand-
/// in for searching a live artifact registry.
struct PackageCoordinates {
    std::map<std::string, std::array<std::string, 3>> by_prefix;

    std::optional<std::array<std::string, 3>> lookup(const std::string& package_name) const {
        std::string probe = package_name;
        while (true) {
            auto it = by_prefix.find(probe);
            if (it != by_prefix.end()) return it->second;
            auto dot = probe.rfind('.');
            if (dot == std::string::npos) return std::nullopt;
            probe = probe.substr(0, dot);
        }
    }

    static PackageCoordinates parse(std::istream& in, const std::string& what) {
        PackageCoordinates table;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::istringstream fields(line);
            std::string prefix, coordinate;
            if (!(fields >> prefix)) continue;
            if (!(fields >> coordinate))
                fail(ErrorCode::BadInput, what + ":" + std::to_string(line_no) +
                                              ": prefix without coordinate");
            auto first = coordinate.find(':');
            auto second = coordinate.find(':', first + 1);
            if (first == std::string::npos || second == std::string::npos ||
                coordinate.find(':', second + 1) != std::string::npos)
                fail(ErrorCode::BadInput, what + ":" + std::to_string(line_no) +
                                              ": coordinate is not group:artifact:version");
            table.by_prefix[prefix] = {coordinate.substr(0, first),
                                       coordinate.substr(first + 1, second - first - 1),
                                       coordinate.substr(second + 1)};
        }
        return table;
    }

    static PackageCoordinates from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) fail(ErrorCode::BadInput, "cannot open coordinate table " + path);
        return parse(in, path);
    }

    /// Embedded copy of share/package-coordinates.txt; a golden test keeps
    /// the two in sync.
    static PackageCoordinates builtin() {
        static const char kTable[] = R"(
com.google.gson com.google.code.gson:gson:2.8.6
com.google.common com.google.guava:guava:31.1-jre
com.google.inject com.google.inject:guice:5.1.0
com.fasterxml.jackson com.fasterxml.jackson.core:jackson-databind:2.15.2
org.junit.jupiter org.junit.jupiter:junit-jupiter:5.9.3
org.junit junit:junit:4.13.2
junit.framework junit:junit:4.13.2
org.assertj org.assertj:assertj-core:3.24.2
org.hamcrest org.hamcrest:hamcrest:2.2
org.mockito org.mockito:mockito-core:4.11.0
org.testng org.testng:testng:7.7.1
org.apache.commons.lang3 org.apache.commons:commons-lang3:3.12.0
org.apache.commons.io commons-io:commons-io:2.11.0
org.apache.commons.collections4 org.apache.commons:commons-collections4:4.4
org.apache.http org.apache.httpcomponents:httpclient:4.5.14
org.slf4j org.slf4j:slf4j-api:1.7.36
ch.qos.logback ch.qos.logback:logback-classic:1.2.11
org.yaml.snakeyaml org.yaml:snakeyaml:1.33
org.json org.json:json:20230227
org.joda.time joda-time:joda-time:2.12.5
com.squareup.okhttp3 com.squareup.okhttp3:okhttp:4.10.0
io.netty io.netty:netty-all:4.1.90.Final
javax.servlet javax.servlet:javax.servlet-api:4.0.1
lombok org.projectlombok:lombok:1.18.26
com.jayway.jsonpath com.jayway.jsonpath:json-path:2.7.0
)";
        std::istringstream in(kTable);
        return parse(in, "<builtin>");
    }
};

/// Compiles one candidate source for the test class and reports what the
/// compiler thinks. The probe target of Algorithm-style import trials; also
/// the oracle for the monotone-diagnostics property.
class CompileProber {
  public:
    virtual ~CompileProber() = default;
    virtual std::vector<CompilationDiagnostic> probe(const std::string& class_source) = 0;
};

struct StitchOutcome {
    java::PatchCandidate patch;
    std::string manifest_text;  // input manifest, with any added dependencies
    std::vector<StitchAction> actions;
    std::vector<std::string> unresolved;  // what stayed broken, for the feedback loop
};

namespace stitch_detail {

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

/// Rebuilds a method: the original's annotations, modifiers, return type, and
/// parameter list around the patched method's name, throws clause, and body.
/// Deterministic, so a logged REVERT_DECLARATION replays to identical bytes.
inline std::string revert_declaration_text(const java::MethodModel& original,
                                           const std::string& patched_text) {
    java::MethodModel patched = java::parse_method_snippet(patched_text);
    std::string tail;  // anything between the parameter list and the body: the throws clause
    if (!patched.body_text.empty()) {
        auto body_at = patched_text.find(patched.body_text);
        if (body_at != std::string::npos) {
            std::string header = patched_text.substr(0, body_at);
            auto close = header.rfind(')');
            if (close != std::string::npos) tail = trim(header.substr(close + 1));
        }
    }
    std::string out;
    for (const auto& a : original.annotations) out += a + "\n";
    for (const auto& m : original.modifiers) out += m + " ";
    if (!original.return_type.empty()) out += original.return_type + " ";
    out += patched.name + "(";
    for (std::size_t i = 0; i < original.parameters.size(); ++i) {
        if (i) out += ", ";
        out += original.parameters[i].first + " " + original.parameters[i].second;
    }
    out += ")";
    if (!tail.empty()) out += " " + tail;
    out += patched.body_text.empty() ? ";" : " " + patched.body_text;
    return out;
}

/// True when the diagnostic's file plausibly is the patched test class.
/// Diagnostics carry project-relative paths; match on the basename.
inline bool targets_class(const CompilationDiagnostic& d, const java::ClassModel& model) {
    if (d.file.empty()) return true;
    std::string base = model.class_name + ".java";
    return d.file.size() >= base.size() &&
           d.file.compare(d.file.size() - base.size(), base.size(), base) == 0 &&
           (d.file.size() == base.size() || d.file[d.file.size() - base.size() - 1] == '/');
}

/// Replaced-method names a diagnostic implicates. A line inside a replaced
/// method implicates that method; a class-level line (outside every method)
/// implicates every replaced method; a line inside an untouched method
/// implicates none of them.
inline std::vector<std::string> implicated_methods(const CompilationDiagnostic& d,
                                                   const java::ClassModel& patched_model,
                                                   const java::PatchCandidate& patch) {
    if (!targets_class(d, patched_model)) return {};
    for (const auto& m : patched_model.methods) {
        if (d.line < m.line_begin || d.line > m.line_end) continue;
        if (patch.method_replacements.contains(m.name)) return {m.name};
        return {};
    }
    std::vector<std::string> all;
    for (const auto& [name, text] : patch.method_replacements) all.push_back(name);
    return all;
}

inline int priority_rank(const std::string& qualified, const std::string& response_text) {
    if (!response_text.empty() && response_text.find(qualified) != std::string::npos) return 0;
    if (qualified.rfind("java.", 0) == 0 || qualified.rfind("javax.", 0) == 0) return 1;
    return 2;
}

inline bool still_reported(const std::vector<CompilationDiagnostic>& diagnostics,
                           const CompilationDiagnostic& needle) {
    // lines shift when imports are inserted; identity is (kind, symbol)
    for (const auto& d : diagnostics)
        if (d.kind == needle.kind && d.symbol == needle.symbol) return true;
    return false;
}

}  // namespace stitch_detail

/// Reverts declaration drift (modifiers, return type, parameter list,
/// annotations) on diagnostic-implicated replaced methods. Bodies are never
/// touched. One REVERT_DECLARATION action per reverted method.
inline std::vector<StitchAction> reconcile_declarations(
    const java::ClassModel& original, java::PatchCandidate& patch,
    const std::vector<CompilationDiagnostic>& diagnostics) {
    std::vector<StitchAction> actions;
    if (patch.method_replacements.empty() || diagnostics.empty()) return actions;

    java::ClassModel patched_model = java::parse_test_class(java::apply_patch(original, patch));

    std::map<std::string, CompilationDiagnostic> implicated;  // method → first implicating diag
    for (const auto& d : diagnostics)
        for (const auto& name : stitch_detail::implicated_methods(d, patched_model, patch))
            implicated.emplace(name, d);

    for (const auto& [name, diag] : implicated) {
        const java::MethodModel* original_method = original.find_method(name);
        if (!original_method) continue;  // added helper: nothing to reconcile against
        const std::string& patched_text = patch.method_replacements.at(name);
        java::MethodModel patched_method = java::parse_method_snippet(patched_text);
        if (java::declaration_diff(*original_method, patched_method).empty()) continue;
        patch.method_replacements[name] =
            stitch_detail::revert_declaration_text(*original_method, patched_text);
        actions.push_back({StitchKind::RevertDeclaration, name, diag});
    }
    return actions;
}

/// Import trials for MISSING_SYMBOL diagnostics: candidates from the index,
/// ordered by exact-name hints in the response text, then standard-library
/// packages, then the rest; one import per probe, at most `probe_budget`
/// probes per symbol; the first candidate that makes the symbol's diagnostic
/// disappear is kept.
inline std::vector<StitchAction> resolve_missing_symbols(
    const java::ClassModel& original, java::PatchCandidate& patch,
    const std::vector<CompilationDiagnostic>& diagnostics, const ClassIndex& index,
    CompileProber* prober, int probe_budget, std::vector<std::string>& unresolved) {
    std::vector<StitchAction> actions;

    std::vector<CompilationDiagnostic> missing;
    for (const auto& d : diagnostics) {
        if (d.kind != DiagnosticKind::MissingSymbol || d.symbol.empty()) continue;
        bool seen = false;
        for (const auto& m : missing) seen |= m.symbol == d.symbol;
        if (!seen) missing.push_back(d);
    }

    for (const auto& diag : missing) {
        std::vector<std::string> candidates = index.candidates(diag.symbol);
        std::stable_sort(candidates.begin(), candidates.end(),
                         [&](const std::string& a, const std::string& b) {
                             return stitch_detail::priority_rank(a, patch.raw_response) <
                                    stitch_detail::priority_rank(b, patch.raw_response);
                         });
        if (candidates.empty()) {
            unresolved.push_back("missing symbol '" + diag.symbol + "': no candidate class");
            continue;
        }
        if (!prober) {
            unresolved.push_back("missing symbol '" + diag.symbol + "': no compile prober");
            continue;
        }
        bool resolved = false;
        int probes = 0;
        for (const auto& qualified : candidates) {
            if (probes >= probe_budget) break;
            java::PatchCandidate trial = patch;
            trial.new_imports.push_back(java::make_import(qualified));
            ++probes;
            std::vector<CompilationDiagnostic> after =
                prober->probe(java::apply_patch(original, trial));
            if (!stitch_detail::still_reported(after, diag)) {
                patch = std::move(trial);
                actions.push_back({StitchKind::AddImport, qualified, diag});
                resolved = true;
                break;
            }
        }
        if (!resolved)
            unresolved.push_back("missing symbol '" + diag.symbol + "': no candidate survived " +
                                 std::to_string(probes) + " probe(s)");
    }
    return actions;
}

/// PACKAGE_NOT_FOUND diagnostics against the local coordinate table. On a hit
/// the manifest gains (or corrects) the dependency and the patch records the
/// coordinate; a miss is logged for the feedback loop. No compile probe: the
/// table is trusted the way Algorithm-style repository search would be.
inline std::vector<StitchAction> add_build_dependency_for_missing_package(
    java::PatchCandidate& patch, const std::vector<CompilationDiagnostic>& diagnostics,
    std::string& manifest_text, const PackageCoordinates& packages,
    std::vector<std::string>& unresolved) {
    std::vector<StitchAction> actions;
    std::vector<std::string> handled;
    for (const auto& d : diagnostics) {
        if (d.kind != DiagnosticKind::PackageNotFound || d.symbol.empty()) continue;
        if (std::find(handled.begin(), handled.end(), d.symbol) != handled.end()) continue;
        handled.push_back(d.symbol);

        auto coordinate = packages.lookup(d.symbol);
        if (!coordinate) {
            unresolved.push_back("missing package '" + d.symbol + "': not in coordinate table");
            continue;
        }
        std::string edited = java::edit_build_dependency(manifest_text, *coordinate);
        if (edited == manifest_text) continue;  // already satisfied: stale diagnostic, no-op
        manifest_text = std::move(edited);
        if (std::find(patch.build_dependencies.begin(), patch.build_dependencies.end(),
                      *coordinate) == patch.build_dependencies.end())
            patch.build_dependencies.push_back(*coordinate);
        actions.push_back({StitchKind::AddBuildDep,
                           (*coordinate)[0] + ":" + (*coordinate)[1] + ":" + (*coordinate)[2], d});
    }
    return actions;
}

/// Drops patch-added imports whose simple name collides with an existing
/// import of a different class: the original import wins. Re-adding an import
/// identical to an existing one is not a conflict (apply dedups it), and
/// wildcard imports never conflict by simple name.
inline std::vector<StitchAction> resolve_import_conflicts(const java::ClassModel& original,
                                                          java::PatchCandidate& patch) {
    std::vector<StitchAction> actions;
    std::erase_if(patch.new_imports, [&](const java::ImportDecl& added) {
        if (added.simple_name == "*") return false;
        for (const auto& existing : original.imports) {
            if (existing.simple_name != added.simple_name) continue;
            if (existing.qualified_name == added.qualified_name &&
                existing.is_static == added.is_static)
                return false;  // identical import: dedup at apply, not a conflict
            actions.push_back({StitchKind::ExcludeImport, added.qualified_name, std::nullopt});
            return true;
        }
        return false;
    });
    return actions;
}

/// The driver: all four passes in fixed order. Empty diagnostics means the
/// patch already compiles and nothing is touched. Never throws on residual
/// errors; they flow back to the feedback loop via `unresolved`.
inline StitchOutcome stitch(const java::ClassModel& original, const java::PatchCandidate& patch,
                            const std::vector<CompilationDiagnostic>& diagnostics,
                            const ClassIndex& index, const std::string& manifest_text,
                            const PackageCoordinates& packages, CompileProber* prober,
                            int probe_budget = 10) {
    StitchOutcome out{patch, manifest_text, {}, {}};
    if (diagnostics.empty()) return out;

    auto append = [&](std::vector<StitchAction> more) {
        out.actions.insert(out.actions.end(), std::make_move_iterator(more.begin()),
                           std::make_move_iterator(more.end()));
    };
    append(reconcile_declarations(original, out.patch, diagnostics));
    append(resolve_missing_symbols(original, out.patch, diagnostics, index, prober, probe_budget,
                                   out.unresolved));
    append(add_build_dependency_for_missing_package(out.patch, diagnostics, out.manifest_text,
                                                    packages, out.unresolved));
    append(resolve_import_conflicts(original, out.patch));
    return out;
}

/// Replays a logged action sequence onto the pre-stitch patch. Produces the
/// post-stitch patch and manifest byte for byte; the replayability property
/// test holds this to stitch's output on every fixture.
inline StitchOutcome apply_stitch_actions(const java::ClassModel& original,
                                          const java::PatchCandidate& pre_patch,
                                          const std::vector<StitchAction>& actions,
                                          const std::string& manifest_text) {
    StitchOutcome out{pre_patch, manifest_text, actions, {}};
    for (const auto& action : actions) {
        switch (action.kind) {
            case StitchKind::RevertDeclaration: {
                const java::MethodModel* original_method = original.find_method(action.detail);
                auto it = out.patch.method_replacements.find(action.detail);
                if (!original_method || it == out.patch.method_replacements.end())
                    fail(ErrorCode::BadInput,
                         "REVERT_DECLARATION replay: unknown method " + action.detail);
                it->second = stitch_detail::revert_declaration_text(*original_method, it->second);
                break;
            }
            case StitchKind::AddImport: {
                java::ImportDecl decl = java::make_import(action.detail);
                bool present = false;
                for (const auto& existing : out.patch.new_imports)
                    present |= existing.qualified_name == decl.qualified_name &&
                               existing.is_static == decl.is_static;
                if (!present) out.patch.new_imports.push_back(decl);
                break;
            }
            case StitchKind::AddBuildDep: {
                auto first = action.detail.find(':');
                auto second = action.detail.find(':', first + 1);
                if (first == std::string::npos || second == std::string::npos)
                    fail(ErrorCode::BadInput, "ADD_BUILD_DEP replay: bad coordinate " +
                                                  action.detail);
                std::array<std::string, 3> coordinate = {
                    action.detail.substr(0, first),
                    action.detail.substr(first + 1, second - first - 1),
                    action.detail.substr(second + 1)};
                out.manifest_text = java::edit_build_dependency(out.manifest_text, coordinate);
                if (std::find(out.patch.build_dependencies.begin(),
                              out.patch.build_dependencies.end(),
                              coordinate) == out.patch.build_dependencies.end())
                    out.patch.build_dependencies.push_back(coordinate);
                break;
            }
            case StitchKind::ExcludeImport:
                std::erase_if(out.patch.new_imports, [&](const java::ImportDecl& d) {
                    return d.qualified_name == action.detail;
                });
                break;
        }
    }
    return out;
}

}  // namespace flakyfix
