#include "flakyfix/stitcher.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "flakyfix/java/parser.hpp"

namespace flakyfix::testgen {
namespace {

constexpr const char* kTestFilePath = "src/test/java/com/acme/events/EventTraceTest.java";

java::ClassModel original_class() {
    return java::parse_test_class(R"(package com.acme.events;

import static org.assertj.core.api.Assertions.assertThat;

import java.util.HashMap;
import java.util.Map;

import org.junit.Test;

public class EventTraceTest {
    private final Map<String, String> config = new HashMap<>();

    @Test
    public void assertTraceConfiguration() {
        config.put("driver", "h2");
        org.junit.Assert.assertEquals(1, config.size());
    }

    @Test
    public void assertSecondaryBehaviour() {
        org.junit.Assert.assertTrue(config.isEmpty());
    }
}
)");
}

const std::string kManifest = R"(<?xml version="1.0" encoding="UTF-8"?>
<project>
  <modelVersion>4.0.0</modelVersion>
  <groupId>com.acme</groupId>
  <artifactId>events</artifactId>
  <version>1.0</version>
  <dependencies>
    <dependency>
      <groupId>junit</groupId>
      <artifactId>junit</artifactId>
      <version>4.13.2</version>
    </dependency>
  </dependencies>
</project>
)";

int line_of_first(const std::string& text, std::string_view needle) {
    auto at = text.find(needle);
    EXPECT_NE(at, std::string::npos) << "needle '" << needle << "' absent";
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(at), '\n'));
}

CompilationDiagnostic missing_symbol(const std::string& symbol, int line) {
    return {kTestFilePath, line, DiagnosticKind::MissingSymbol, symbol, "cannot find symbol"};
}

CompilationDiagnostic missing_package(const std::string& package_name, int line) {
    return {kTestFilePath, line, DiagnosticKind::PackageNotFound, package_name,
            "package " + package_name + " does not exist"};
}

/// Reference-compiler stand-in: a symbol rule fires a MISSING_SYMBOL unless
/// one of its satisfying import lines is present in the probed source.
class RuleProber : public CompileProber {
  public:
    struct Rule {
        std::string needle;                    // source text that uses the symbol
        std::string symbol;                    // what the compiler would complain about
        std::vector<std::string> satisfiers;   // import lines that silence the complaint
    };

    std::vector<CompilationDiagnostic> probe(const std::string& source) override {
        ++probes;
        std::vector<CompilationDiagnostic> out;
        for (const auto& rule : rules) {
            if (source.find(rule.needle) == std::string::npos) continue;
            bool satisfied = false;
            for (const auto& import_line : rule.satisfiers)
                satisfied |= source.find(import_line) != std::string::npos;
            if (!satisfied)
                out.push_back(missing_symbol(rule.symbol, line_of_first(source, rule.needle)));
        }
        return out;
    }

    std::vector<Rule> rules;
    int probes = 0;
};

struct Fixture {
    java::ClassModel original = original_class();
    java::PatchCandidate patch;
    std::vector<CompilationDiagnostic> diagnostics;
    ClassIndex index = ClassIndex::builtin_jdk();
    PackageCoordinates packages = PackageCoordinates::builtin();
    RuleProber prober;
    std::string manifest = kManifest;

    StitchOutcome run(int budget = 10) {
        return stitch(original, patch, diagnostics, index, manifest, packages, &prober, budget);
    }
};

/// Patch that lost `public`, switched to LinkedHashMap without importing it,
/// and added a conflicting static assertThat import.
Fixture running_example() {
    Fixture fx;
    fx.patch.method_replacements["assertTraceConfiguration"] =
        "@Test\n"
        "void assertTraceConfiguration() {\n"
        "    Map<String, String> ordered = new LinkedHashMap<>();\n"
        "    ordered.put(\"driver\", \"h2\");\n"
        "    org.junit.Assert.assertEquals(1, ordered.size());\n"
        "}";
    fx.patch.new_imports.push_back(java::make_import("org.junit.Assert.assertThat", true));
    fx.patch.raw_response = "```METHOD assertTraceConfiguration\n" +
                            fx.patch.method_replacements["assertTraceConfiguration"] + "\n```\n";
    std::string patched = java::apply_patch(fx.original, fx.patch);
    fx.diagnostics = {missing_symbol("LinkedHashMap", line_of_first(patched, "LinkedHashMap"))};
    fx.prober.rules = {{"new LinkedHashMap", "LinkedHashMap", {"import java.util.LinkedHashMap;"}}};
    return fx;
}

TEST(ClassIndex, BuiltinListKeepsTheSimpleNameInvariant) {
    ClassIndex index = ClassIndex::builtin_jdk();
    EXPECT_NO_THROW(index.validate());
    EXPECT_EQ(index.candidates("LinkedHashMap"),
              std::vector<std::string>{"java.util.LinkedHashMap"});
    EXPECT_EQ(index.candidates("List"),
              (std::vector<std::string>{"java.awt.List", "java.util.List"}));
    EXPECT_EQ(index.candidates("Date"), (std::vector<std::string>{"java.sql.Date", "java.util.Date"}));
    EXPECT_TRUE(index.candidates("NoSuchClassAnywhere").empty());
}

TEST(ClassIndex, ValidateCatchesCorruptEntries) {
    ClassIndex index;
    index.add("com.acme.Thing");
    index.by_simple_name["Thing"].push_back("com.acme.Other");
    EXPECT_THROW(index.validate(), Error);
    EXPECT_THROW(index.add("NoDotsHere"), Error);
}

TEST(ClassIndex, MergeFileExtendsThePlatformList) {
    auto path = std::filesystem::temp_directory_path() / "flakyfix-classlist.txt";
    std::ofstream(path) << "# project classpath\ncom.acme.util.Registry\ncom.other.Registry\n";
    ClassIndex index = ClassIndex::builtin_jdk();
    index.merge_file(path.string());
    EXPECT_EQ(index.candidates("Registry"),
              (std::vector<std::string>{"com.acme.util.Registry", "com.other.Registry"}));
}

TEST(PackageCoordinates, BuiltinMatchesTheShippedFile) {
    PackageCoordinates shipped =
        PackageCoordinates::from_file(std::string(FLAKYFIX_REPO_DIR) +
                                      "/share/package-coordinates.txt");
    EXPECT_EQ(shipped.by_prefix, PackageCoordinates::builtin().by_prefix);
}

TEST(PackageCoordinates, LongestPrefixWinsAndMissesAreEmpty) {
    PackageCoordinates table = PackageCoordinates::builtin();
    auto gson = table.lookup("com.google.gson.reflect");
    ASSERT_TRUE(gson.has_value());
    EXPECT_EQ((*gson)[1], "gson");
    auto guava = table.lookup("com.google.common.collect");
    ASSERT_TRUE(guava.has_value());
    EXPECT_EQ((*guava)[1], "guava");
    auto junit5 = table.lookup("org.junit.jupiter.api");
    ASSERT_TRUE(junit5.has_value());
    EXPECT_EQ((*junit5)[0], "org.junit.jupiter");
    EXPECT_FALSE(table.lookup("com.example.internal").has_value());
}

TEST(ReconcileDeclarations, LostPublicModifierIsRestored) {
    Fixture fx = running_example();
    auto actions = reconcile_declarations(fx.original, fx.patch, fx.diagnostics);

    ASSERT_EQ(actions.size(), 1u);
    EXPECT_EQ(actions[0].kind, StitchKind::RevertDeclaration);
    EXPECT_EQ(actions[0].detail, "assertTraceConfiguration");
    const std::string& reverted = fx.patch.method_replacements.at("assertTraceConfiguration");
    java::MethodModel method = java::parse_method_snippet(reverted);
    EXPECT_EQ(method.modifiers, std::vector<std::string>{"public"});
    // the body is the patch's, byte for byte
    EXPECT_NE(reverted.find("new LinkedHashMap<>();"), std::string::npos);
    EXPECT_EQ(method.body_text.find("{"), 0u);
}

TEST(ReconcileDeclarations, LostTestAnnotationIsRestoredAndDiscoverable) {
    Fixture fx;
    fx.patch.method_replacements["assertTraceConfiguration"] =
        "public void assertTraceConfiguration() {\n"
        "    config.clear();\n"
        "}";
    std::string patched = java::apply_patch(fx.original, fx.patch);
    fx.diagnostics = {missing_symbol("clear", line_of_first(patched, "config.clear()"))};

    reconcile_declarations(fx.original, fx.patch, fx.diagnostics);
    java::MethodModel method =
        java::parse_method_snippet(fx.patch.method_replacements.at("assertTraceConfiguration"));
    EXPECT_TRUE(method.is_test());  // the runner would discover it again
}

TEST(ReconcileDeclarations, EqualDeclarationsAreUntouched) {
    Fixture fx;
    std::string text =
        "@Test\n"
        "public void assertTraceConfiguration() {\n"
        "    config.put(\"driver\", \"mem\");\n"
        "}";
    fx.patch.method_replacements["assertTraceConfiguration"] = text;
    std::string patched = java::apply_patch(fx.original, fx.patch);
    fx.diagnostics = {missing_symbol("put", line_of_first(patched, "\"mem\""))};

    auto actions = reconcile_declarations(fx.original, fx.patch, fx.diagnostics);
    EXPECT_TRUE(actions.empty());
    EXPECT_EQ(fx.patch.method_replacements.at("assertTraceConfiguration"), text);
}

TEST(ReconcileDeclarations, OnlyImplicatedMethodsAreExamined) {
    Fixture fx;
    fx.patch.method_replacements["assertTraceConfiguration"] =
        "@Test\nvoid assertTraceConfiguration() {\n    int broken = unknownCall();\n}";
    fx.patch.method_replacements["assertSecondaryBehaviour"] =
        "@Test\nvoid assertSecondaryBehaviour() {\n    config.clear();\n}";
    std::string patched = java::apply_patch(fx.original, fx.patch);
    fx.diagnostics = {missing_symbol("unknownCall", line_of_first(patched, "unknownCall"))};

    auto actions = reconcile_declarations(fx.original, fx.patch, fx.diagnostics);
    ASSERT_EQ(actions.size(), 1u);
    EXPECT_EQ(actions[0].detail, "assertTraceConfiguration");
    // the other method keeps its drifted declaration: no diagnostic implicates it
    EXPECT_EQ(fx.patch.method_replacements.at("assertSecondaryBehaviour").rfind("@Test\nvoid"), 0u);
}

TEST(ReconcileDeclarations, ClassLevelDiagnosticImplicatesEveryReplacedMethod) {
    Fixture fx;
    fx.patch.method_replacements["assertTraceConfiguration"] =
        "@Test\nvoid assertTraceConfiguration() {\n    config.clear();\n}";
    fx.patch.method_replacements["assertSecondaryBehaviour"] =
        "@Test\nvoid assertSecondaryBehaviour() {\n    config.clear();\n}";
    std::string patched = java::apply_patch(fx.original, fx.patch);
    fx.diagnostics = {missing_symbol("ImportedThing", line_of_first(patched, "import java.util.Map;"))};

    auto actions = reconcile_declarations(fx.original, fx.patch, fx.diagnostics);
    EXPECT_EQ(actions.size(), 2u);
}

TEST(ReconcileDeclarations, ReturnTypeAndParameterListRevertButThrowsSurvives) {
    java::ClassModel original = java::parse_test_class(
        "package p;\n"
        "public class HelperTest {\n"
        "    public int compute(int seed) throws java.io.IOException {\n"
        "        return seed;\n"
        "    }\n"
        "}\n");
    java::PatchCandidate patch;
    patch.method_replacements["compute"] =
        "public long compute(long seed, int extra) throws java.io.IOException {\n"
        "    return seed + extra;\n"
        "}";
    std::vector<CompilationDiagnostic> diagnostics = {
        {"src/test/java/p/HelperTest.java", 0, DiagnosticKind::Other, "", "incompatible types"}};

    auto actions = reconcile_declarations(original, patch, diagnostics);
    ASSERT_EQ(actions.size(), 1u);
    java::MethodModel reverted = java::parse_method_snippet(patch.method_replacements.at("compute"));
    EXPECT_EQ(reverted.return_type, "int");
    ASSERT_EQ(reverted.parameters.size(), 1u);
    EXPECT_EQ(reverted.parameters[0].first, "int");
    EXPECT_NE(patch.method_replacements.at("compute").find("throws java.io.IOException"),
              std::string::npos);
    EXPECT_NE(patch.method_replacements.at("compute").find("return seed + extra;"),
              std::string::npos);
}

TEST(ReconcileDeclarations, AddedHelpersHaveNothingToReconcileAgainst) {
    Fixture fx;
    fx.patch.method_replacements["resetState"] = "private void resetState() {\n    config.clear();\n}";
    fx.patch.added_methods.insert("resetState");
    std::string patched = java::apply_patch(fx.original, fx.patch);
    fx.diagnostics = {missing_symbol("clear", line_of_first(patched, "config.clear()"))};

    auto actions = reconcile_declarations(fx.original, fx.patch, fx.diagnostics);
    EXPECT_TRUE(actions.empty());
}

TEST(ResolveMissingSymbols, MissingLinkedHashMapImportsJavaUtil) {
    Fixture fx = running_example();
    std::vector<std::string> unresolved;
    auto actions = resolve_missing_symbols(fx.original, fx.patch, fx.diagnostics, fx.index,
                                           &fx.prober, 10, unresolved);
    ASSERT_EQ(actions.size(), 1u);
    EXPECT_EQ(actions[0].kind, StitchKind::AddImport);
    EXPECT_EQ(actions[0].detail, "java.util.LinkedHashMap");
    ASSERT_TRUE(actions[0].resolved_diagnostic.has_value());
    EXPECT_EQ(actions[0].resolved_diagnostic->symbol, "LinkedHashMap");
    ASSERT_EQ(fx.patch.new_imports.size(), 2u);  // the conflicting assertThat plus the fix
    EXPECT_EQ(fx.patch.new_imports.back().qualified_name, "java.util.LinkedHashMap");
    EXPECT_TRUE(unresolved.empty());
    EXPECT_EQ(fx.prober.probes, 1);
}

TEST(ResolveMissingSymbols, ZeroCandidatesLeavesTheSymbolUnresolved) {
    Fixture fx = running_example();
    fx.diagnostics = {missing_symbol("TotallyUnknownWidget", 3)};
    std::vector<std::string> unresolved;
    auto actions = resolve_missing_symbols(fx.original, fx.patch, fx.diagnostics, fx.index,
                                           &fx.prober, 10, unresolved);
    EXPECT_TRUE(actions.empty());
    ASSERT_EQ(unresolved.size(), 1u);
    EXPECT_NE(unresolved[0].find("TotallyUnknownWidget"), std::string::npos);
    EXPECT_EQ(fx.prober.probes, 0);
}

TEST(ResolveMissingSymbols, ProbeOracleRejectsJavaAwtListAndKeepsJavaUtilList) {
    Fixture fx;
    fx.patch.method_replacements["assertTraceConfiguration"] =
        "@Test\n"
        "public void assertTraceConfiguration() {\n"
        "    List<String> keys = new java.util.ArrayList<>(config.keySet());\n"
        "    org.junit.Assert.assertEquals(0, keys.size());\n"
        "}";
    std::string patched = java::apply_patch(fx.original, fx.patch);
    fx.diagnostics = {missing_symbol("List", line_of_first(patched, "List<String>"))};
    fx.prober.rules = {{"List<String>", "List", {"import java.util.List;"}}};

    std::vector<std::string> unresolved;
    auto actions = resolve_missing_symbols(fx.original, fx.patch, fx.diagnostics, fx.index,
                                           &fx.prober, 10, unresolved);
    ASSERT_EQ(actions.size(), 1u);
    EXPECT_EQ(actions[0].detail, "java.util.List");
    EXPECT_EQ(fx.prober.probes, 2);  // java.awt.List tried first (alphabetical), rejected
    EXPECT_TRUE(unresolved.empty());
}

TEST(ResolveMissingSymbols, ResponseTextHintOutranksTheStandardLibraryOrder) {
    Fixture fx;
    fx.patch.method_replacements["assertTraceConfiguration"] =
        "@Test\n"
        "public void assertTraceConfiguration() {\n"
        "    List<String> keys = new java.util.ArrayList<>(config.keySet());\n"
        "    org.junit.Assert.assertEquals(0, keys.size());\n"
        "}";
    fx.patch.raw_response = "You should import java.util.List for this to compile.\n";
    std::string patched = java::apply_patch(fx.original, fx.patch);
    fx.diagnostics = {missing_symbol("List", line_of_first(patched, "List<String>"))};
    fx.prober.rules = {{"List<String>", "List", {"import java.util.List;"}}};

    std::vector<std::string> unresolved;
    auto actions = resolve_missing_symbols(fx.original, fx.patch, fx.diagnostics, fx.index,
                                           &fx.prober, 10, unresolved);
    ASSERT_EQ(actions.size(), 1u);
    EXPECT_EQ(actions[0].detail, "java.util.List");
    EXPECT_EQ(fx.prober.probes, 1);  // the hint moved java.util.List to the front
}

TEST(ResolveMissingSymbols, ProbeBudgetCapsTheTrials) {
    Fixture fx;
    fx.patch.method_replacements["assertTraceConfiguration"] =
        "@Test\npublic void assertTraceConfiguration() {\n    Widget w = new Widget();\n}";
    for (int i = 0; i < 15; ++i)
        fx.index.add("com.vendor" + std::to_string(i) + ".Widget");
    std::string patched = java::apply_patch(fx.original, fx.patch);
    fx.diagnostics = {missing_symbol("Widget", line_of_first(patched, "Widget w"))};
    fx.prober.rules = {{"Widget w", "Widget", {"import com.nowhere.Widget;"}}};  // nothing satisfies

    std::vector<std::string> unresolved;
    auto actions = resolve_missing_symbols(fx.original, fx.patch, fx.diagnostics, fx.index,
                                           &fx.prober, 10, unresolved);
    EXPECT_TRUE(actions.empty());
    EXPECT_EQ(fx.prober.probes, 10);
    ASSERT_EQ(unresolved.size(), 1u);
    EXPECT_NE(unresolved[0].find("Widget"), std::string::npos);
}

TEST(ResolveMissingSymbols, WithoutAProberEverySymbolGoesToTheFeedbackLoop) {
    Fixture fx = running_example();
    std::vector<std::string> unresolved;
    auto actions = resolve_missing_symbols(fx.original, fx.patch, fx.diagnostics, fx.index,
                                           nullptr, 10, unresolved);
    EXPECT_TRUE(actions.empty());
    EXPECT_EQ(unresolved.size(), 1u);
}

TEST(BuildDependencies, MissingGsonPackageAddsTheCoordinate) {
    Fixture fx;
    fx.diagnostics = {missing_package("com.google.gson", 3)};
    std::vector<std::string> unresolved;
    std::string manifest = kManifest;
    auto actions = add_build_dependency_for_missing_package(fx.patch, fx.diagnostics, manifest,
                                                            fx.packages, unresolved);
    ASSERT_EQ(actions.size(), 1u);
    EXPECT_EQ(actions[0].kind, StitchKind::AddBuildDep);
    EXPECT_EQ(actions[0].detail, "com.google.code.gson:gson:2.8.6");
    EXPECT_NE(manifest.find("<artifactId>gson</artifactId>"), std::string::npos);
    EXPECT_NE(manifest.find("<version>2.8.6</version>"), std::string::npos);
    ASSERT_EQ(fx.patch.build_dependencies.size(), 1u);
    EXPECT_TRUE(unresolved.empty());
}

TEST(BuildDependencies, AlreadySatisfiedPackageIsAnIdempotentNoOp) {
    Fixture fx;
    std::string manifest = java::edit_build_dependency(
        kManifest, {"com.google.code.gson", "gson", "2.8.6"});
    std::string before = manifest;
    fx.diagnostics = {missing_package("com.google.gson", 3)};  // stale diagnostic
    std::vector<std::string> unresolved;
    auto actions = add_build_dependency_for_missing_package(fx.patch, fx.diagnostics, manifest,
                                                            fx.packages, unresolved);
    EXPECT_TRUE(actions.empty());
    EXPECT_EQ(manifest, before);
    EXPECT_TRUE(unresolved.empty());
}

TEST(BuildDependencies, WrongVersionIsRewritten) {
    Fixture fx;
    std::string manifest = java::edit_build_dependency(
        kManifest, {"com.google.code.gson", "gson", "2.8.1"});
    fx.diagnostics = {missing_package("com.google.gson", 3)};
    std::vector<std::string> unresolved;
    auto actions = add_build_dependency_for_missing_package(fx.patch, fx.diagnostics, manifest,
                                                            fx.packages, unresolved);
    ASSERT_EQ(actions.size(), 1u);
    EXPECT_NE(manifest.find("<version>2.8.6</version>"), std::string::npos);
    EXPECT_EQ(manifest.find("<version>2.8.1</version>"), std::string::npos);
}

TEST(BuildDependencies, UnknownPackageIsLoggedUnresolved) {
    Fixture fx;
    std::string manifest = kManifest;
    fx.diagnostics = {missing_package("com.example.internal", 3)};
    std::vector<std::string> unresolved;
    auto actions = add_build_dependency_for_missing_package(fx.patch, fx.diagnostics, manifest,
                                                            fx.packages, unresolved);
    EXPECT_TRUE(actions.empty());
    EXPECT_EQ(manifest, kManifest);
    ASSERT_EQ(unresolved.size(), 1u);
    EXPECT_NE(unresolved[0].find("com.example.internal"), std::string::npos);
}

TEST(ImportConflicts, StaticAssertThatCollisionKeepsTheOriginal) {
    Fixture fx;
    fx.patch.new_imports.push_back(java::make_import("org.junit.Assert.assertThat", true));
    auto actions = resolve_import_conflicts(fx.original, fx.patch);
    ASSERT_EQ(actions.size(), 1u);
    EXPECT_EQ(actions[0].kind, StitchKind::ExcludeImport);
    EXPECT_EQ(actions[0].detail, "org.junit.Assert.assertThat");
    EXPECT_TRUE(fx.patch.new_imports.empty());
}

TEST(ImportConflicts, SameSimpleNameNonStaticCollisionIsExcludedToo) {
    Fixture fx;  // original imports java.util.Map
    fx.patch.new_imports.push_back(java::make_import("com.acme.alt.Map"));
    auto actions = resolve_import_conflicts(fx.original, fx.patch);
    ASSERT_EQ(actions.size(), 1u);
    EXPECT_EQ(actions[0].detail, "com.acme.alt.Map");
    EXPECT_TRUE(fx.patch.new_imports.empty());
}

TEST(ImportConflicts, NoOverlapMeansNoEdits) {
    Fixture fx;
    fx.patch.new_imports.push_back(java::make_import("java.util.LinkedHashMap"));
    auto actions = resolve_import_conflicts(fx.original, fx.patch);
    EXPECT_TRUE(actions.empty());
    EXPECT_EQ(fx.patch.new_imports.size(), 1u);
}

TEST(ImportConflicts, ReAddingAnIdenticalImportIsDeduplicatedNotExcluded) {
    Fixture fx;
    fx.patch.new_imports.push_back(java::make_import("java.util.Map"));
    fx.patch.method_replacements["assertTraceConfiguration"] =
        "@Test\npublic void assertTraceConfiguration() {\n    config.clear();\n}";
    auto actions = resolve_import_conflicts(fx.original, fx.patch);
    EXPECT_TRUE(actions.empty());
    EXPECT_EQ(fx.patch.new_imports.size(), 1u);
    // apply keeps a single copy of the import
    std::string patched = java::apply_patch(fx.original, fx.patch);
    auto first = patched.find("import java.util.Map;");
    EXPECT_NE(first, std::string::npos);
    EXPECT_EQ(patched.find("import java.util.Map;", first + 1), std::string::npos);
}

TEST(ImportConflicts, WildcardImportsNeverConflict) {
    Fixture fx;
    fx.patch.new_imports.push_back(java::make_import("java.util.concurrent.*"));
    auto actions = resolve_import_conflicts(fx.original, fx.patch);
    EXPECT_TRUE(actions.empty());
    EXPECT_EQ(fx.patch.new_imports.size(), 1u);
}

TEST(Stitch, RunningExampleComposesRevertImportAndExclusion) {
    Fixture fx = running_example();
    StitchOutcome out = fx.run();

    ASSERT_EQ(out.actions.size(), 3u);
    EXPECT_EQ(out.actions[0].kind, StitchKind::RevertDeclaration);
    EXPECT_EQ(out.actions[1].kind, StitchKind::AddImport);
    EXPECT_EQ(out.actions[1].detail, "java.util.LinkedHashMap");
    EXPECT_EQ(out.actions[2].kind, StitchKind::ExcludeImport);
    EXPECT_EQ(out.actions[2].detail, "org.junit.Assert.assertThat");
    EXPECT_TRUE(out.unresolved.empty());

    // the reference compiler is satisfied with the stitched patch
    std::string stitched_source = java::apply_patch(fx.original, out.patch);
    EXPECT_TRUE(fx.prober.probe(stitched_source).empty());
    EXPECT_NE(stitched_source.find("public void assertTraceConfiguration()"), std::string::npos);
}

TEST(Stitch, EmptyDiagnosticsReturnsThePatchUntouched) {
    Fixture fx = running_example();
    fx.diagnostics.clear();
    StitchOutcome out = fx.run();
    EXPECT_TRUE(out.actions.empty());
    EXPECT_TRUE(out.unresolved.empty());
    EXPECT_EQ(out.patch.method_replacements, fx.patch.method_replacements);
    EXPECT_EQ(out.manifest_text, kManifest);
    EXPECT_EQ(fx.prober.probes, 0);
}

TEST(Stitch, NoApplicableActionReturnsUnchangedWithEmptyLog) {
    Fixture fx;
    fx.patch.method_replacements["assertTraceConfiguration"] =
        "@Test\npublic void assertTraceConfiguration() {\n    config.clear();\n}";
    std::string patched = java::apply_patch(fx.original, fx.patch);
    // a diagnostic nothing in the stitcher addresses: an OTHER in the method
    fx.diagnostics = {{kTestFilePath, line_of_first(patched, "config.clear()"),
                       DiagnosticKind::Other, "", "incompatible types: bad karma"}};
    StitchOutcome out = fx.run();
    EXPECT_TRUE(out.actions.empty());
    EXPECT_EQ(out.patch.method_replacements, fx.patch.method_replacements);
    EXPECT_EQ(out.manifest_text, kManifest);
}

std::vector<Fixture (*)()> corpus() {
    return {
        running_example,
        [] {  // missing gson package + method that keeps its declaration
            Fixture fx;
            fx.patch.method_replacements["assertTraceConfiguration"] =
                "@Test\n"
                "public void assertTraceConfiguration() {\n"
                "    String json = new Gson().toJson(config);\n"
                "    org.junit.Assert.assertEquals(\"{}\", json);\n"
                "}";
            std::string patched = java::apply_patch(fx.original, fx.patch);
            fx.diagnostics = {
                missing_symbol("Gson", line_of_first(patched, "new Gson()")),
                missing_package("com.google.gson", line_of_first(patched, "new Gson()"))};
            fx.index.add("com.google.gson.Gson");
            fx.prober.rules = {{"new Gson()", "Gson", {"import com.google.gson.Gson;"}}};
            return fx;
        },
        [] {  // unresolvable symbol: partial progress only
            Fixture fx;
            fx.patch.method_replacements["assertTraceConfiguration"] =
                "@Test\nvoid assertTraceConfiguration() {\n    Sprocket s = new Sprocket();\n}";
            std::string patched = java::apply_patch(fx.original, fx.patch);
            fx.diagnostics = {missing_symbol("Sprocket", line_of_first(patched, "Sprocket s"))};
            fx.prober.rules = {{"Sprocket s", "Sprocket", {"import com.nowhere.Sprocket;"}}};
            return fx;
        },
        [] {  // conflict-only patch
            Fixture fx;
            fx.patch.new_imports.push_back(java::make_import("java.awt.List"));
            fx.patch.new_imports.push_back(java::make_import("com.acme.alt.Map"));
            fx.patch.method_replacements["assertSecondaryBehaviour"] =
                "@Test\npublic void assertSecondaryBehaviour() {\n    config.clear();\n}";
            std::string patched = java::apply_patch(fx.original, fx.patch);
            fx.diagnostics = {{kTestFilePath, line_of_first(patched, "import com.acme.alt.Map;"),
                               DiagnosticKind::AmbiguousReference, "Map",
                               "reference to Map is ambiguous"}};
            return fx;
        },
    };
}

TEST(StitchProperties, DiagnosticsAreMonotoneOnEveryFixture) {
    for (auto make : corpus()) {
        Fixture fx = make();
        std::vector<CompilationDiagnostic> before =
            fx.prober.probe(java::apply_patch(fx.original, fx.patch));
        StitchOutcome out = fx.run();
        std::vector<CompilationDiagnostic> after =
            fx.prober.probe(java::apply_patch(fx.original, out.patch));
        for (const auto& d : after) {
            bool was_there = false;
            for (const auto& b : before)
                was_there |= b.kind == d.kind && b.symbol == d.symbol;
            EXPECT_TRUE(was_there) << "stitch introduced a new diagnostic for " << d.symbol;
        }
        EXPECT_LE(after.size(), before.size());
    }
}

TEST(StitchProperties, StitchingTwiceChangesNothingFurther) {
    for (auto make : corpus()) {
        Fixture fx = make();
        StitchOutcome once = fx.run();
        // second round sees the fresh compiler verdict on the stitched patch
        std::vector<CompilationDiagnostic> residual =
            fx.prober.probe(java::apply_patch(fx.original, once.patch));
        StitchOutcome twice = stitch(fx.original, once.patch, residual, fx.index,
                                     once.manifest_text, fx.packages, &fx.prober, 10);
        EXPECT_EQ(twice.patch.method_replacements, once.patch.method_replacements);
        EXPECT_EQ(twice.patch.new_imports, once.patch.new_imports);
        EXPECT_EQ(twice.patch.build_dependencies, once.patch.build_dependencies);
        EXPECT_EQ(twice.manifest_text, once.manifest_text);
    }
}

TEST(StitchProperties, LoggedActionsReplayToTheStitchedPatchByteForByte) {
    for (auto make : corpus()) {
        Fixture fx = make();
        StitchOutcome out = fx.run();
        StitchOutcome replayed =
            apply_stitch_actions(fx.original, make().patch, out.actions, kManifest);
        EXPECT_EQ(replayed.patch.method_replacements, out.patch.method_replacements);
        EXPECT_EQ(replayed.patch.new_imports, out.patch.new_imports);
        EXPECT_EQ(replayed.patch.build_dependencies, out.patch.build_dependencies);
        EXPECT_EQ(replayed.manifest_text, out.manifest_text);
    }
}

TEST(StitchProperties, MethodBodiesAreNeverEdited) {
    for (auto make : corpus()) {
        Fixture fx = make();
        std::map<std::string, std::string> bodies_before;
        for (const auto& [name, text] : fx.patch.method_replacements)
            bodies_before[name] = java::parse_method_snippet(text).body_text;
        StitchOutcome out = fx.run();
        for (const auto& [name, text] : out.patch.method_replacements)
            EXPECT_EQ(java::parse_method_snippet(text).body_text, bodies_before.at(name))
                << "body of " << name << " changed";
    }
}

}  // namespace
}  // namespace flakyfix::testgen
