#include "flakyfix/prompt.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "support/prompt_fixtures.hpp"

namespace {

using flakyfix::augment_with_feedback;
using flakyfix::build_prompt;
using flakyfix::CompilationDiagnostic;
using flakyfix::ContextBundle;
using flakyfix::DiagnosticKind;
using flakyfix::Error;
using flakyfix::ErrorCode;
using flakyfix::FailingAssertion;
using flakyfix::FeedbackContext;
using flakyfix::FlakinessCategory;
using flakyfix::FlakyTestCase;
using flakyfix::IterationRecord;
using flakyfix::OutcomeKind;
using flakyfix::Prompt;
using flakyfix::render_failure_location;
using flakyfix::TemplateSet;

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    EXPECT_TRUE(in) << "missing fixture " << p;
    return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path goldens_dir() { return fs::path(FLAKYFIX_TESTS_DIR) / "fixtures" / "prompts"; }

/// Hand-built OD_VICTIM context with droppable blocks, for trim tests.
struct TrimFixture {
    FlakyTestCase tc;
    ContextBundle bundle;

    TrimFixture() {
        tc.test = {"p.OrderTest", "t", "."};
        tc.category = FlakinessCategory::OdVictim;
        tc.polluters = {{"p.OrderTest", "pol", "."}};

        bundle.error_message = "expected:<1> but was:<2>";
        bundle.failing_assertion = FailingAssertion{"p.OrderTest", "t", 12, "assertEquals(1, v);"};
        bundle.related_code.flaky_source = "@Test\npublic void t() {\n    assertEquals(1, v);\n}";
        bundle.related_code.polluters = {
            {"p.OrderTest#pol", "@Test\npublic void pol() {\n    v = 2;\n}"}};
        bundle.related_code.fields = {"static int v = 1;"};
        bundle.related_code.helpers = {
            {"OrderTest.resetOne", "void resetOne() {\n    v = 1;\n}"},
            {"OrderTest.resetTwo", "void resetTwo() {\n    resetOne();\n}"}};
    }
};

TEST(Templates, BuiltinMatchesTheShippedFiles) {
    auto shipped = TemplateSet::from_dir(fs::path(FLAKYFIX_REPO_DIR) / "share" / "templates");
    EXPECT_EQ(shipped, TemplateSet::builtin());
}

TEST(Templates, ParserRejectsMalformedFiles) {
    using flakyfix::detail::parse_template;

    auto expect_bad = [](const std::string& text, const char* why) {
        try {
            parse_template(text, "t");
            FAIL() << "expected BadInput: " << why;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::BadInput) << why;
        }
    };

    expect_bad("stray text\n[INSTRUCTION]\nx\n[PROBLEM_DEFINITION]\ny\n[RULES]\n1. a\n",
               "non-comment preamble");
    expect_bad("[INSTRUCTION]\nx\n[RULES]\n1. a\n2. b\n3. c\n4. d\n5. e\n6. f\n",
               "missing problem definition");
    expect_bad("[INSTRUCTION]\nx\n[PROBLEM_DEFINITION]\ny\n[RULES]\n1. a\n2. b\n3. c\n4. d\n5. e\n",
               "five rules");
    expect_bad(
        "[INSTRUCTION]\nx\n[INSTRUCTION]\nx\n[PROBLEM_DEFINITION]\ny\n[RULES]\n1. a\n2. b\n3. "
        "c\n4. d\n5. e\n6. f\n",
        "duplicate section");

    auto ok = parse_template(
        "# comment\n\n[INSTRUCTION]\nx\n[PROBLEM_DEFINITION]\ny\n[RULES]\n1. a\n2. b\n3. c\n4. "
        "d\n5. e\n6. f\n",
        "t");
    EXPECT_EQ(ok.instruction, "x");
    EXPECT_EQ(ok.rules, (std::vector<std::string>{"a", "b", "c", "d", "e", "f"}));
}

TEST(BuildPrompt, SectionOrderIsFixedForEveryCategory) {
    for (const Prompt& p : {flakyfix::testgen::victim_prompt(), flakyfix::testgen::id_prompt(),
                            flakyfix::testgen::brittle_prompt()}) {
        std::string text = p.render();
        auto instruction = text.find("## Instruction");
        auto problem = text.find("## Problem Definition");
        auto related = text.find("## Related Code");
        auto failure = text.find("## Failure Location");
        auto rules = text.find("## Rules");
        ASSERT_NE(instruction, std::string::npos);
        EXPECT_LT(instruction, problem);
        EXPECT_LT(problem, related);
        EXPECT_LT(related, failure);
        EXPECT_LT(failure, rules);
        EXPECT_LE(text.size(), static_cast<std::size_t>(p.char_budget));
    }
}

TEST(BuildPrompt, ExactlySixRulesWithThePinnedAnchors) {
    for (const Prompt& p : {flakyfix::testgen::victim_prompt(), flakyfix::testgen::id_prompt(),
                            flakyfix::testgen::brittle_prompt()}) {
        ASSERT_EQ(p.rules.size(), 6u);
        EXPECT_NE(p.rules[0].find("Chain-of-Thought"), std::string::npos);
        EXPECT_NE(p.rules[1].find("imports"), std::string::npos);
        EXPECT_NE(p.rules[5].find("METHOD <name>"), std::string::npos);
        EXPECT_NE(p.rules[5].find("IMPORTS"), std::string::npos);
        EXPECT_NE(p.rules[5].find("BUILD_DEPS"), std::string::npos);
    }
}

TEST(BuildPrompt, VictimPromptNamesBothTestsAndCarriesPolluterCode) {
    Prompt p = flakyfix::testgen::victim_prompt();

    EXPECT_NE(p.problem_definition.find("com.acme.AppTest#victim"), std::string::npos);
    EXPECT_NE(p.problem_definition.find("com.acme.AppTest#polluter"), std::string::npos);
    EXPECT_NE(p.related_code.find("// Flaky test: com.acme.AppTest#victim"), std::string::npos);
    EXPECT_NE(p.related_code.find("// Polluter: com.acme.AppTest#polluter"), std::string::npos);
    EXPECT_NE(p.related_code.find("registry.put"), std::string::npos);
    EXPECT_NE(p.related_code.find("// Shared state"), std::string::npos);
    EXPECT_NE(p.failure_location.find("Flakiness suspect (CI.3): shared field:"),
              std::string::npos);
}

TEST(BuildPrompt, IdPromptCarriesOnlyTheFlakyMethod) {
    Prompt p = flakyfix::testgen::id_prompt();

    EXPECT_NE(p.related_code.find("// Flaky test:"), std::string::npos);
    EXPECT_EQ(p.related_code.find("// Polluter"), std::string::npos);
    EXPECT_EQ(p.related_code.find("// Shared state"), std::string::npos);
    EXPECT_EQ(p.related_code.find("// Helper"), std::string::npos);
    EXPECT_NE(p.failure_location.find(
                  R"(expected:{"a":"1","disableCheck":"true"} but was:{"disableCheck":"true","a":"1"})"),
              std::string::npos);
    EXPECT_NE(p.failure_location.find("new HashMap<>(8)"), std::string::npos);
    EXPECT_NE(p.failure_location.find("UNORDERED_COLLECTION_CTOR"), std::string::npos);
}

TEST(BuildPrompt, PolluterCodeAppearsIffVictimCategory) {
    EXPECT_NE(flakyfix::testgen::victim_prompt().related_code.find("Polluter"),
              std::string::npos);
    EXPECT_EQ(flakyfix::testgen::id_prompt().related_code.find("Polluter"), std::string::npos);
    EXPECT_EQ(flakyfix::testgen::brittle_prompt().related_code.find("Polluter"),
              std::string::npos);
}

TEST(BuildPrompt, GoldenRenderings) {
    EXPECT_EQ(flakyfix::testgen::victim_prompt().render(),
              read_file(goldens_dir() / "od_victim_iter1.txt"));
    EXPECT_EQ(flakyfix::testgen::id_prompt().render(),
              read_file(goldens_dir() / "id_iter1.txt"));
    EXPECT_EQ(flakyfix::testgen::brittle_prompt().render(),
              read_file(goldens_dir() / "od_brittle_iter1.txt"));
}

TEST(BuildPrompt, DegradedContextRendersWithoutTheAssertionLine) {
    TrimFixture fx;
    fx.bundle.failing_assertion.reset();
    fx.bundle.warnings.push_back("CONTEXT_DEGRADED: no frame mapped");

    Prompt p = build_prompt(fx.tc, fx.bundle);
    EXPECT_NE(p.failure_location.find("Error (CI.1):"), std::string::npos);
    EXPECT_EQ(p.failure_location.find("Failed assertion"), std::string::npos);
}

TEST(BuildPrompt, BudgetTrimDropsHelpersFromTheBackThenFields) {
    TrimFixture fx;
    Prompt full = build_prompt(fx.tc, fx.bundle);
    ASSERT_NE(full.related_code.find("resetTwo"), std::string::npos);

    // each one-character-tighter budget forces exactly one more block out
    Prompt last_helper_gone = build_prompt(fx.tc, fx.bundle, TemplateSet::builtin(), 1,
                                           static_cast<int>(full.render().size() - 1));
    EXPECT_EQ(last_helper_gone.related_code.find("resetTwo"), std::string::npos);
    EXPECT_NE(last_helper_gone.related_code.find("resetOne"), std::string::npos);
    EXPECT_NE(last_helper_gone.related_code.find("// Shared state"), std::string::npos);

    Prompt helpers_gone = build_prompt(fx.tc, fx.bundle, TemplateSet::builtin(), 1,
                                       static_cast<int>(last_helper_gone.render().size() - 1));
    EXPECT_EQ(helpers_gone.related_code.find("resetOne"), std::string::npos);
    EXPECT_NE(helpers_gone.related_code.find("// Shared state"), std::string::npos);

    Prompt fields_gone = build_prompt(fx.tc, fx.bundle, TemplateSet::builtin(), 1,
                                      static_cast<int>(helpers_gone.render().size() - 1));
    EXPECT_EQ(fields_gone.related_code.find("// Shared state"), std::string::npos);
    EXPECT_NE(fields_gone.related_code.find("// Flaky test:"), std::string::npos);
    EXPECT_NE(fields_gone.related_code.find("// Polluter:"), std::string::npos);
}

TEST(BuildPrompt, OverflowAfterTrimmingAborts) {
    TrimFixture fx;
    try {
        build_prompt(fx.tc, fx.bundle, TemplateSet::builtin(), 1, 200);
        FAIL() << "expected PromptOverflow";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PromptOverflow);
    }
}

TEST(BuildPrompt, UnknownPlaceholderIsRejected) {
    TrimFixture fx;
    TemplateSet broken = TemplateSet::builtin();
    broken.od_victim.instruction += " {{bogus}}";
    try {
        build_prompt(fx.tc, fx.bundle, broken);
        FAIL() << "expected BadInput";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BadInput);
    }
}

TEST(PromptValidate, RejectsBadShapes) {
    Prompt p = flakyfix::testgen::id_prompt();

    Prompt five_rules = p;
    five_rules.rules.pop_back();
    EXPECT_THROW(five_rules.validate(), Error);

    Prompt iteration_zero = p;
    iteration_zero.iteration = 0;
    EXPECT_THROW(iteration_zero.validate(), Error);

    Prompt iteration_six = p;
    iteration_six.iteration = 6;
    EXPECT_THROW(iteration_six.validate(), Error);
}

TEST(Augment, CompileFeedbackKeepsAtMostFiveDiagnostics) {
    Prompt previous = flakyfix::testgen::victim_prompt();

    IterationRecord record;
    record.index = 1;
    record.outcome = OutcomeKind::CompilationError;
    record.diagnostic_key = "k";

    FeedbackContext ctx;
    ctx.current_code = "public void victim() {}";
    for (int i = 1; i <= 40; ++i)
        ctx.diagnostics.push_back({"src/A.java", i, DiagnosticKind::MissingSymbol,
                                   "sym" + std::to_string(i), "cannot find symbol"});

    Prompt next = augment_with_feedback(previous, record, ctx);

    EXPECT_EQ(next.iteration, 2);
    EXPECT_EQ(next.related_code, ctx.current_code);
    EXPECT_EQ(next.instruction, previous.instruction);
    EXPECT_EQ(next.problem_definition, previous.problem_definition);
    EXPECT_EQ(next.rules, previous.rules);

    std::size_t lines = std::count(next.failure_location.begin(), next.failure_location.end(),
                                   '\n') + 1;
    EXPECT_EQ(lines, 5u);
    EXPECT_NE(next.failure_location.find("Compiler error: src/A.java:1 MISSING_SYMBOL sym1"),
              std::string::npos);
    EXPECT_NE(next.failure_location.find("sym5"), std::string::npos);
    EXPECT_EQ(next.failure_location.find("sym6"), std::string::npos);
}

TEST(Augment, TestFailureFeedbackGetsAFreshCiRendering) {
    Prompt previous = flakyfix::testgen::id_prompt();

    IterationRecord record;
    record.index = 1;
    record.outcome = OutcomeKind::TestFailure;

    TrimFixture fx;
    FeedbackContext ctx;
    ctx.current_code = "public void t() {}";
    ctx.fresh_context = fx.bundle;

    Prompt next = augment_with_feedback(previous, record, ctx);
    EXPECT_EQ(next.failure_location, render_failure_location(fx.bundle, previous.category));
    EXPECT_EQ(next.iteration, 2);
}

TEST(Augment, GoldenRendering) {
    EXPECT_EQ(flakyfix::testgen::augmented_compile_prompt().render(),
              read_file(goldens_dir() / "augment_compile_iter2.txt"));
}

TEST(Augment, RejectsUnusableFeedback) {
    Prompt previous = flakyfix::testgen::id_prompt();
    FeedbackContext ctx;
    ctx.current_code = "x";

    IterationRecord passing;
    passing.index = 1;
    passing.outcome = OutcomeKind::TestPass;
    EXPECT_THROW(augment_with_feedback(previous, passing, ctx), Error);

    IterationRecord compile_error;
    compile_error.index = 1;
    compile_error.outcome = OutcomeKind::CompilationError;
    compile_error.diagnostic_key = "k";
    EXPECT_THROW(augment_with_feedback(previous, compile_error, ctx), Error);  // no diagnostics

    IterationRecord test_failure;
    test_failure.index = 1;
    test_failure.outcome = OutcomeKind::TestFailure;
    EXPECT_THROW(augment_with_feedback(previous, test_failure, ctx), Error);  // no fresh context

    FeedbackContext no_code;
    no_code.diagnostics = {{"a.java", 1, DiagnosticKind::Other, "", "boom"}};
    EXPECT_THROW(augment_with_feedback(previous, compile_error, no_code), Error);
}

TEST(Augment, OverflowingAugmentationAborts) {
    Prompt previous = flakyfix::testgen::id_prompt();
    previous.char_budget = static_cast<int>(previous.render().size());

    IterationRecord record;
    record.index = 1;
    record.outcome = OutcomeKind::CompilationError;
    record.diagnostic_key = "k";

    FeedbackContext ctx;
    ctx.current_code = std::string(previous.char_budget, 'x');
    ctx.diagnostics = {{"a.java", 1, DiagnosticKind::Other, "", "boom"}};

    try {
        augment_with_feedback(previous, record, ctx);
        FAIL() << "expected PromptOverflow";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PromptOverflow);
    }
}

}  // namespace
