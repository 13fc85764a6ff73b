#include <gtest/gtest.h>

#include "flakyfix/report.hpp"
#include "support/generators.hpp"

using namespace flakyfix;

namespace {

RepairSession minimal_session(RepairStatus status) {
    RepairSession s;
    s.test_case.test = {"org.example.FooTest", "flaky", "."};
    s.test_case.category = FlakinessCategory::Id;
    s.status = status;
    return s;
}

TEST(ReportRoundTrip, ZeroIterationsNotReproduced) {
    RepairSession s = minimal_session(RepairStatus::NotReproduced);
    EXPECT_EQ(decode_report(encode_report(s)), s);
}

TEST(ReportRoundTrip, FiveIterationsExhausted) {
    RepairSession s = minimal_session(RepairStatus::ExhaustedIterations);
    for (int i = 1; i <= 5; ++i) {
        IterationRecord it;
        it.index = i;
        it.prompt_text = "prompt " + std::to_string(i);
        it.response_text = "response " + std::to_string(i);
        it.outcome = OutcomeKind::TestFailure;
        s.iterations.push_back(it);
    }
    EXPECT_EQ(decode_report(encode_report(s)), s);
}

TEST(ReportRoundTrip, ThousandRandomSessions) {
    for (std::uint32_t seed = 0; seed < 1000; ++seed) {
        testgen::SessionGenerator gen(seed);
        RepairSession s = gen.session();
        std::string doc = encode_report(s);
        RepairSession back = decode_report(doc);
        ASSERT_EQ(back, s) << "round-trip mismatch at seed " << seed << "\n" << doc;
    }
}

TEST(ReportFormat, CarriesSchemaVersion) {
    std::string doc = encode_report(minimal_session(RepairStatus::NotReproduced));
    EXPECT_NE(doc.find("\"schema_version\""), std::string::npos);
    EXPECT_NE(doc.find(kReportSchemaVersion), std::string::npos);
}

TEST(ReportDecode, RejectsNonJson) {
    try {
        decode_report("not json at all");
        FAIL() << "expected decode error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Decode);
    }
}

TEST(ReportDecode, NamesMissingField) {
    try {
        decode_report("{\"schema_version\": \"flakyfix.session/1\"}");
        FAIL() << "expected decode error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Decode);
        EXPECT_NE(std::string(e.what()).find("$.case"), std::string::npos) << e.what();
    }
}

TEST(ReportDecode, RejectsUnknownSchemaVersion) {
    std::string doc = encode_report(minimal_session(RepairStatus::NotReproduced));
    auto pos = doc.find("flakyfix.session/1");
    ASSERT_NE(pos, std::string::npos);
    doc.replace(pos, std::string("flakyfix.session/1").size(), "flakyfix.session/999");
    try {
        decode_report(doc);
        FAIL() << "expected decode error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("schema_version"), std::string::npos) << e.what();
    }
}

TEST(ReportDecode, NamesBadEnumFieldWithPath) {
    RepairSession s = minimal_session(RepairStatus::ProviderError);
    IterationRecord it;
    it.index = 1;
    it.outcome = OutcomeKind::TestFailure;
    s.iterations.push_back(it);
    std::string doc = encode_report(s);
    auto pos = doc.find("TEST_FAILURE");
    ASSERT_NE(pos, std::string::npos);
    doc.replace(pos, std::string("TEST_FAILURE").size(), "TEST_EXPLODED");
    try {
        decode_report(doc);
        FAIL() << "expected decode error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("$.iterations[0].outcome"), std::string::npos)
            << e.what();
    }
}

TEST(ReportDecode, RejectsInvariantViolations) {
    // Hand-build a document whose shape is fine but whose content breaks a
    // session invariant (FIXED without final_patch).
    std::string doc = R"({
      "schema_version": "flakyfix.session/1",
      "case": {
        "test": {"class_fqn": "org.example.FooTest", "method": "m", "module_path": "."},
        "category": "ID", "polluters": [], "co_victims": []
      },
      "status": "FIXED",
      "iterations": [],
      "wall_time_s": 1.0, "llm_tokens_in": 0, "llm_tokens_out": 0
    })";
    try {
        decode_report(doc);
        FAIL() << "expected decode error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Decode);
        EXPECT_NE(std::string(e.what()).find("invariant"), std::string::npos) << e.what();
    }
}

TEST(ReportEncode, RefusesInvalidSession) {
    RepairSession s = minimal_session(RepairStatus::Fixed);  // no patch, no iterations
    EXPECT_THROW(encode_report(s), Error);
}

}  // namespace
