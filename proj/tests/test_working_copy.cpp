#include "flakyfix/runner/working_copy.hpp"

#include <filesystem>

#include <gtest/gtest.h>

#include "support/temp_tree.hpp"

namespace {

namespace fs = std::filesystem;
using flakyfix::Error;
using flakyfix::ErrorCode;
using flakyfix::runner::WorkingCopy;
using flakyfix::testgen::TempTree;
using flakyfix::testgen::snapshot_tree;

TempTree make_project() {
    TempTree tree;
    tree.put("pom.xml", "<project>\n</project>\n");
    tree.put("src/test/java/com/acme/AppTest.java", "class AppTest {}\n");
    tree.put("services/app/pom.xml", "<project>\n  <artifactId>app</artifactId>\n</project>\n");
    tree.put(".git/HEAD", "ref: refs/heads/main\n");
    tree.put("target/classes/App.class", "\xCA\xFE\xBA\xBE junk");
    return tree;
}

TEST(WorkingCopy, ClonesSourcesButSkipsGitAndBuildOutput) {
    TempTree original = make_project();
    auto copy = WorkingCopy::create(original.root());

    EXPECT_EQ(copy.read_text("pom.xml"), "<project>\n</project>\n");
    EXPECT_EQ(copy.read_text("src/test/java/com/acme/AppTest.java"), "class AppTest {}\n");
    EXPECT_TRUE(copy.exists("services/app/pom.xml"));
    EXPECT_FALSE(copy.exists(".git/HEAD"));
    EXPECT_FALSE(copy.exists("target/classes/App.class"));
    copy.discard();
}

TEST(WorkingCopy, NeverPointsAtTheOriginalCheckout) {
    TempTree original = make_project();
    auto copy = WorkingCopy::create(original.root());
    fs::path copy_root = fs::canonical(copy.root());
    fs::path orig_root = fs::canonical(original.root());
    EXPECT_NE(copy_root, orig_root);
    EXPECT_NE(copy_root.string().rfind(orig_root.string() + "/", 0), 0u)
        << "scratch clone nested inside the original";
    copy.discard();
}

TEST(WorkingCopy, OriginalTreeIsByteIdenticalAfterMutations) {
    TempTree original = make_project();
    auto before = snapshot_tree(original.root());

    auto copy = WorkingCopy::create(original.root());
    copy.write_text("pom.xml", "<project><!-- patched --></project>\n");
    copy.write_text("src/test/java/com/acme/New.java", "class New {}\n");
    copy.remove_file("src/test/java/com/acme/AppTest.java");
    copy.discard();

    EXPECT_EQ(snapshot_tree(original.root()), before);
}

TEST(WorkingCopy, TwoCopiesAreIndependent) {
    TempTree original = make_project();
    auto a = WorkingCopy::create(original.root());
    auto b = WorkingCopy::create(original.root());
    EXPECT_NE(a.root(), b.root());
    a.write_text("pom.xml", "A's version");
    EXPECT_EQ(b.read_text("pom.xml"), "<project>\n</project>\n");
    a.discard();
    b.discard();
}

TEST(WorkingCopy, ModuleDirJoinsModulePath) {
    TempTree original = make_project();
    auto root_module = WorkingCopy::create(original.root(), ".");
    EXPECT_EQ(root_module.module_dir(), root_module.root());

    auto nested = WorkingCopy::create(original.root(), "services/app");
    EXPECT_EQ(nested.module_dir(), nested.root() / "services/app");
    EXPECT_TRUE(fs::exists(nested.module_dir() / "pom.xml"));
    root_module.discard();
    nested.discard();
}

TEST(WorkingCopy, DirtyFlagTracksMutation) {
    TempTree original = make_project();
    auto copy = WorkingCopy::create(original.root());
    EXPECT_FALSE(copy.dirty());
    copy.write_text("pom.xml", "x");
    EXPECT_TRUE(copy.dirty());
    copy.discard();
}

TEST(WorkingCopy, ContainsTextToleratesMissingFiles) {
    TempTree original = make_project();
    auto copy = WorkingCopy::create(original.root());
    EXPECT_TRUE(copy.contains_text("pom.xml", "<project>"));
    EXPECT_FALSE(copy.contains_text("pom.xml", "LinkedHashMap"));
    EXPECT_FALSE(copy.contains_text("no/such/File.java", "anything"));
    copy.discard();
}

TEST(WorkingCopy, ReadOfMissingFileRaisesInfra) {
    TempTree original = make_project();
    auto copy = WorkingCopy::create(original.root());
    try {
        copy.read_text("no/such/File.java");
        FAIL() << "expected Infra";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Infra);
    }
    copy.discard();
}

TEST(WorkingCopy, DiscardDeletesTheTreeAndIsIdempotent) {
    TempTree original = make_project();
    auto copy = WorkingCopy::create(original.root());
    fs::path root = copy.root();
    EXPECT_TRUE(fs::exists(root));
    copy.discard();
    EXPECT_FALSE(fs::exists(root));
    copy.discard();  // second call is a no-op
}

TEST(WorkingCopy, RejectsMissingSourceDirectory) {
    try {
        WorkingCopy::create("/no/such/source/dir");
        FAIL() << "expected BadInput";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BadInput);
    }
}

TEST(WorkingCopy, CreatesUnderAnExplicitScratchParent) {
    TempTree original = make_project();
    TempTree scratch;
    auto copy = WorkingCopy::create(original.root(), ".", scratch.root());
    EXPECT_EQ(copy.root().parent_path(), scratch.root());
    copy.discard();
}

}  // namespace
