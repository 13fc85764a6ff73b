#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "flakyfix/errors.hpp"

namespace flakyfix::runner {

/// A scratch clone of the project under repair. Every compile, run, patch, and
/// stitch happens here; the user's checkout is never touched. One mutator at a
/// time per copy — parallel sessions each get their own clone.
class WorkingCopy {
  public:
    /// Clones `original_root` into a fresh directory under `scratch_parent`
    /// (system temp dir when empty). `.git` history and `target` build output
    /// are skipped: neither affects compilation and both dominate copy time.
    static WorkingCopy create(const std::filesystem::path& original_root,
                              std::string module_path = ".",
                              const std::filesystem::path& scratch_parent = {}) {
        namespace fs = std::filesystem;
        if (!fs::is_directory(original_root))
            fail(ErrorCode::BadInput,
                 "working copy source is not a directory: " + original_root.string());
        fs::path parent = scratch_parent.empty() ? fs::temp_directory_path() : scratch_parent;
        fs::create_directories(parent);

        std::mt19937_64 rng{std::random_device{}()};
        fs::path root;
        for (int attempt = 0; attempt < 16; ++attempt) {
            std::ostringstream name;
            name << "flakyfix-" << std::hex << rng();
            fs::path candidate = parent / name.str();
            if (fs::create_directory(candidate)) {
                root = candidate;
                break;
            }
        }
        if (root.empty()) fail(ErrorCode::Infra, "could not allocate scratch directory");

        clone_tree(fs::canonical(original_root), root);
        WorkingCopy copy;
        copy.root_ = root;
        copy.module_path_ = std::move(module_path);
        return copy;
    }

    const std::filesystem::path& root() const { return root_; }
    const std::string& module_path() const { return module_path_; }

    std::filesystem::path module_dir() const {
        return module_path_.empty() || module_path_ == "." ? root_ : root_ / module_path_;
    }

    bool dirty() const { return dirty_; }
    void mark_dirty() { dirty_ = true; }

    bool exists(const std::string& relative) const {
        return std::filesystem::exists(root_ / relative);
    }

    std::string read_text(const std::string& relative) const {
        std::ifstream in(root_ / relative, std::ios::binary);
        if (!in) fail(ErrorCode::Infra, "working copy read failed: " + relative);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }

    void write_text(const std::string& relative, const std::string& content) {
        namespace fs = std::filesystem;
        fs::path target = root_ / relative;
        fs::create_directories(target.parent_path());
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Infra, "working copy write failed: " + relative);
        out << content;
        dirty_ = true;
    }

    void remove_file(const std::string& relative) {
        std::filesystem::remove(root_ / relative);
        dirty_ = true;
    }

    bool contains_text(const std::string& relative, const std::string& needle) const {
        if (!exists(relative)) return false;
        return read_text(relative).find(needle) != std::string::npos;
    }

    /// Deletes the whole scratch tree. Safe to call twice.
    void discard() {
        if (!root_.empty()) std::filesystem::remove_all(root_);
        root_.clear();
    }

  private:
    static void clone_tree(const std::filesystem::path& from, const std::filesystem::path& to) {
        namespace fs = std::filesystem;
        for (const auto& entry : fs::directory_iterator(from)) {
            const std::string name = entry.path().filename().string();
            if (entry.is_directory()) {
                if (name == ".git" || name == "target") continue;
                fs::create_directory(to / name);
                clone_tree(entry.path(), to / name);
            } else if (entry.is_regular_file()) {
                fs::copy_file(entry.path(), to / name);
            }
        }
    }

    std::filesystem::path root_;
    std::string module_path_;
    bool dirty_ = false;
};

}  // namespace flakyfix::runner
