#pragma once

// Shared helpers for the test binaries.

#include "pdt/graph.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace test_support {

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::filesystem::path source_path(const std::string& relative) {
    return std::filesystem::path(PDT_SOURCE_DIR) / relative;
}

inline pdt::Graph demo_graph() {
    auto loaded = pdt::load_graph(read_text(source_path("demo/graph.def")));
    if (!loaded.report.ok()) throw pdt::Error("demo graph does not validate");
    return loaded.graph;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
   public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("pdt-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

   private:
    std::filesystem::path path_;
};

}  // namespace test_support
