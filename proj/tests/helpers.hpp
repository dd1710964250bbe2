#pragma once

#include <filesystem>
#include <random>
#include <string>

// Shared test scaffolding: a throwaway directory per test case.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& stem) {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        path = base / (stem + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::string file(const std::string& name) const { return (path / name).string(); }
    std::string str() const { return path.string(); }
};
