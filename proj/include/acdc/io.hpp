#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "acdc/vecmath.hpp"

namespace acdc {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
bool files_byte_equal(const std::filesystem::path& a, const std::filesystem::path& b);

// 8-bit ASCII PGM. Pixel values are clamped to [0, 1] and scaled by 255;
// frames rendered on the 1/255 grid round-trip exactly.
void write_pgm(const std::filesystem::path& path, const Vec& frame, int height, int width);
Vec read_pgm(const std::filesystem::path& path, int* height = nullptr, int* width = nullptr);

// locale-independent shortest-exact decimal for doubles ("%.17g")
std::string format_double(double v);

std::uint64_t fnv1a(const std::string& data);
std::string to_hex(std::uint64_t v);

// Advisory single-writer lock for a run directory; the file is created
// exclusively on construction and removed on destruction.
class DirectoryLock {
public:
    explicit DirectoryLock(const std::filesystem::path& dir);
    ~DirectoryLock();
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    std::filesystem::path lock_path_;
};

}  // namespace acdc
