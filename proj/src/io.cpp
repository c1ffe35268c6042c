#include "acdc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace acdc {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << content;
}

bool files_byte_equal(const fs::path& a, const fs::path& b) {
    return read_text_file(a) == read_text_file(b);
}

void write_pgm(const fs::path& path, const Vec& frame, int height, int width) {
    require(static_cast<int>(frame.size()) == height * width, "write_pgm: size mismatch");
    std::ostringstream out;
    out << "P2\n" << width << ' ' << height << "\n255\n";
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double v = std::clamp(frame[r * width + c], 0.0, 1.0);
            out << static_cast<int>(std::lround(v * 255.0)) << (c + 1 == width ? '\n' : ' ');
        }
    }
    write_text_file(path, out.str());
}

Vec read_pgm(const fs::path& path, int* height, int* width) {
    std::istringstream in(read_text_file(path));
    std::string magic;
    in >> magic;
    if (magic != "P2") throw std::runtime_error("unsupported PGM format in " + path.string());
    int w, h, maxval;
    in >> w >> h >> maxval;
    if (maxval != 255) throw std::runtime_error("unexpected PGM depth in " + path.string());
    Vec frame(static_cast<std::size_t>(w) * h);
    for (auto& v : frame) {
        int pix;
        in >> pix;
        v = static_cast<double>(pix) / 255.0;
    }
    if (!in) throw std::runtime_error("truncated PGM: " + path.string());
    if (height) *height = h;
    if (width) *width = w;
    return frame;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

DirectoryLock::DirectoryLock(const fs::path& dir) : lock_path_(dir / "lock") {
    fs::create_directories(dir);
    std::FILE* f = std::fopen(lock_path_.c_str(), "wx");
    if (!f)
        throw std::runtime_error("run directory is locked by another command: " +
                                 lock_path_.string());
    std::fclose(f);
}

DirectoryLock::~DirectoryLock() {
    std::error_code ec;
    fs::remove(lock_path_, ec);
}

}  // namespace acdc
