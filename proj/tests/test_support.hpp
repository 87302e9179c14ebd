#pragma once

// Writers for the binary dataset formats and a scratch directory, used to
// build fixtures byte by byte.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace lidbounds::testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("lidbounds_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void put_be_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<std::uint8_t> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                            const std::vector<std::uint8_t>& pixels,
                                            std::uint32_t magic = 0x00000803) {
    std::vector<std::uint8_t> out;
    put_be_u32(out, magic);
    put_be_u32(out, count);
    put_be_u32(out, rows);
    put_be_u32(out, cols);
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

inline std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels, std::uint32_t magic = 0x00000801) {
    std::vector<std::uint8_t> out;
    put_be_u32(out, magic);
    put_be_u32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

/// One 3073-byte record per label: label byte then 3072 pixels.
inline std::vector<std::uint8_t> cifar_records(const std::vector<std::uint8_t>& labels,
                                               const std::vector<std::uint8_t>& pixels) {
    std::vector<std::uint8_t> out;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        out.push_back(labels[r]);
        out.insert(out.end(), pixels.begin() + static_cast<std::ptrdiff_t>(r * 3072),
                   pixels.begin() + static_cast<std::ptrdiff_t>((r + 1) * 3072));
    }
    return out;
}

inline std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng() & 0xff);
    return out;
}

} // namespace lidbounds::testing
