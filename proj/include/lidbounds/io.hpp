#pragma once

// Dataset readers: MNIST IDX pairs, CIFAR-10 binary batches, headerless CSV.
// Features are scaled to [0, 1] for the image formats.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lidbounds/dataset.hpp"
#include "lidbounds/error.hpp"

namespace lidbounds {

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "cannot open '" + path.string() + "'");
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::uint32_t read_be_u32(std::span<const std::uint8_t> bytes, std::size_t offset,
                                 const std::string& field) {
    if (bytes.size() < offset + 4) fail(Errc::format, "truncated header: missing " + field);
    return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
           (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

} // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarPixels = 3072;

inline Dataset load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto img = detail::read_file(images_path);
    const auto lab = detail::read_file(labels_path);

    const auto magic = detail::read_be_u32(img, 0, "images magic");
    if (magic != kIdxImagesMagic) fail(Errc::format, "images magic is " + std::to_string(magic) + ", expected 2051");
    const auto count = detail::read_be_u32(img, 4, "image count");
    const auto rows = detail::read_be_u32(img, 8, "image rows");
    const auto cols = detail::read_be_u32(img, 12, "image cols");

    const auto lmagic = detail::read_be_u32(lab, 0, "labels magic");
    if (lmagic != kIdxLabelsMagic) fail(Errc::format, "labels magic is " + std::to_string(lmagic) + ", expected 2049");
    const auto lcount = detail::read_be_u32(lab, 4, "label count");

    if (count == 0) fail(Errc::format, "image count is 0");
    if (rows == 0 || cols == 0) fail(Errc::format, "image rows/cols must be positive");
    if (lcount != count)
        fail(Errc::format, "label count " + std::to_string(lcount) + " does not match image count " +
                               std::to_string(count));

    const std::size_t d = std::size_t(rows) * cols;
    const std::size_t n = count;
    if (img.size() != 16 + n * d) fail(Errc::format, "pixel data length does not match image count x rows x cols");
    if (lab.size() != 8 + n) fail(Errc::format, "label data length does not match label count");

    std::vector<double> values(n * d);
    for (std::size_t i = 0; i < n * d; ++i) values[i] = img[16 + i] / 255.0;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = lab[8 + i];
    return Dataset(std::move(values), n, d, std::move(labels), "mnist");
}

inline Dataset load_cifar10(std::span<const std::filesystem::path> batch_paths) {
    require(!batch_paths.empty(), "at least one CIFAR-10 batch file is required");
    std::vector<double> values;
    std::vector<int> labels;
    for (const auto& path : batch_paths) {
        const auto bytes = detail::read_file(path);
        if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0)
            fail(Errc::format, "'" + path.string() + "' length " + std::to_string(bytes.size()) +
                                   " is not a positive multiple of 3073");
        const std::size_t records = bytes.size() / kCifarRecordBytes;
        values.reserve(values.size() + records * kCifarPixels);
        for (std::size_t r = 0; r < records; ++r) {
            const auto* rec = bytes.data() + r * kCifarRecordBytes;
            labels.push_back(rec[0]);
            for (std::size_t p = 0; p < kCifarPixels; ++p) values.push_back(rec[1 + p] / 255.0);
        }
    }
    const std::size_t n = labels.size();
    return Dataset(std::move(values), n, kCifarPixels, std::move(labels), "cifar10");
}

/// Headerless comma-separated rows; with `trailing_label` the last column is
/// an integer class id.
inline Dataset load_csv(const std::filesystem::path& path, bool trailing_label) {
    std::ifstream in(path);
    if (!in) fail(Errc::io, "cannot open '" + path.string() + "'");

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t d = 0;
    std::size_t n = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> fields;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            auto tok = rest.substr(0, comma);
            while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
            while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || ptr != tok.data() + tok.size())
                fail(Errc::format, "line " + std::to_string(line_no) + ": cannot parse '" + std::string(tok) + "'");
            fields.push_back(v);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (trailing_label) {
            if (fields.size() < 2) fail(Errc::format, "line " + std::to_string(line_no) + ": need features and a label");
            const double l = fields.back();
            fields.pop_back();
            if (l < 0 || l != std::floor(l))
                fail(Errc::format, "line " + std::to_string(line_no) + ": label is not a nonnegative integer");
            labels.push_back(static_cast<int>(l));
        }
        if (n == 0) d = fields.size();
        if (fields.size() != d)
            fail(Errc::format, "line " + std::to_string(line_no) + ": expected " + std::to_string(d) + " features");
        for (double v : fields)
            if (!std::isfinite(v)) fail(Errc::format, "line " + std::to_string(line_no) + ": non-finite feature");
        values.insert(values.end(), fields.begin(), fields.end());
        ++n;
    }
    if (n == 0) fail(Errc::format, "'" + path.string() + "' contains no rows");
    std::optional<std::vector<int>> opt_labels;
    if (trailing_label) opt_labels = std::move(labels);
    return Dataset(std::move(values), n, d, std::move(opt_labels), path.stem().string());
}

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline void write_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(Errc::io, "cannot write '" + path.string() + "'");
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = data.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j) out << ',';
            out << format_double(r[j]);
        }
        if (data.has_labels()) out << ',' << data.label(i);
        out << '\n';
    }
    if (!out) fail(Errc::io, "write to '" + path.string() + "' failed");
}

} // namespace lidbounds
