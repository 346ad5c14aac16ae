#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "brimm/errors.hpp"

namespace brimm {

// FNV-1a 64-bit content hash used in run manifests.
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t value) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

// Round-trip double formatting so repeated runs emit identical bytes.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct OutputRecord {
    std::string path;
    std::uint64_t bytes = 0;
    std::string fnv64;
};

// Collects emitted files and their hashes for the run manifest.
class OutputSink {
public:
    explicit OutputSink(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }
    const std::vector<OutputRecord>& records() const { return records_; }

    std::filesystem::path write(const std::string& name, const std::string& content) {
        const auto path = dir_ / name;
        {
            std::ofstream out(path, std::ios::binary);
            require(out.good(), ErrorCode::io_error, "cannot open " + path.string());
            out.write(content.data(), static_cast<std::streamsize>(content.size()));
            require(out.good(), ErrorCode::io_error, "write failed for " + path.string());
        }
        records_.push_back({name, content.size(), hex64(fnv1a64(content))});
        return path;
    }

private:
    std::filesystem::path dir_;
    std::vector<OutputRecord> records_;
};

// Little-endian scalar append for the binary batch format.
template <typename T>
void append_le(std::string& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

} // namespace brimm
