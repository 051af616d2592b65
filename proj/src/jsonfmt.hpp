#pragma once

// Internal helpers for the interchange writers. Files are emitted by hand so
// that doubles carry exactly 17 significant digits and output bytes are a
// pure function of the data.

#include <cstdio>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "../vendor/json.hpp"
#include "ovmix/error.hpp"

namespace ovmix::detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_json_string(const std::string& s) {
    return nlohmann::json(s).dump();
}

inline void append_double_array(std::string& out, const Eigen::VectorXd& v) {
    out += '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt_double(v[i]);
    }
    out += ']';
}

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) {
        throw IoError("cannot open for writing: " + path.string());
    }
    const std::size_t n = std::fwrite(body.data(), 1, body.size(), f);
    const int rc = std::fclose(f);
    if (n != body.size() || rc != 0) {
        throw IoError("short write: " + path.string());
    }
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f) {
        throw IoError("cannot open: " + path.string());
    }
    std::string body;
    char buf[1 << 16];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) {
        body.append(buf, n);
    }
    std::fclose(f);
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) {
        throw SchemaError("not valid JSON: " + path.string());
    }
    return j;
}

}  // namespace ovmix::detail
