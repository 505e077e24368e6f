#pragma once

#include "ecgi/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace ecgi::csv {

// Shortest round-trip decimal form; reading it back yields the same bits,
// and the text is byte-stable across runs.
inline std::string format(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

inline std::string format(long long v) { return std::to_string(v); }
inline std::string format(int v) { return std::to_string(v); }
inline std::string format(std::size_t v) { return std::to_string(v); }
inline std::string format(const std::string& v) { return v; }
inline std::string format(const char* v) { return v; }

inline double parse_double(std::string_view field) {
    double v = 0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size())
        throw SchemaError("csv: not a number: '" + std::string(field) + "'");
    return v;
}

inline long long parse_int(std::string_view field) {
    long long v = 0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size())
        throw SchemaError("csv: not an integer: '" + std::string(field) + "'");
    return v;
}

// Buffered row-at-a-time writer. No quoting: none of our fields contain
// commas or newlines.
class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw IoError("csv: cannot open for writing: " + path);
        buf_.reserve(1 << 16);
    }

    template <typename... Fields>
    void row(const Fields&... fields) {
        bool first = true;
        auto append = [&](const auto& f) {
            if (!first) buf_ += ',';
            first = false;
            buf_ += format(f);
        };
        (append(fields), ...);
        buf_ += '\n';
        if (buf_.size() > (1 << 15)) flush_buf();
    }

    void raw_row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) buf_ += ',';
            buf_ += fields[i];
        }
        buf_ += '\n';
        if (buf_.size() > (1 << 15)) flush_buf();
    }

    void close() {
        flush_buf();
        out_.close();
        if (!out_) throw IoError("csv: write failed");
    }

    ~Writer() {
        try {
            if (out_.is_open()) close();
        } catch (...) {
        }
    }

private:
    void flush_buf() {
        out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        buf_.clear();
    }

    std::ofstream out_;
    std::string buf_;
};

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

// Loads a whole file and walks it line by line (files here are written by us,
// so a plain '\n' split with optional trailing '\r' is enough).
class Reader {
public:
    explicit Reader(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("csv: cannot open: " + path);
        content_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    bool next(std::vector<std::string_view>& fields) {
        if (pos_ >= content_.size()) return false;
        std::size_t eol = content_.find('\n', pos_);
        if (eol == std::string::npos) eol = content_.size();
        std::string_view line(content_.data() + pos_, eol - pos_);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos_ = eol + 1;
        fields = split(line);
        return true;
    }

private:
    std::string content_;
    std::size_t pos_ = 0;
};

} // namespace ecgi::csv
