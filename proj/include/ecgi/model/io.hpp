#pragma once

#include "ecgi/error.hpp"
#include "ecgi/mat.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace ecgi::model {

// Model file: magic "ECGI", u32 version, u32 kind tag, u64 tensor count,
// then per tensor: u16 name length, name, u64 rows, u64 cols, f64 data
// little-endian. Every parameter lands in 64-bit floats regardless of the
// runtime scalar, so files stay comparable across builds.

inline constexpr std::uint32_t kFormatVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("model file: unexpected end of file");
    return v;
}

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; byte swapping is not implemented");

} // namespace detail

class TensorWriter {
public:
    void add(const std::string& name, const Mat<double>& m) { tensors_.emplace_back(name, m); }

    template <typename T>
    void add(const std::string& name, const Mat<T>& m) {
        Mat<double> d(m.rows(), m.cols());
        for (std::size_t i = 0; i < m.size(); ++i) d.data()[i] = static_cast<double>(m.data()[i]);
        tensors_.emplace_back(name, std::move(d));
    }

    void save(const std::filesystem::path& path, std::uint32_t kind_tag) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write model file " + path.string());
        out.write("ECGI", 4);
        detail::write_pod(out, kFormatVersion);
        detail::write_pod(out, kind_tag);
        detail::write_pod(out, static_cast<std::uint64_t>(tensors_.size()));
        for (const auto& [name, m] : tensors_) {
            detail::write_pod(out, static_cast<std::uint16_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            detail::write_pod(out, static_cast<std::uint64_t>(m.rows()));
            detail::write_pod(out, static_cast<std::uint64_t>(m.cols()));
            out.write(reinterpret_cast<const char*>(m.data()),
                      static_cast<std::streamsize>(m.size() * sizeof(double)));
        }
        if (!out) throw IoError("model file write failed: " + path.string());
    }

private:
    std::vector<std::pair<std::string, Mat<double>>> tensors_;
};

struct TensorFile {
    std::uint32_t kind_tag = 0;
    std::map<std::string, Mat<double>> tensors;

    const Mat<double>& get(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw SchemaError("model file: missing tensor " + name);
        return it->second;
    }

    template <typename T>
    void fill(const std::string& name, Mat<T>& dst) const {
        const auto& src = get(name);
        if (src.rows() != dst.rows() || src.cols() != dst.cols())
            throw SchemaError("model file: tensor " + name + " has wrong shape");
        for (std::size_t i = 0; i < src.size(); ++i)
            dst.data()[i] = static_cast<T>(src.data()[i]);
    }
};

inline TensorFile load_tensor_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open model file " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ECGI", 4) != 0)
        throw SchemaError("model file: bad magic in " + path.string());
    const auto version = detail::read_pod<std::uint32_t>(in);
    if (version != kFormatVersion)
        throw SchemaError("model file: unsupported version " + std::to_string(version));
    TensorFile file;
    file.kind_tag = detail::read_pod<std::uint32_t>(in);
    const auto count = detail::read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = detail::read_pod<std::uint16_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rows = detail::read_pod<std::uint64_t>(in);
        const auto cols = detail::read_pod<std::uint64_t>(in);
        Mat<double> m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!in) throw IoError("model file: truncated tensor " + name);
        file.tensors.emplace(std::move(name), std::move(m));
    }
    return file;
}

} // namespace ecgi::model
