#pragma once

#include "ecgi/error.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace ecgi::wfdb {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct SignalSpec {
    std::string file_name;
    int format_code = 0;
    double gain = 200.0;   // ADC units per mV
    int baseline = 0;      // ADC value of 0 mV
    int initial_value = 0; // first sample, used by checksum-style tooling
    std::string description;
};

struct RecordHeader {
    std::string record_name;
    int n_signals = 0;
    double sampling_frequency = 0.0;
    std::int64_t n_samples = 0;
    std::vector<SignalSpec> signals;
};

struct AnnotationEvent {
    std::int64_t sample_index = 0;
    int type_code = 0;
    char symbol = '?';
};

// Two-channel signal kept in raw ADC units; conversion to mV is never needed
// because every extracted beat is z-scored downstream.
struct EcgRecord {
    RecordHeader header;
    std::array<std::vector<std::int16_t>, 2> signal;
    std::vector<AnnotationEvent> annotations;

    std::int64_t n_samples() const { return header.n_samples; }
};

// ---------------------------------------------------------------------------
// MIT annotation code table (codes 1..49; 50..58 reserved; 59..63 pseudo).
// ---------------------------------------------------------------------------

inline constexpr int kSkip = 59;
inline constexpr int kNum = 60;
inline constexpr int kSub = 61;
inline constexpr int kChn = 62;
inline constexpr int kAux = 63;

inline char symbol_for_code(int code) {
    static constexpr char table[50] = {
        ' ', 'N', 'L', 'R', 'a', 'V', 'F', 'J', 'A', 'S',    // 0..9
        'E', 'j', '/', 'Q', '~', '?', '|', '?', 's', 'T',    // 10..19
        '*', 'D', '"', '=', 'p', 'B', '^', 't', '+', 'u',    // 20..29
        '?', '!', '[', ']', 'e', 'n', '@', 'x', 'f', '(',    // 30..39
        ')', 'r', '?', '?', '?', '?', '?', '?', '?', '?'};   // 40..49
    if (code < 1 || code > 49) return '?';
    return table[code];
}

inline int code_for_symbol(char symbol) {
    for (int c = 1; c <= 49; ++c)
        if (symbol_for_code(c) == symbol && symbol != '?') return c;
    return 0;
}

// ---------------------------------------------------------------------------
// Parsers
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> tokens(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.emplace_back(line.substr(start, i - start));
    }
    return out;
}

// Leading numeric prefix; header fields carry suffixes like "212x2",
// "360/360", "200(1024)/mV" that do not matter here.
inline double leading_number(const std::string& tok, const char* what) {
    std::size_t i = 0;
    if (i < tok.size() && (tok[i] == '-' || tok[i] == '+')) ++i;
    std::size_t digits = i;
    while (i < tok.size() && (std::isdigit(static_cast<unsigned char>(tok[i])) || tok[i] == '.')) ++i;
    if (i == digits) throw MalformedHeader(std::string("header: non-numeric ") + what + ": '" + tok + "'");
    return std::stod(tok.substr(0, i));
}

inline std::int64_t sign_extend_12bit(int v) {
    return (v & 0x800) ? v - 4096 : v;
}

} // namespace detail

inline RecordHeader parse_header(std::string_view text) {
    std::vector<std::string> lines;
    {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string_view::npos) eol = text.size();
            std::string_view line = text.substr(pos, eol - pos);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            pos = eol + 1;
            if (line.empty() || line[0] == '#') continue;
            lines.emplace_back(line);
        }
    }
    if (lines.empty()) throw MalformedHeader("header: empty");

    auto first = detail::tokens(lines[0]);
    if (first.size() < 4) throw MalformedHeader("header: record line needs name, signals, fs, samples");

    RecordHeader hdr;
    // Record name may carry a segment count suffix ("100/2"); keep the stem.
    hdr.record_name = first[0].substr(0, first[0].find('/'));
    hdr.n_signals = static_cast<int>(detail::leading_number(first[1], "signal count"));
    hdr.sampling_frequency = detail::leading_number(first[2], "sampling frequency");
    hdr.n_samples = static_cast<std::int64_t>(detail::leading_number(first[3], "sample count"));
    if (hdr.n_signals <= 0) throw MalformedHeader("header: signal count must be positive");
    if (hdr.sampling_frequency <= 0) throw MalformedHeader("header: sampling frequency must be positive");
    if (hdr.n_samples <= 0) throw MalformedHeader("header: sample count must be positive");
    if (static_cast<std::size_t>(hdr.n_signals) + 1 > lines.size())
        throw MalformedHeader("header: missing signal lines");

    for (int s = 0; s < hdr.n_signals; ++s) {
        auto tok = detail::tokens(lines[1 + s]);
        if (tok.size() < 3) throw MalformedHeader("header: signal line needs file, format, gain");
        SignalSpec spec;
        spec.file_name = tok[0];
        spec.format_code = static_cast<int>(detail::leading_number(tok[1], "format"));
        if (spec.format_code != 212)
            throw UnsupportedFormat("header: only format 212 is supported, got " +
                                    std::to_string(spec.format_code));
        spec.gain = detail::leading_number(tok[2], "gain");
        if (spec.gain == 0) spec.gain = 200.0; // WFDB default
        // gain token may embed the baseline: "200(1024)/mV"
        bool baseline_from_gain = false;
        if (auto paren = tok[2].find('('); paren != std::string::npos) {
            auto close = tok[2].find(')', paren);
            if (close == std::string::npos) throw MalformedHeader("header: unbalanced baseline parens");
            spec.baseline = static_cast<int>(
                detail::leading_number(tok[2].substr(paren + 1, close - paren - 1), "baseline"));
            baseline_from_gain = true;
        }
        // tok[3]=adc resolution, tok[4]=adc zero, tok[5]=initial value
        if (!baseline_from_gain && tok.size() > 4)
            spec.baseline = static_cast<int>(detail::leading_number(tok[4], "adc zero"));
        if (tok.size() > 5)
            spec.initial_value = static_cast<int>(detail::leading_number(tok[5], "initial value"));
        if (tok.size() > 8) spec.description = tok.back();
        hdr.signals.push_back(std::move(spec));
    }
    return hdr;
}

// Format 212: each 3-byte group packs two 12-bit two's-complement samples,
//   s1 = ((b1 & 0x0F) << 8) | b0
//   s2 = ((b1 & 0xF0) << 4) | b2
// For a two-signal record one group is one frame: (channel 0, channel 1).
inline std::array<std::vector<std::int16_t>, 2> decode_format212(
    const std::vector<std::uint8_t>& bytes, std::int64_t n_samples) {
    const std::size_t needed = static_cast<std::size_t>(n_samples) * 3;
    if (bytes.size() < needed)
        throw TruncatedSignal("format 212: need " + std::to_string(needed) + " bytes, have " +
                              std::to_string(bytes.size()));
    std::array<std::vector<std::int16_t>, 2> out;
    out[0].resize(static_cast<std::size_t>(n_samples));
    out[1].resize(static_cast<std::size_t>(n_samples));
    const std::uint8_t* p = bytes.data();
    for (std::int64_t i = 0; i < n_samples; ++i, p += 3) {
        const int s1 = ((p[1] & 0x0F) << 8) | p[0];
        const int s2 = ((p[1] & 0xF0) << 4) | p[2];
        out[0][static_cast<std::size_t>(i)] = static_cast<std::int16_t>(detail::sign_extend_12bit(s1));
        out[1][static_cast<std::size_t>(i)] = static_cast<std::int16_t>(detail::sign_extend_12bit(s2));
    }
    return out;
}

// MIT annotation stream: little-endian 16-bit words, code = word >> 10,
// time delta = word & 0x3FF. A full zero word terminates. Pseudo-codes:
// SKIP carries a 4-byte interval (high word first), NUM/SUB/CHN carry their
// value in the delta field, AUX is followed by `delta` payload bytes plus a
// pad byte when odd. Pseudo-annotations advance state but emit no event.
inline std::vector<AnnotationEvent> parse_annotations(const std::vector<std::uint8_t>& bytes) {
    std::vector<AnnotationEvent> events;
    std::size_t i = 0;
    std::int64_t time = 0;
    bool terminated = false;
    while (i + 2 <= bytes.size()) {
        const unsigned word = bytes[i] | (static_cast<unsigned>(bytes[i + 1]) << 8);
        i += 2;
        if (word == 0) {
            terminated = true;
            break;
        }
        const int code = static_cast<int>(word >> 10);
        const std::int64_t delta = static_cast<std::int64_t>(word & 0x3FF);
        if (code > 63) throw UnknownCode("annotation: code " + std::to_string(code));
        switch (code) {
            case kSkip: {
                if (i + 4 > bytes.size()) throw TruncatedAnnotations("annotation: SKIP payload cut off");
                const std::uint32_t hi = bytes[i] | (static_cast<std::uint32_t>(bytes[i + 1]) << 8);
                const std::uint32_t lo = bytes[i + 2] | (static_cast<std::uint32_t>(bytes[i + 3]) << 8);
                i += 4;
                time += static_cast<std::int32_t>((hi << 16) | lo);
                break;
            }
            case kNum:
            case kSub:
            case kChn:
                break; // value lives in the delta field; no payload, no event
            case kAux: {
                const std::size_t len = static_cast<std::size_t>(delta) + (delta & 1);
                if (i + len > bytes.size()) throw TruncatedAnnotations("annotation: AUX payload cut off");
                i += len;
                break;
            }
            case 0:
                time += delta; // NOTQRS with a nonzero delta: advance, no event
                break;
            default:
                time += delta;
                events.push_back({time, code, symbol_for_code(code)});
                break;
        }
    }
    if (!terminated) throw TruncatedAnnotations("annotation: missing terminator word");
    return events;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

// Loads <dir>/<name>.{hea,dat,atr} into a validated EcgRecord.
inline EcgRecord load_record(const std::filesystem::path& dir, const std::string& name) {
    const auto hea = dir / (name + ".hea");
    std::ifstream hin(hea);
    if (!hin) throw MissingFile("cannot open " + hea.string());
    std::stringstream ss;
    ss << hin.rdbuf();

    EcgRecord rec;
    rec.header = parse_header(ss.str());
    if (rec.header.n_signals != 2)
        throw UnsupportedFormat("record " + name + ": expected 2 signals, got " +
                                std::to_string(rec.header.n_signals));

    rec.signal = decode_format212(read_file_bytes(dir / (name + ".dat")), rec.header.n_samples);
    rec.annotations = parse_annotations(read_file_bytes(dir / (name + ".atr")));

    std::int64_t prev = -1;
    for (const auto& ev : rec.annotations) {
        if (ev.sample_index < prev)
            throw InvariantViolation("record " + name + ": annotation times decrease");
        if (ev.sample_index < 0 || ev.sample_index >= rec.header.n_samples)
            throw InvariantViolation("record " + name + ": annotation at sample " +
                                     std::to_string(ev.sample_index) + " outside signal");
        prev = ev.sample_index;
    }
    return rec;
}

} // namespace ecgi::wfdb
