#!/usr/bin/env python3
"""Independent WFDB format-212 / MIT annotation decoder.

Written directly from the published format descriptions, with no code shared
with the C++ library: used to produce (and re-check) the reference fixtures
under tests/fixtures/.

Usage:
    reference_decode.py RECORD_DIR RECORD_NAME SIGNAL_OUT.csv ANNOT_OUT.csv [N_SAMPLES]
"""
import sys

SYMBOLS = {
    1: "N", 2: "L", 3: "R", 4: "a", 5: "V", 6: "F", 7: "J", 8: "A", 9: "S",
    10: "E", 11: "j", 12: "/", 13: "Q", 14: "~", 16: "|", 18: "s", 19: "T",
    20: "*", 21: "D", 22: '"', 23: "=", 24: "p", 25: "B", 26: "^", 27: "t",
    28: "+", 29: "u", 30: "?", 31: "!", 32: "[", 33: "]", 34: "e", 35: "n",
    36: "@", 37: "x", 38: "f", 39: "(", 40: ")", 41: "r",
}


def decode_212(raw, n_samples):
    ch0, ch1 = [], []
    for i in range(n_samples):
        b0, b1, b2 = raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]
        s0 = ((b1 & 0x0F) << 8) | b0
        s1 = ((b1 & 0xF0) << 4) | b2
        if s0 >= 2048:
            s0 -= 4096
        if s1 >= 2048:
            s1 -= 4096
        ch0.append(s0)
        ch1.append(s1)
    return ch0, ch1


def decode_annotations(raw):
    events = []
    time = 0
    i = 0
    while i + 2 <= len(raw):
        word = raw[i] | (raw[i + 1] << 8)
        i += 2
        if word == 0:
            return events
        code = word >> 10
        delta = word & 0x3FF
        if code == 59:  # SKIP: 4-byte interval, high word first
            hi = raw[i] | (raw[i + 1] << 8)
            lo = raw[i + 2] | (raw[i + 3] << 8)
            i += 4
            interval = (hi << 16) | lo
            if interval >= 1 << 31:
                interval -= 1 << 32
            time += interval
        elif code in (60, 61, 62):  # NUM / SUB / CHN: value in delta
            pass
        elif code == 63:  # AUX: delta payload bytes, padded to even
            i += delta + (delta & 1)
        elif code == 0:
            time += delta
        else:
            time += delta
            events.append((time, code, SYMBOLS.get(code, "?")))
    raise ValueError("annotation stream has no terminator")


def main():
    record_dir, name, signal_out, annot_out = sys.argv[1:5]
    limit = int(sys.argv[5]) if len(sys.argv) > 5 else None

    header = open(f"{record_dir}/{name}.hea").read().splitlines()
    fields = header[0].split()
    n_signals, n_samples = int(fields[1]), int(fields[3])
    assert n_signals == 2, "expected a two-signal record"

    raw = open(f"{record_dir}/{name}.dat", "rb").read()
    ch0, ch1 = decode_212(raw, n_samples)
    count = min(limit, n_samples) if limit else n_samples
    with open(signal_out, "w") as out:
        out.write("sample,ch0,ch1\n")
        for i in range(count):
            out.write(f"{i},{ch0[i]},{ch1[i]}\n")

    events = decode_annotations(open(f"{record_dir}/{name}.atr", "rb").read())
    with open(annot_out, "w") as out:
        out.write("sample_index,type_code,symbol\n")
        for time, code, symbol in events:
            out.write(f"{time},{code},{symbol}\n")
    print(f"{name}: {n_samples} samples, {len(events)} annotations")


if __name__ == "__main__":
    main()
