// Copyright 2026 The cryoctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cryoctl/memory_image.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "cryoctl/error.hpp"
#include "cryoctl/io.hpp"

namespace cryoctl {

std::size_t MemoryImage::instruction_count() const {
    std::size_t n = 0;
    for (const auto& l : lists) {
        n += l.size();
    }
    return n;
}

void validate(const MemoryImage& image) {
    std::vector<std::string> problems;
    if (image.amp_bits < 2 || image.amp_bits > 24) {
        problems.push_back("amp_bits " + std::to_string(image.amp_bits) + " out of range");
    }
    if (image.phase_mod_bits < 1 || image.phase_mod_bits > kPhaseBits) {
        problems.push_back("phase_mod_bits " + std::to_string(image.phase_mod_bits) + " out of range");
    }
    for (std::size_t b = 0; b < kBanks; ++b) {
        for (std::size_t k = 0; k < kNcosPerBank; ++k) {
            const auto& nco = image.ncos[b][k];
            if (nco.ftw > kPhaseMask || nco.ref_phase > kPhaseMask) {
                problems.push_back("NCO b" + std::to_string(b) + ".n" + std::to_string(k) + " word exceeds 22 bits");
            }
            for (const auto& ins : image.tables[b].slots(k)) {
                if (ins.phase_update && *ins.phase_update > kPhaseMask) {
                    problems.push_back("phase update exceeds 22 bits on b" + std::to_string(b) + ".n" +
                                       std::to_string(k));
                }
                if (ins.range) {
                    if (ins.range->start > ins.range->stop) {
                        problems.push_back("envelope range " + std::to_string(ins.range->start) + ".." +
                                           std::to_string(ins.range->stop) + " is reversed");
                    } else if (ins.range->stop >= image.envelope.size()) {
                        problems.push_back("envelope address " + std::to_string(ins.range->stop) +
                                           " out of bounds (memory holds " + std::to_string(image.envelope.size()) +
                                           " points)");
                    }
                }
                if (!ins.range && !ins.phase_update) {
                    problems.push_back("empty instruction on b" + std::to_string(b) + ".n" + std::to_string(k));
                }
            }
        }
    }
    for (std::size_t li = 0; li < image.lists.size(); ++li) {
        const auto& list = image.lists[li];
        if (list.size() > kListCapacity) {
            problems.push_back("list " + std::to_string(li) + " longer than " + std::to_string(kListCapacity));
        }
        std::array<bool, kBanks> busy{};
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& ref = list[i];
            const std::string where = "list " + std::to_string(li) + " entry " + std::to_string(i);
            if (ref.bank >= kBanks || ref.nco >= kNcosPerBank) {
                problems.push_back(where + ": bank/NCO index out of range");
                continue;
            }
            if (ref.slot >= image.tables[ref.bank].size(ref.nco)) {
                problems.push_back(where + ": dangling table slot b" + std::to_string(ref.bank) + ".n" +
                                   std::to_string(ref.nco) + ".s" + std::to_string(ref.slot));
            }
            if (ref.concurrent) {
                if (i == 0) {
                    problems.push_back(where + ": first entry cannot be concurrent");
                } else if (busy[ref.bank]) {
                    problems.push_back(where + ": two concurrent entries on bank " + std::to_string(ref.bank));
                }
            } else {
                busy = {};
            }
            busy[ref.bank] = true;
        }
    }
    if (!problems.empty()) {
        std::string msg = "invalid memory image:";
        for (const auto& p : problems) {
            msg += "\n  - " + p;
        }
        throw ValidationError(msg);
    }
}

// ---------------------------------------------------------------------------
// Execution

Transmitter::Transmitter(TxConfig cfg) : cfg_(std::move(cfg)), pac_((cfg_.validate(), cfg_)) {}

void Transmitter::load(const MemoryImage& image) {
    validate(image);
    if (image.amp_bits != cfg_.amp_bits || image.phase_mod_bits != cfg_.phase_mod_bits) {
        throw ValidationError("image was built for amp_bits=" + std::to_string(image.amp_bits) +
                              ", phase_mod_bits=" + std::to_string(image.phase_mod_bits) +
                              " but the transmitter uses amp_bits=" + std::to_string(cfg_.amp_bits) +
                              ", phase_mod_bits=" + std::to_string(cfg_.phase_mod_bits));
    }
    owned_ = image;
    image_ = &owned_;
    reset();
}

void Transmitter::reset() {
    for (std::size_t b = 0; b < kBanks; ++b) {
        for (std::size_t k = 0; k < kNcosPerBank; ++k) {
            NcoState s;
            if (image_) {
                s.ftw = image_->ncos[b][k].ftw;
                s.ref_phase = image_->ncos[b][k].ref_phase;
            }
            ncos_[b][k] = s;
            synced_[b][k] = 0;
        }
    }
    list_index_ = 0;
    clock_ = 0;
}

void Transmitter::advance_to(std::size_t bank, std::size_t index, std::uint64_t sample) {
    // Closed-form catch-up: the accumulator has been stepping every clock
    // since reset whether or not the NCO was producing output.
    NcoState& nco = ncos_[bank][index];
    std::uint64_t& done = synced_[bank][index];
    if (sample > done) {
        const std::uint64_t steps = (sample - done) & kPhaseMask;
        nco.phase_acc = static_cast<std::uint32_t>((nco.phase_acc + steps * nco.ftw) & kPhaseMask);
        done = sample;
    }
}

BasebandWaveform Transmitter::execute_trigger() {
    if (!image_) {
        throw ValidationError("no memory image loaded");
    }
    BasebandWaveform out;
    out.sample_rate = cfg_.f_clk;
    out.start_time = static_cast<double>(clock_) / cfg_.f_clk;
    out.dac_bits = cfg_.dac_bits;
    if (list_index_ >= image_->lists.size()) {
        return out;
    }
    const auto& list = image_->lists[list_index_];
    const std::int64_t rail_hi = (std::int64_t{1} << (cfg_.dac_bits - 1)) - 1;
    const std::int64_t rail_lo = -(std::int64_t{1} << (cfg_.dac_bits - 1));

    std::size_t i = 0;
    while (i < list.size()) {
        // A group is one entry plus the concurrent entries that follow it.
        std::size_t j = i + 1;
        while (j < list.size() && list[j].concurrent) {
            ++j;
        }
        std::size_t duration = 0;
        for (std::size_t g = i; g < j; ++g) {
            const auto& ref = list[g];
            const auto& ins = image_->tables[ref.bank].at(ref.nco, ref.slot);
            duration = std::max(duration, ins.duration());
        }
        const std::size_t base = out.size();
        out.i_samples.resize(base + duration, 0);
        out.q_samples.resize(base + duration, 0);
        std::vector<std::int64_t> acc_i(duration, 0);
        std::vector<std::int64_t> acc_q(duration, 0);
        for (std::size_t g = i; g < j; ++g) {
            const auto& ref = list[g];
            const auto& ins = image_->tables[ref.bank].at(ref.nco, ref.slot);
            NcoState& nco = ncos_[ref.bank][ref.nco];
            if (ins.phase_update) {
                nco.ref_phase = (nco.ref_phase + *ins.phase_update) & kPhaseMask;
            }
            if (!ins.range) {
                continue;
            }
            nco.active = true;
            advance_to(ref.bank, ref.nco, clock_);
            const auto& mem = image_->envelope;
            for (std::size_t n = 0; n < ins.range->length(); ++n) {
                const std::uint32_t phase = nco_step(nco);
                const auto [si, sq] = pac_.convert(phase, mem[ins.range->start + n]);
                acc_i[n] += si;
                acc_q[n] += sq;
            }
            synced_[ref.bank][ref.nco] = clock_ + ins.range->length();
            nco.active = false;
        }
        for (std::size_t n = 0; n < duration; ++n) {
            out.i_samples[base + n] = static_cast<std::int32_t>(std::clamp(acc_i[n], rail_lo, rail_hi));
            out.q_samples[base + n] = static_cast<std::int32_t>(std::clamp(acc_q[n], rail_lo, rail_hi));
        }
        clock_ += duration;
        i = j;
    }
    return out;
}

bool Transmitter::sweep_trigger() {
    if (!image_ || list_index_ + 1 >= image_->lists.size()) {
        return false;
    }
    ++list_index_;
    return true;
}

BasebandWaveform execute(const MemoryImage& image, const TxConfig& cfg) {
    Transmitter tx(cfg);
    tx.load(image);
    BasebandWaveform out = tx.execute_trigger();
    while (tx.sweep_trigger()) {
        out.append(tx.execute_trigger());
    }
    return out;
}

BasebandWaveform execute(const InstructionList& list,
                         const std::array<InstructionTable, kBanks>& tables,
                         const EnvelopeMemory& envelope,
                         const std::array<std::array<NcoConfig, kNcosPerBank>, kBanks>& ncos,
                         const TxConfig& cfg) {
    MemoryImage image;
    image.amp_bits = cfg.amp_bits;
    image.phase_mod_bits = cfg.phase_mod_bits;
    image.ncos = ncos;
    image.envelope = envelope;
    image.tables = tables;
    image.lists.push_back(list);
    return execute(image, cfg);
}

// ---------------------------------------------------------------------------
// Binary image

namespace {

class Writer {
public:
    template <typename T>
    void put(T value) {
        for (std::size_t k = 0; k < sizeof(T); ++k) {
            bytes.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * k)));
        }
    }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        if (pos_ + sizeof(T) > bytes_.size()) {
            throw ParseError(std::string("truncated image while reading ") + what + " at byte offset " +
                                 std::to_string(pos_),
                             pos_);
        }
        std::uint64_t v = 0;
        for (std::size_t k = 0; k < sizeof(T); ++k) {
            v |= static_cast<std::uint64_t>(bytes_[pos_ + k]) << (8 * k);
        }
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    [[noreturn]] void fail(const std::string& what, std::size_t at) const {
        throw ParseError(what + " at byte offset " + std::to_string(at), at);
    }
    std::size_t pos() const { return pos_; }
    std::size_t size() const { return bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::uint32_t h = 2166136261u;
    for (auto b : bytes) {
        h ^= b;
        h *= 16777619u;
    }
    return h;
}

}  // namespace

std::vector<std::uint8_t> serialize(const MemoryImage& image) {
    Writer w;
    for (char c : kImageMagic) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(c));
    }
    w.put<std::uint16_t>(kImageVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(image.amp_bits));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(image.phase_mod_bits));
    for (const auto& bank : image.ncos) {
        for (const auto& nco : bank) {
            w.put<std::uint32_t>(nco.ftw);
            w.put<std::uint32_t>(nco.ref_phase);
        }
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(image.envelope.size()));
    for (const auto& e : image.envelope.entries()) {
        w.put<std::int32_t>(e.amplitude);
        w.put<std::uint32_t>(e.phase_mod);
    }
    for (const auto& table : image.tables) {
        for (std::size_t k = 0; k < kNcosPerBank; ++k) {
            const auto slots = table.slots(k);
            w.put<std::uint8_t>(static_cast<std::uint8_t>(slots.size()));
            for (const auto& ins : slots) {
                const std::uint8_t flags = (ins.range ? 1 : 0) | (ins.phase_update ? 2 : 0);
                w.put<std::uint8_t>(flags);
                if (ins.range) {
                    w.put<std::uint32_t>(ins.range->start);
                    w.put<std::uint32_t>(ins.range->stop);
                }
                if (ins.phase_update) {
                    w.put<std::uint32_t>(*ins.phase_update);
                }
            }
        }
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(image.lists.size()));
    for (const auto& list : image.lists) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(list.size()));
        for (const auto& ref : list) {
            const std::uint32_t word = static_cast<std::uint32_t>(ref.bank) | (static_cast<std::uint32_t>(ref.nco) << 1) |
                                       (static_cast<std::uint32_t>(ref.slot) << 5) |
                                       (static_cast<std::uint32_t>(ref.concurrent) << 8);
            w.put<std::uint32_t>(word);
        }
    }
    w.put<std::uint32_t>(fnv1a(w.bytes));
    return std::move(w.bytes);
}

MemoryImage parse_image(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    for (std::size_t k = 0; k < sizeof(kImageMagic); ++k) {
        const std::size_t at = r.pos();
        if (r.get<std::uint8_t>("magic") != static_cast<std::uint8_t>(kImageMagic[k])) {
            r.fail("bad magic", at);
        }
    }
    {
        const std::size_t at = r.pos();
        const auto version = r.get<std::uint16_t>("version");
        if (version != kImageVersion) {
            r.fail("unsupported image version " + std::to_string(version), at);
        }
    }
    MemoryImage image;
    image.amp_bits = r.get<std::uint8_t>("amp_bits");
    image.phase_mod_bits = r.get<std::uint8_t>("phase_mod_bits");
    for (auto& bank : image.ncos) {
        for (auto& nco : bank) {
            nco.ftw = r.get<std::uint32_t>("NCO tuning word");
            nco.ref_phase = r.get<std::uint32_t>("NCO reference phase");
        }
    }
    {
        const std::size_t at = r.pos();
        const auto count = r.get<std::uint32_t>("envelope length");
        if (count > kEnvelopeCapacity) {
            r.fail("envelope length " + std::to_string(count) + " exceeds capacity " +
                       std::to_string(kEnvelopeCapacity),
                   at);
        }
        for (std::uint32_t n = 0; n < count; ++n) {
            EnvelopeEntry e;
            e.amplitude = r.get<std::int32_t>("envelope amplitude");
            e.phase_mod = r.get<std::uint32_t>("envelope phase");
            image.envelope.write(n, e);
        }
    }
    for (auto& table : image.tables) {
        for (std::size_t k = 0; k < kNcosPerBank; ++k) {
            const std::size_t at = r.pos();
            const auto count = r.get<std::uint8_t>("table size");
            if (count > kTableCapacity) {
                r.fail("table of " + std::to_string(count) + " instructions exceeds capacity", at);
            }
            for (std::uint8_t s = 0; s < count; ++s) {
                const std::size_t flag_at = r.pos();
                const auto flags = r.get<std::uint8_t>("instruction flags");
                if (flags & ~3u) {
                    r.fail("unknown instruction flags", flag_at);
                }
                Instruction ins;
                ins.nco = static_cast<std::uint8_t>(k);
                if (flags & 1) {
                    EnvelopeRange range;
                    range.start = r.get<std::uint32_t>("burst start");
                    range.stop = r.get<std::uint32_t>("burst stop");
                    ins.range = range;
                }
                if (flags & 2) {
                    ins.phase_update = r.get<std::uint32_t>("phase update");
                }
                table.add(ins);
            }
        }
    }
    {
        const auto n_lists = r.get<std::uint32_t>("list count");
        for (std::uint32_t li = 0; li < n_lists; ++li) {
            const std::size_t at = r.pos();
            const auto count = r.get<std::uint32_t>("list length");
            if (count > kListCapacity) {
                r.fail("instruction list of " + std::to_string(count) + " entries exceeds capacity", at);
            }
            InstructionList list;
            for (std::uint32_t n = 0; n < count; ++n) {
                const std::size_t ref_at = r.pos();
                const auto word = r.get<std::uint32_t>("list entry");
                if (word >> 9) {
                    r.fail("malformed list entry", ref_at);
                }
                InstructionRef ref;
                ref.bank = static_cast<std::uint8_t>(word & 1);
                ref.nco = static_cast<std::uint8_t>((word >> 1) & 0xF);
                ref.slot = static_cast<std::uint8_t>((word >> 5) & 0x7);
                ref.concurrent = (word >> 8) & 1;
                list.push_back(ref);
            }
            image.lists.push_back(std::move(list));
        }
    }
    const std::size_t body = r.pos();
    const auto stored = r.get<std::uint32_t>("checksum");
    if (stored != fnv1a(bytes.first(body))) {
        r.fail("checksum mismatch", body);
    }
    if (r.pos() != r.size()) {
        r.fail("trailing bytes after image", r.pos());
    }
    try {
        validate(image);
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), body);
    }
    return image;
}

MemoryImage load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image file '" + path + "'");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_image(bytes);
}

void save_image(const MemoryImage& image, const std::string& path) {
    const auto bytes = serialize(image);
    write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

std::string hexdump(std::span<const std::uint8_t> bytes) {
    std::ostringstream out;
    for (std::size_t row = 0; row < bytes.size(); row += 16) {
        out << std::hex << std::setw(8) << std::setfill('0') << row << "  ";
        for (std::size_t k = 0; k < 16; ++k) {
            if (row + k < bytes.size()) {
                out << std::setw(2) << static_cast<unsigned>(bytes[row + k]) << ' ';
            } else {
                out << "   ";
            }
        }
        out << " |";
        for (std::size_t k = 0; k < 16 && row + k < bytes.size(); ++k) {
            const char c = static_cast<char>(bytes[row + k]);
            out << (c >= 32 && c < 127 ? c : '.');
        }
        out << "|\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Listing
//
//   .format amp_bits=10 phase_mod_bits=10
//   .nco b0.n0 ftw=100663 ref=0
//   .env 0 x5000 amp=511 pm=0
//   .ins b0.n0.s0 burst=0..4999 phase=1048576
//   .list
//     b0.n0.s0              ; burst 0..4999, 5000 samples
//     & b1.n0.s0
//
// Envelope points are run-length encoded. Everything after ';' is a comment.

std::string disassemble(const MemoryImage& image, const TxConfig& cfg) {
    std::ostringstream out;
    if (image.envelope.empty() && image.lists.empty() && image.tables[0].total() + image.tables[1].total() == 0) {
        return {};
    }
    out << ".format amp_bits=" << image.amp_bits << " phase_mod_bits=" << image.phase_mod_bits << "\n";
    for (std::size_t b = 0; b < kBanks; ++b) {
        for (std::size_t k = 0; k < kNcosPerBank; ++k) {
            const auto& nco = image.ncos[b][k];
            if (nco.ftw == 0 && nco.ref_phase == 0) {
                continue;
            }
            out << ".nco b" << b << ".n" << k << " ftw=" << nco.ftw << " ref=" << nco.ref_phase << "  ; "
                << std::fixed << std::setprecision(6) << ftw_to_offset(nco.ftw, cfg.f_clk) / 1e6 << " MHz\n";
            out.unsetf(std::ios::fixed);
        }
    }
    const auto env = image.envelope.entries();
    for (std::size_t a = 0; a < env.size();) {
        std::size_t run = 1;
        while (a + run < env.size() && env[a + run] == env[a]) {
            ++run;
        }
        out << ".env " << a << " x" << run << " amp=" << env[a].amplitude << " pm=" << env[a].phase_mod << "\n";
        a += run;
    }
    auto describe = [&](const Instruction& ins) {
        std::ostringstream d;
        if (ins.range) {
            d << "burst=" << ins.range->start << ".." << ins.range->stop;
        }
        if (ins.phase_update) {
            d << (ins.range ? " " : "") << "phase=" << *ins.phase_update;
        }
        return d.str();
    };
    for (std::size_t b = 0; b < kBanks; ++b) {
        for (std::size_t k = 0; k < kNcosPerBank; ++k) {
            const auto slots = image.tables[b].slots(k);
            for (std::size_t s = 0; s < slots.size(); ++s) {
                out << ".ins b" << b << ".n" << k << ".s" << s << " " << describe(slots[s]) << "\n";
            }
        }
    }
    for (const auto& list : image.lists) {
        out << ".list\n";
        for (const auto& ref : list) {
            std::ostringstream tag;
            tag << (ref.concurrent ? "& " : "") << "b" << int(ref.bank) << ".n" << int(ref.nco) << ".s"
                << int(ref.slot);
            out << "  " << std::left << std::setw(14) << tag.str() << std::right << "; ";
            const auto& ins = image.tables[ref.bank].at(ref.nco, ref.slot);
            if (ins.range) {
                const double us = static_cast<double>(ins.duration()) / cfg.f_clk * 1e6;
                out << "burst " << ins.range->start << ".." << ins.range->stop << ", " << ins.duration()
                    << " samples (" << us << " us)";
            }
            if (ins.phase_update) {
                out << (ins.range ? ", " : "") << "phase +" << *ins.phase_update;
            }
            out << "\n";
        }
    }
    return out.str();
}

namespace {

struct LineCursor {
    std::string text;
    std::size_t line;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("listing line " + std::to_string(line) + ": " + what, line);
    }
};

std::uint64_t parse_uint(const LineCursor& cur, const std::string& token) {
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
        cur.fail("expected an unsigned integer, got '" + token + "'");
    }
    try {
        return std::stoull(token);
    } catch (const std::exception&) {
        cur.fail("integer out of range: '" + token + "'");
    }
}

std::int64_t parse_int(const LineCursor& cur, const std::string& token) {
    if (!token.empty() && token[0] == '-') {
        return -static_cast<std::int64_t>(parse_uint(cur, token.substr(1)));
    }
    return static_cast<std::int64_t>(parse_uint(cur, token));
}

std::string value_of(const LineCursor& cur, const std::string& token, const std::string& key) {
    if (token.rfind(key + "=", 0) != 0) {
        cur.fail("expected '" + key + "=...', got '" + token + "'");
    }
    return token.substr(key.size() + 1);
}

// Parses "b<bank>.n<nco>[.s<slot>]".
std::array<std::uint64_t, 3> parse_address(const LineCursor& cur, const std::string& token, bool with_slot) {
    std::array<std::uint64_t, 3> out{};
    std::istringstream in(token);
    std::string part;
    const char* prefixes = with_slot ? "bns" : "bn";
    const std::size_t parts = with_slot ? 3 : 2;
    for (std::size_t k = 0; k < parts; ++k) {
        if (!std::getline(in, part, '.') || part.empty() || part[0] != prefixes[k]) {
            cur.fail("malformed address '" + token + "'");
        }
        out[k] = parse_uint(cur, part.substr(1));
    }
    if (std::getline(in, part, '.')) {
        cur.fail("malformed address '" + token + "'");
    }
    if (out[0] >= kBanks || out[1] >= kNcosPerBank || out[2] >= kTableCapacity) {
        cur.fail("address out of range '" + token + "'");
    }
    return out;
}

}  // namespace

MemoryImage parse_listing(const std::string& text) {
    MemoryImage image;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    InstructionList* list = nullptr;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto semi = raw.find(';');
        LineCursor cur{semi == std::string::npos ? raw : raw.substr(0, semi), line_no};
        std::istringstream words(cur.text);
        std::vector<std::string> tok{std::istream_iterator<std::string>(words), {}};
        if (tok.empty()) {
            continue;
        }
        const std::string& head = tok[0];
        if (head == ".format") {
            if (tok.size() != 3) {
                cur.fail(".format takes amp_bits= and phase_mod_bits=");
            }
            image.amp_bits = static_cast<unsigned>(parse_uint(cur, value_of(cur, tok[1], "amp_bits")));
            image.phase_mod_bits = static_cast<unsigned>(parse_uint(cur, value_of(cur, tok[2], "phase_mod_bits")));
        } else if (head == ".nco") {
            if (tok.size() != 4) {
                cur.fail(".nco takes an address, ftw= and ref=");
            }
            const auto addr = parse_address(cur, tok[1], false);
            auto& nco = image.ncos[addr[0]][addr[1]];
            nco.ftw = static_cast<std::uint32_t>(parse_uint(cur, value_of(cur, tok[2], "ftw")));
            nco.ref_phase = static_cast<std::uint32_t>(parse_uint(cur, value_of(cur, tok[3], "ref")));
        } else if (head == ".env") {
            if (tok.size() != 5 || tok[2].empty() || tok[2][0] != 'x') {
                cur.fail(".env takes <addr> x<count> amp= pm=");
            }
            const auto addr = parse_uint(cur, tok[1]);
            const auto count = parse_uint(cur, tok[2].substr(1));
            if (addr != image.envelope.size()) {
                cur.fail("envelope runs must be contiguous (expected address " +
                         std::to_string(image.envelope.size()) + ")");
            }
            if (count == 0 || addr + count > kEnvelopeCapacity) {
                cur.fail("envelope run exceeds capacity " + std::to_string(kEnvelopeCapacity));
            }
            EnvelopeEntry e;
            e.amplitude = static_cast<std::int32_t>(parse_int(cur, value_of(cur, tok[3], "amp")));
            e.phase_mod = static_cast<std::uint32_t>(parse_uint(cur, value_of(cur, tok[4], "pm")));
            for (std::uint64_t n = 0; n < count; ++n) {
                image.envelope.write(addr + n, e);
            }
        } else if (head == ".ins") {
            if (tok.size() < 3 || tok.size() > 4) {
                cur.fail(".ins takes an address and burst= and/or phase=");
            }
            const auto addr = parse_address(cur, tok[1], true);
            Instruction ins;
            ins.nco = static_cast<std::uint8_t>(addr[1]);
            for (std::size_t k = 2; k < tok.size(); ++k) {
                if (tok[k].rfind("burst=", 0) == 0) {
                    const std::string span = tok[k].substr(6);
                    const auto dots = span.find("..");
                    if (dots == std::string::npos) {
                        cur.fail("burst range must be <start>..<stop>");
                    }
                    ins.range = EnvelopeRange{static_cast<std::uint32_t>(parse_uint(cur, span.substr(0, dots))),
                                              static_cast<std::uint32_t>(parse_uint(cur, span.substr(dots + 2)))};
                } else {
                    ins.phase_update = static_cast<std::uint32_t>(parse_uint(cur, value_of(cur, tok[k], "phase")));
                }
            }
            if (image.tables[addr[0]].size(addr[1]) != addr[2]) {
                cur.fail("table slots must be listed in order");
            }
            try {
                image.tables[addr[0]].add(ins);
            } catch (const CapacityError& e) {
                cur.fail(e.what());
            }
        } else if (head == ".list") {
            image.lists.emplace_back();
            list = &image.lists.back();
        } else {
            if (!list) {
                cur.fail("unknown directive '" + head + "'");
            }
            bool concurrent = false;
            std::size_t k = 0;
            if (tok[0] == "&") {
                concurrent = true;
                k = 1;
            }
            if (tok.size() != k + 1) {
                cur.fail("list entries take one address");
            }
            const auto addr = parse_address(cur, tok[k], true);
            try {
                list->push_back(InstructionRef{static_cast<std::uint8_t>(addr[0]), static_cast<std::uint8_t>(addr[1]),
                                               static_cast<std::uint8_t>(addr[2]), concurrent});
            } catch (const CapacityError& e) {
                cur.fail(e.what());
            }
        }
    }
    try {
        validate(image);
    } catch (const ValidationError& e) {
        throw ParseError(std::string("listing describes an invalid image: ") + e.what(), line_no);
    }
    return image;
}

}  // namespace cryoctl
