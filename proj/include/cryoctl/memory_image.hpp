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

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cryoctl/controller.hpp"

namespace cryoctl {

struct NcoConfig {
    std::uint32_t ftw = 0;
    std::uint32_t ref_phase = 0;  // value loaded at reset

    friend bool operator==(const NcoConfig&, const NcoConfig&) = default;
};

/// Everything the host uploads before a run: NCO configuration, envelope
/// memory, one instruction table per bank, and one or more instruction
/// lists. List 0 runs on the first execute trigger; each sweep trigger
/// loads the next.
struct MemoryImage {
    unsigned amp_bits = 10;
    unsigned phase_mod_bits = 10;
    std::array<std::array<NcoConfig, kNcosPerBank>, kBanks> ncos{};
    EnvelopeMemory envelope;
    std::array<InstructionTable, kBanks> tables{};
    std::vector<InstructionList> lists;

    std::size_t instruction_count() const;

    friend bool operator==(const MemoryImage&, const MemoryImage&) = default;
};

/// Checks table references, envelope bounds and list grouping. Throws a
/// ValidationError that lists every problem found.
void validate(const MemoryImage& image);

/// One transmitter: two banks of 16 NCOs sharing a trigger.
class Transmitter {
public:
    explicit Transmitter(TxConfig cfg);

    void load(const MemoryImage& image);
    /// Clears the accumulators, restores reference phases, rewinds to list 0
    /// and time zero.
    void reset();
    /// Runs the current list. Accumulators keep running across triggers.
    BasebandWaveform execute_trigger();
    /// Loads the next list; false when none is left.
    bool sweep_trigger();

    const NcoState& nco(std::size_t bank, std::size_t index) const { return ncos_.at(bank).at(index); }
    std::size_t current_list() const { return list_index_; }
    std::uint64_t clock() const { return clock_; }
    const TxConfig& config() const { return cfg_; }

private:
    void advance_to(std::size_t bank, std::size_t index, std::uint64_t sample);

    TxConfig cfg_;
    PhaseToAmplitude pac_;
    const MemoryImage* image_ = nullptr;
    MemoryImage owned_;
    std::array<std::array<NcoState, kNcosPerBank>, kBanks> ncos_{};
    std::array<std::array<std::uint64_t, kNcosPerBank>, kBanks> synced_{};
    std::size_t list_index_ = 0;
    std::uint64_t clock_ = 0;
};

/// Resets, then executes every list back to back (execute, sweep, ...).
BasebandWaveform execute(const MemoryImage& image, const TxConfig& cfg);

/// Executes a single list against the given memories starting from reset.
BasebandWaveform execute(const InstructionList& list,
                         const std::array<InstructionTable, kBanks>& tables,
                         const EnvelopeMemory& envelope,
                         const std::array<std::array<NcoConfig, kNcosPerBank>, kBanks>& ncos,
                         const TxConfig& cfg);

// Binary image format (all integers little endian):
//   magic "CRYOIMG\0" | u16 version | u8 amp_bits | u8 phase_mod_bits
//   NCO section:      32 x (u32 ftw, u32 ref_phase), bank-major
//   envelope section: u32 count | count x (i32 amplitude, u32 phase_mod)
//   table section:    for bank, nco: u8 count | count x instruction
//                     instruction = u8 flags (bit0 range, bit1 phase)
//                                   [u32 start, u32 stop] [u32 phase_update]
//   list section:     u32 n_lists | per list: u32 count | count x u32 ref
//                     ref = bank | nco << 1 | slot << 5 | concurrent << 8
//   trailer:          u32 FNV-1a checksum of all preceding bytes
inline constexpr char kImageMagic[8] = {'C', 'R', 'Y', 'O', 'I', 'M', 'G', '\0'};
inline constexpr std::uint16_t kImageVersion = 1;

std::vector<std::uint8_t> serialize(const MemoryImage& image);
/// Throws ParseError carrying the byte offset of the first bad field.
MemoryImage parse_image(std::span<const std::uint8_t> bytes);

MemoryImage load_image(const std::string& path);
void save_image(const MemoryImage& image, const std::string& path);

/// Human-readable listing; parse_listing() reads it back into an equivalent
/// image.
std::string disassemble(const MemoryImage& image, const TxConfig& cfg = {});
MemoryImage parse_listing(const std::string& text);

/// Hex dump of the serialized image, 16 bytes per row.
std::string hexdump(std::span<const std::uint8_t> bytes);

}  // namespace cryoctl
