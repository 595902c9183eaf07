#pragma once
// Field snapshot files: a text header terminated by "end", then the payload.
//
//   muskat-field 1
//   nodes <N>
//   spacing <h>
//   extent <L/2>
//   policy compact-support|periodic
//   time <t>
//   encoding binary|csv
//   end
//
// binary: N*N little-endian IEEE doubles, row-major (first index slowest).
// csv: N lines of N comma-separated values, 17 significant digits.

#include <filesystem>
#include <iosfwd>

#include "muskat/field.hpp"

namespace muskat {

enum class SnapshotEncoding { binary, csv };

inline constexpr int kSnapshotFormatVersion = 1;

void write_snapshot(std::ostream& out, const GridField& f, SnapshotEncoding enc = SnapshotEncoding::binary);
void write_snapshot(const std::filesystem::path& path, const GridField& f,
                    SnapshotEncoding enc = SnapshotEncoding::binary);
// Throws std::runtime_error on malformed or truncated input.
GridField read_snapshot(std::istream& in);
GridField read_snapshot(const std::filesystem::path& path);

}  // namespace muskat
