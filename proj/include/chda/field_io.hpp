#pragma once

#include <filesystem>
#include <iosfwd>

#include "chda/ensemble.hpp"
#include "chda/field.hpp"

namespace chda {

/// Binary field file, all little-endian:
///   magic "CHDA" (4 bytes), version u16, nx u32, ny u32,
///   dx f64, dy f64, thickness f64, then nx*ny f64 values row-major.
/// Ensemble file: magic "CHEN", count u32, then concatenated field records.
/// Round trips are bit-exact. Distinct errors: FormatError (magic/version),
/// DimensionError (bad header dims), TruncatedError (short payload).
inline constexpr std::uint16_t kFieldFormatVersion = 1;

void save_field(const LogPermField& f, const std::filesystem::path& path);
LogPermField load_field(const std::filesystem::path& path);

void write_field(const LogPermField& f, std::ostream& out);
LogPermField read_field(std::istream& in);

void save_ensemble(const Ensemble& e, const std::filesystem::path& path);
Ensemble load_ensemble(const std::filesystem::path& path);

/// CSV export, header `i,j,log10_k_mD`.
void export_field_csv(const LogPermField& f, const std::filesystem::path& path);

}  // namespace chda
