#pragma once

// Mode-bank persistence.
//
// Binary file, little-endian:
//   offset  0  char[4]  magic "QMB1"
//   offset  4  u32      version (1)
//   offset  8  u32[3]   grid dims
//   offset 20  f64      grid spacing
//   offset 28  u32      mode count
//   offset 32  u8       operator variant (0 nonmagnetic, 1 magnetic)
//   offset 33  body: per mode one f64 frequency followed by the 3N f64
//              components of g (x block, then y, then z; x fastest)
//
// A JSON sidecar at <path>.json carries the medium descriptor(s) and the
// Gram / residual metadata.  h is rebuilt from g and the medium on load.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "mqed/modes.hpp"

namespace mqed {

class BankFormatError : public std::runtime_error {
 public:
  BankFormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  [[nodiscard]] std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

inline constexpr std::uint32_t kBankVersion = 1;
inline constexpr std::size_t kBankHeaderSize = 33;

void save_bank(const ModeBank& bank, const std::filesystem::path& path);
[[nodiscard]] ModeBank load_bank(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace mqed
