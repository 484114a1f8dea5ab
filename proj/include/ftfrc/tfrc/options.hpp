#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ftfrc::tfrc {

// Connection-level and rate-control-level signalling options. Encoded as
// type-length pairs; see docs/formats.md for the byte layout.
enum class SignalOption : std::uint8_t {
  Freeze = 128,
  Unfreeze = 129,
  Restoring = 130,
  Probing = 131,
  Unfrozen = 132,
};

std::string to_string(SignalOption o);

// Appends the TLV encoding of `opts` to `out`.
void encode_options(const std::vector<SignalOption>& opts,
                    std::vector<std::uint8_t>& out);

struct OptionDecodeResult {
  std::vector<SignalOption> options;  // known options, in wire order
  std::size_t skipped = 0;            // unknown options skipped
  bool ok = true;
  std::size_t error_offset = 0;  // valid when !ok
  std::string error;
};

// Walks an option area. Unknown single-byte types (< 32) are skipped as one
// byte; unknown TLV types are skipped via their length byte. Truncated or
// malformed lengths stop the walk with ok = false and the offending offset.
OptionDecodeResult decode_options(const std::uint8_t* data, std::size_t len);

inline OptionDecodeResult decode_options(const std::vector<std::uint8_t>& b) {
  return decode_options(b.data(), b.size());
}

}  // namespace ftfrc::tfrc
