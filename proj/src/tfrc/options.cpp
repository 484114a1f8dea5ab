#include "ftfrc/tfrc/options.hpp"

namespace ftfrc::tfrc {

namespace {
bool known_option(std::uint8_t kind) {
  return kind >= static_cast<std::uint8_t>(SignalOption::Freeze) &&
         kind <= static_cast<std::uint8_t>(SignalOption::Unfrozen);
}
}  // namespace

std::string to_string(SignalOption o) {
  switch (o) {
    case SignalOption::Freeze: return "FREEZE";
    case SignalOption::Unfreeze: return "UNFREEZE";
    case SignalOption::Restoring: return "RESTORING";
    case SignalOption::Probing: return "PROBING";
    case SignalOption::Unfrozen: return "UNFROZEN";
  }
  return "UNKNOWN";
}

void encode_options(const std::vector<SignalOption>& opts,
                    std::vector<std::uint8_t>& out) {
  for (SignalOption o : opts) {
    out.push_back(static_cast<std::uint8_t>(o));
    out.push_back(2);  // total length including type and length bytes
  }
}

OptionDecodeResult decode_options(const std::uint8_t* data, std::size_t len) {
  OptionDecodeResult r;
  std::size_t i = 0;
  while (i < len) {
    const std::uint8_t kind = data[i];
    if (kind < 32) {  // single-byte option space
      ++r.skipped;
      ++i;
      continue;
    }
    if (i + 1 >= len) {
      r.ok = false;
      r.error_offset = i;
      r.error = "truncated option: missing length byte";
      return r;
    }
    const std::uint8_t opt_len = data[i + 1];
    if (opt_len < 2 || i + opt_len > len) {
      r.ok = false;
      r.error_offset = i;
      r.error = "malformed option length";
      return r;
    }
    if (known_option(kind) && opt_len == 2)
      r.options.push_back(static_cast<SignalOption>(kind));
    else
      ++r.skipped;
    i += opt_len;
  }
  return r;
}

}  // namespace ftfrc::tfrc
