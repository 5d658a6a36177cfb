#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpq {

/// Failure categories shared by every layer of the library.
enum class Errc {
  encoding_overflow,  ///< a length does not fit the 32-bit count of the wire format
  truncated,          ///< input ended before a complete value or frame
  malformed_payload,  ///< bytes do not follow the value grammar
  protocol,           ///< bad frame magic/version or an unexpected message kind
  transport,          ///< a peer or the underlying stream went away
  startup,            ///< the cluster could not be assembled
  configuration,      ///< no handler registered for a job type
  lifecycle,          ///< operation called in the wrong supervision phase
  application,        ///< a job handler rejected its input or threw
  usage,              ///< bad command-line arguments
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mpq
