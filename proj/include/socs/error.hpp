#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace socs {

enum class ErrorCode {
  InvalidArgument,
  NoSuchInterface,
  PermissionDenied,
  CaptureBackendUnavailable,
  UnreadableFile,
  UnknownFormat,
  NonMonotonicTimestamps,
  MalformedInput,
  MissingAsset,
  CorruptAsset,
  InvalidConfig,
  AudioDeviceUnavailable,
  Io,
};

std::string_view to_string(ErrorCode code);

// Domain error carrying a machine-readable code. Everything the library
// throws on bad input or environment failures is an Error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace socs
