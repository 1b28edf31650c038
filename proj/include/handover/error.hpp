#pragma once

#include <stdexcept>
#include <string>

namespace handover {

// Every failure surfaced by the library carries one of these codes so the
// CLI can map it to a stable exit code and tests can match on the name.
enum class errc {
  invalid_argument,
  io,
  format,
  region_empty,
  reply_parse,
  no_feasible_grasp,
  degenerate_scoring,
  no_feasible_point,
  degenerate_geometry,
  unknown_kind,
  cache_miss,
  transport,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::invalid_argument: return "InvalidArgument";
    case errc::io: return "IoError";
    case errc::format: return "FormatError";
    case errc::region_empty: return "RegionEmpty";
    case errc::reply_parse: return "ReplyParse";
    case errc::no_feasible_grasp: return "NoFeasibleGrasp";
    case errc::degenerate_scoring: return "DegenerateScoring";
    case errc::no_feasible_point: return "NoFeasiblePoint";
    case errc::degenerate_geometry: return "DegenerateGeometry";
    case errc::unknown_kind: return "UnknownKind";
    case errc::cache_miss: return "CacheMiss";
    case errc::transport: return "Transport";
  }
  return "Unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const { return code_; }
  const char* name() const { return errc_name(code_); }

  // Exit-code contract: 0 success, 2 domain error, 3 external-service error.
  int exit_code() const {
    return (code_ == errc::transport || code_ == errc::cache_miss) ? 3 : 2;
  }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

inline void require(bool ok, errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace handover
