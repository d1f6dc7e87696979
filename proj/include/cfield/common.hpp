#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cfield {

// Status categories shared with the C API and the CLI exit codes.
enum class Status : int {
  Ok = 0,
  Internal = 1,
  Config = 2,
  Data = 3,
  Compat = 4,
};

class Error : public std::runtime_error {
 public:
  Error(Status status, const std::string& what) : std::runtime_error(what), status_(status) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

[[noreturn]] inline void fail_internal(const std::string& msg) { throw Error(Status::Internal, msg); }
[[noreturn]] inline void fail_config(const std::string& msg) { throw Error(Status::Config, msg); }
[[noreturn]] inline void fail_data(const std::string& msg) { throw Error(Status::Data, msg); }
[[noreturn]] inline void fail_compat(const std::string& msg) { throw Error(Status::Compat, msg); }

enum class LogLevel : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Global log level, initialized from the CF_LOG environment variable
// (error|warn|info|debug) on first use.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_msg(LogLevel level, const std::string& msg);
inline void log_error(const std::string& msg) { log_msg(LogLevel::Error, msg); }
inline void log_warn(const std::string& msg) { log_msg(LogLevel::Warn, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::Info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::Debug, msg); }

// When enabled, every forward op scans its output for NaN/Inf. Tests turn
// this on; training leaves it off for speed.
bool debug_checks();
void set_debug_checks(bool on);

// Worker count for batch-parallel training and per-file evaluation.
int thread_count();
void set_thread_count(int n);

}  // namespace cfield
