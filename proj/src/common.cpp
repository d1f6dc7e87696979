#include "cfield/common.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <thread>

namespace cfield {

namespace {

LogLevel level_from_env() {
  const char* env = std::getenv("CF_LOG");
  if (env == nullptr) return LogLevel::Warn;
  if (std::strcmp(env, "error") == 0) return LogLevel::Error;
  if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
  if (std::strcmp(env, "info") == 0) return LogLevel::Info;
  if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
  return LogLevel::Warn;
}

std::atomic<int>& level_store() {
  static std::atomic<int> level{static_cast<int>(level_from_env())};
  return level;
}

std::atomic<bool> g_debug_checks{false};
std::atomic<int> g_threads{0};

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(level_store().load()); }

void set_log_level(LogLevel level) { level_store().store(static_cast<int>(level)); }

void log_msg(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > level_store().load()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[cf:%s] %s\n", names[static_cast<int>(level)], msg.c_str());
}

bool debug_checks() { return g_debug_checks.load(std::memory_order_relaxed); }

void set_debug_checks(bool on) { g_debug_checks.store(on); }

int thread_count() {
  int n = g_threads.load();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_thread_count(int n) { g_threads.store(n > 0 ? n : 0); }

}  // namespace cfield
