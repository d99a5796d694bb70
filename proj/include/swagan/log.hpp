#pragma once

#include <functional>
#include <iostream>
#include <string>

namespace swagan {

using LogSink = std::function<void(const std::string&)>;

namespace detail {
inline LogSink& log_sink() {
  static LogSink sink = [](const std::string& line) { std::cerr << line << '\n'; };
  return sink;
}
}  // namespace detail

/// Replaces where diagnostics go (stderr by default). Returns the old sink.
inline LogSink set_log_sink(LogSink sink) {
  auto old = std::move(detail::log_sink());
  detail::log_sink() = std::move(sink);
  return old;
}

inline void log_info(const std::string& msg) { detail::log_sink()(msg); }
inline void log_warning(const std::string& msg) { detail::log_sink()("warning: " + msg); }

}  // namespace swagan
