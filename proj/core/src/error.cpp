#include "matlift/error.hpp"

#include <atomic>
#include <thread>

#include "matlift/parallel.hpp"

namespace matlift {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kIndexOutOfRange: return "index_out_of_range";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kUnselectable: return "unselectable_material";
    case ErrorCode::kBackgroundClick: return "background_click";
    case ErrorCode::kConflict: return "conflict";
  }
  return "unknown";
}

namespace {
std::atomic<unsigned> g_thread_count{0};
}

void set_thread_count(unsigned n) { g_thread_count.store(n); }

unsigned thread_count() {
  const unsigned n = g_thread_count.load();
  if (n != 0) return n;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace matlift
