#include "hv/threads.hpp"

#include <cstdlib>
#include <string>

#include "hv/errors.hpp"

namespace hv {

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HECKE_VIRT_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v < 1) throw config_error("HECKE_VIRT_THREADS must be positive");
      return v;
    } catch (const config_error&) {
      throw;
    } catch (const std::exception&) {
      throw config_error("HECKE_VIRT_THREADS is not a number");
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

}  // namespace hv
