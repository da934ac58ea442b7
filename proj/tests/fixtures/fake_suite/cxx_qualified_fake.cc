#include <cstddef>
#include <cstdint>

#include "codec/message.h"

namespace shim {

int msg_parse(const uint8_t *data, size_t len, message_t *out) {
  (void)data;
  (void)len;
  (void)out;
  return 0;
}

}  // namespace shim

extern "C" int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
  message_t m;
  shim::msg_parse(data, size, &m);
  return 0;
}
