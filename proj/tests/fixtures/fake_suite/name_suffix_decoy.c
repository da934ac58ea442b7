#include <stddef.h>
#include <stdint.h>

#include "codec/message.h"

/* Local helper whose name embeds the target's. */
static int msg_parse_checked(const uint8_t *data, size_t len, message_t *out) {
  if (!data || !out) return -1;
  return msg_parse(data, len, out);
}

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
  message_t m;
  msg_parse_checked(data, size, &m);
  return 0;
}
