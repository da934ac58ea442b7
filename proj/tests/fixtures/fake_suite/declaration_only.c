#include <stddef.h>
#include <stdint.h>

typedef struct message message_t;

int msg_parse(const uint8_t *data, size_t len, message_t *out);

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
  msg_parse(data, size, 0);
  return 0;
}
