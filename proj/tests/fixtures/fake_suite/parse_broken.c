#include <stddef.h>
#include <stdint.h>

#include "codec/message.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
  message_t m;
  if (size > msg_parse(data, size, &m
  return 0;
