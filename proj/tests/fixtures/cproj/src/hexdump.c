#include "util/hexdump.h"

static const char digits[] = "0123456789abcdef";

int hexdump(const uint8_t *data, size_t len, char *dst, size_t cap) {
  size_t i;
  if (!data || !dst || cap < len * 2 + 1) return -1;
  for (i = 0; i < len; i++) {
    dst[i * 2] = digits[data[i] >> 4];
    dst[i * 2 + 1] = digits[data[i] & 0x0F];
  }
  dst[len * 2] = '\0';
  return (int)(len * 2);
}
