#include <stdio.h>

#include "codec/message.h"
#include "util/hexdump.h"

static int run_sample(const uint8_t *data, size_t len) {
  message_t m;
  char text[256];
  if (msg_parse(data, len, &m) != 0) return 1;
  if (hexdump(m.payload, m.len, text, sizeof(text)) < 0) return 1;
  puts(text);
  return 0;
}

int main(void) {
  static const uint8_t sample[] = {0x01, 0x00, 'h', 'i'};
  uint8_t wire[128];
  message_t m;
  if (run_sample(sample, sizeof(sample)) != 0) return 1;
  if (msg_parse(sample, sizeof(sample), &m) != 0) return 1;
  if (msg_render(&m, wire, sizeof(wire)) < 0) return 1;
  return 0;
}
