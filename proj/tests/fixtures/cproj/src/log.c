#include "util/log.h"

static unsigned long lines;

void log_line(const char *msg) {
  (void)msg;
  lines++;
}

unsigned long log_count(void) {
  return lines;
}
