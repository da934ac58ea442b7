#ifndef UTIL_HEXDUMP_H
#define UTIL_HEXDUMP_H

#include <stddef.h>
#include <stdint.h>

/* Writes a hex rendering of data into dst; returns chars written or -1. */
int hexdump(const uint8_t *data, size_t len, char *dst, size_t cap);

#endif
